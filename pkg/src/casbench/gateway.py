"""Uniform completion interface over a live OpenAI-compatible HTTP backend
and a deterministic record/replay cassette backend.

Token usage always comes from the provider's usage report and is never
re-tokenized locally, so cross-provider token comparisons are approximate.
Cassettes are line-delimited JSON ({key, request_digest, text, prompt_tokens,
completion_tokens}) so fixtures stay diffable and committable.
"""

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Optional

import requests

from .errors import AuthError, CassetteMiss, ProviderError, SchemaError, TransportError

API_KEY_ENV = "CASBENCH_API_KEY"

BACKEND_LIVE = "live"
BACKEND_REPLAY = "replay"

_RETRYABLE_STATUS = frozenset({408, 429, 500, 502, 503, 504})


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    messages: tuple
    max_output_tokens: int = 4096
    temperature: float = 0.0
    request_tag: str = ""

    def __post_init__(self):
        if not self.messages:
            raise ValueError("request needs at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be system or user")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    prompt_tokens: int
    completion_tokens: int
    latency_ms: int
    backend: str

    def __post_init__(self):
        if self.backend == BACKEND_LIVE and self.text and self.completion_tokens <= 0:
            raise ValueError("live completions with text must report completion tokens")


def cassette_key(request: CompletionRequest) -> str:
    """Stable content hash over the fields that determine a completion.

    Insensitive to request_tag and field ordering; any one-byte change to a
    message flips the key.
    """
    payload = {
        "model": request.model,
        "temperature": request.temperature,
        "max_output_tokens": request.max_output_tokens,
        "messages": [[m.role, m.content] for m in request.messages],
    }
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _request_digest(request: CompletionRequest) -> str:
    """Short human-auditable digest of the rendered message text."""
    joined = "\n".join(m.content for m in request.messages)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


class TokenBucket:
    """Shared rate limiter: capacity tokens, refilled at rate per second."""

    def __init__(self, rate: float, capacity: float):
        if rate <= 0 or capacity <= 0:
            raise ValueError("rate and capacity must be positive")
        self.rate = rate
        self.capacity = capacity
        self._tokens = capacity
        self._stamp = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self):
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._stamp) * self.rate)
                self._stamp = now
                if self._tokens >= 1:
                    self._tokens -= 1
                    return
                wait = (1 - self._tokens) / self.rate
            time.sleep(wait)


class ReplayBackend:
    """Read-only lookup over a recorded cassette; deterministic by design."""

    kind = BACKEND_REPLAY

    def __init__(self, cassette_path):
        self.path = cassette_path
        self._entries = {}
        with open(cassette_path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SchemaError(
                        f"invalid cassette JSON: {exc.msg}", line=lineno, path=cassette_path
                    ) from exc
                if "key" not in entry or "text" not in entry:
                    raise SchemaError(
                        "cassette entry needs key and text", line=lineno, path=cassette_path
                    )
                self._entries[entry["key"]] = entry

    def __len__(self):
        return len(self._entries)

    def complete(self, request: CompletionRequest) -> CompletionResult:
        key = cassette_key(request)
        entry = self._entries.get(key)
        if entry is None:
            raise CassetteMiss(key, request.request_tag)
        return CompletionResult(
            text=entry["text"],
            prompt_tokens=int(entry.get("prompt_tokens", 0)),
            completion_tokens=int(entry.get("completion_tokens", 0)),
            latency_ms=0,
            backend=BACKEND_REPLAY,
        )


class LiveBackend:
    """OpenAI-compatible chat-completions client with retry and rate limiting.

    POSTs to <base_url>/chat/completions; the API key comes from the
    CASBENCH_API_KEY environment variable. Transient transport failures and
    retryable statuses back off exponentially up to max_retries.
    """

    kind = BACKEND_LIVE

    def __init__(
        self,
        base_url: str,
        timeout_s: float = 120.0,
        max_retries: int = 3,
        backoff_s: float = 1.0,
        rate_limiter: Optional[TokenBucket] = None,
        api_key: Optional[str] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.backoff_s = backoff_s
        self.rate_limiter = rate_limiter
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._session = requests.Session()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        payload = {
            "model": request.model,
            "messages": [{"role": m.role, "content": m.content} for m in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        url = f"{self.base_url}/chat/completions"
        delay = self.backoff_s
        last_error = "no attempt made"
        for attempt in range(self.max_retries + 1):
            if self.rate_limiter is not None:
                self.rate_limiter.acquire()
            start = time.monotonic()
            try:
                response = self._session.post(
                    url, json=payload, headers=headers, timeout=self.timeout_s
                )
            except requests.RequestException as exc:
                last_error = f"transport failure: {exc}"
            else:
                if response.status_code == 200:
                    latency_ms = int((time.monotonic() - start) * 1000)
                    return self._parse(response, request, latency_ms)
                if response.status_code in (401, 403):
                    raise AuthError(
                        f"authentication rejected (HTTP {response.status_code})",
                        request.request_tag,
                    )
                if response.status_code not in _RETRYABLE_STATUS:
                    raise ProviderError(
                        f"non-retryable HTTP {response.status_code}: {response.text[:200]}",
                        request.request_tag,
                    )
                last_error = f"retryable HTTP {response.status_code}"
            if attempt < self.max_retries:
                time.sleep(delay)
                delay *= 2
        raise TransportError(
            f"retries exhausted after {self.max_retries + 1} attempts: {last_error}",
            request.request_tag,
        )

    def _parse(self, response, request, latency_ms) -> CompletionResult:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
            usage = body["usage"]
            prompt_tokens = int(usage["prompt_tokens"])
            completion_tokens = int(usage["completion_tokens"])
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(
                f"unusable completion body: {exc}", request.request_tag
            ) from exc
        return CompletionResult(
            text=text,
            prompt_tokens=prompt_tokens,
            completion_tokens=completion_tokens,
            latency_ms=latency_ms,
            backend=BACKEND_LIVE,
        )


class RecordingBackend:
    """Wraps any backend, appending each completion to a cassette file."""

    def __init__(self, inner, cassette_out):
        self.inner = inner
        self.kind = inner.kind
        self.cassette_out = cassette_out
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        result = self.inner.complete(request)
        entry = {
            "key": cassette_key(request),
            "request_digest": _request_digest(request),
            "text": result.text,
            "prompt_tokens": result.prompt_tokens,
            "completion_tokens": result.completion_tokens,
        }
        line = json.dumps(entry, ensure_ascii=True, sort_keys=True)
        with self._lock:
            with open(self.cassette_out, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
        return result
