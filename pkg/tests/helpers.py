"""Shared test doubles: a scripted completion backend and a loopback
chat-completions stub server."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from casbench.gateway import CompletionResult


class ScriptedBackend:
    """Deterministic fake backend: completions keyed by attempt index, with
    optional per-problem overrides."""

    kind = "replay"

    def __init__(self, by_attempt, per_problem=None, tokens_per_completion=50):
        self.by_attempt = list(by_attempt)
        self.per_problem = per_problem or {}
        self.tokens = tokens_per_completion
        self.calls = []

    def complete(self, request):
        problem_id, _, index_text = request.request_tag.rpartition("#")
        index = int(index_text)
        self.calls.append(request.request_tag)
        sequence = self.per_problem.get(problem_id, self.by_attempt)
        text = sequence[min(index, len(sequence) - 1)]
        return CompletionResult(
            text=text,
            prompt_tokens=100,
            completion_tokens=self.tokens + index,
            latency_ms=0,
            backend="replay",
        )


class _CannedHandler(BaseHTTPRequestHandler):
    server_version = "StubLLM/1.0"

    def do_POST(self):  # noqa: N802 (http.server API)
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        plan = self.server.plan
        status, payload = plan(body, self)
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


def make_stub_server(plan):
    """Start a loopback chat-completions stub; plan(body, handler) returns
    (status, payload)."""
    server = ThreadingHTTPServer(("127.0.0.1", 0), _CannedHandler)
    server.plan = plan
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, f"http://127.0.0.1:{server.server_address[1]}/v1"
