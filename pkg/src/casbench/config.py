"""Declarative run configuration.

A run config is a single JSON object (documented in the README) so ablation
grids stay diffable; CLI flags override individual fields. Validation errors
name the precise field path.
"""

import json
from dataclasses import dataclass, field
from typing import Optional

from .corpus import DATASETS
from .episodes import AblationFlags, LoopConfig
from .errors import ConfigError
from .sandbox import ExecutionLimits


@dataclass(frozen=True)
class BackendConfig:
    kind: str  # live | replay
    base_url: str = ""
    cassette: str = ""
    timeout_s: float = 120.0
    max_retries: int = 3
    requests_per_second: float = 0.0  # 0 disables the shared token bucket
    burst: int = 1


@dataclass(frozen=True)
class RunConfig:
    corpus: str
    dataset: str
    backend: BackendConfig
    model: str
    flags: AblationFlags = field(default_factory=AblationFlags)
    loop: LoopConfig = field(default_factory=LoopConfig)
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    parallelism: int = 1
    record: bool = False
    record_cassette: str = ""
    worker_cmd: tuple = ()
    episode_log: str = "episodes.jsonl"
    report_path: Optional[str] = None
    oracle: bool = False


def _require(mapping, key, path):
    if key not in mapping:
        raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
    return mapping[key]


def _build(path, factory, kwargs):
    try:
        return factory(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from exc


def validate_config(raw: dict) -> RunConfig:
    """Turn a parsed config object into a validated RunConfig."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    corpus = _require(raw, "corpus", "")
    dataset = _require(raw, "dataset", "")
    if dataset not in DATASETS:
        raise ConfigError("dataset", f"unknown dataset {dataset!r}")
    model = _require(raw, "model", "")

    backend_raw = _require(raw, "backend", "")
    if not isinstance(backend_raw, dict):
        raise ConfigError("backend", "must be an object")
    kind = _require(backend_raw, "kind", "backend")
    if kind not in ("live", "replay"):
        raise ConfigError("backend.kind", f"must be live or replay, got {kind!r}")
    if kind == "live" and not backend_raw.get("base_url"):
        raise ConfigError("backend.base_url", "live backend needs a base_url")
    if kind == "replay" and not backend_raw.get("cassette"):
        raise ConfigError("backend.cassette", "replay backend needs a cassette path")
    backend = _build(
        "backend",
        BackendConfig,
        {
            "kind": kind,
            "base_url": backend_raw.get("base_url", ""),
            "cassette": backend_raw.get("cassette", ""),
            "timeout_s": backend_raw.get("timeout_s", 120.0),
            "max_retries": backend_raw.get("max_retries", 3),
            "requests_per_second": float(backend_raw.get("requests_per_second", 0.0)),
            "burst": int(backend_raw.get("burst", 1)),
        },
    )

    record = bool(raw.get("record", False))
    if record and kind != "live":
        raise ConfigError("record", "recording requires a live backend")
    if record and not raw.get("record_cassette"):
        raise ConfigError("record_cassette", "recording needs an output cassette path")

    flags_raw = raw.get("flags", {})
    if not isinstance(flags_raw, dict):
        raise ConfigError("flags", "must be an object")
    flags = _build(
        "flags",
        AblationFlags,
        {
            "self_debug": bool(flags_raw.get("self_debug", True)),
            "verification": bool(flags_raw.get("verification", True)),
            "symbolic": bool(flags_raw.get("symbolic", True)),
        },
    )

    limits_raw = raw.get("limits", {})
    if not isinstance(limits_raw, dict):
        raise ConfigError("limits", "must be an object")
    limits = _build(
        "limits",
        ExecutionLimits,
        {
            "wall_timeout_ms": int(limits_raw.get("wall_timeout_ms", 30_000)),
            "memory_limit_bytes": int(limits_raw.get("memory_limit_bytes", 1024**3)),
            "stdout_cap_bytes": int(limits_raw.get("stdout_cap_bytes", 65536)),
        },
    )

    loop_raw = raw.get("loop", {})
    if not isinstance(loop_raw, dict):
        raise ConfigError("loop", "must be an object")
    loop = _build(
        "loop",
        LoopConfig,
        {
            "model": model,
            "max_attempts": int(loop_raw.get("max_attempts", 3)),
            "limits": limits,
            "max_output_tokens": int(loop_raw.get("max_output_tokens", 4096)),
            "temperature": float(loop_raw.get("temperature", 0.0)),
            "prompt_mode": loop_raw.get("prompt_mode", "symcode"),
        },
    )

    parallelism = int(raw.get("parallelism", 1))
    if parallelism < 1:
        raise ConfigError("parallelism", "must be at least 1")

    worker_cmd = raw.get("worker_cmd", [])
    if worker_cmd and not (
        isinstance(worker_cmd, list) and all(isinstance(w, str) for w in worker_cmd)
    ):
        raise ConfigError("worker_cmd", "must be a list of strings")
    if loop.prompt_mode == "symcode" and not worker_cmd:
        raise ConfigError("worker_cmd", "script execution needs a sandbox worker command")

    return RunConfig(
        corpus=corpus,
        dataset=dataset,
        backend=backend,
        model=model,
        flags=flags,
        loop=loop,
        limits=limits,
        parallelism=parallelism,
        record=record,
        record_cassette=raw.get("record_cassette", ""),
        worker_cmd=tuple(worker_cmd),
        episode_log=raw.get("episode_log", "episodes.jsonl"),
        report_path=raw.get("report"),
        oracle=bool(raw.get("oracle", False)),
    )


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"config is not valid JSON: {exc}") from exc
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    return validate_config(raw)
