"""The sandbox worker process.

Wire protocol: one JSON request {"script", "wall_timeout_ms",
"memory_limit_bytes"} arrives on stdin; exactly one JSON report {"ok",
"exc", "tb", "stdout", "duration_ms"} leaves on the file descriptor named by
--report-fd (default 3); the process then exits 0. A malformed request exits
nonzero without a report.

Guest stdout is captured in memory, so nothing the guest prints can reach
the report channel. Tracebacks are trimmed to the guest's own frames: the
repair loop should see the guest's error, not shim internals.
"""

import argparse
import io
import json
import math
import os
import resource
import sys
import time
import traceback
from contextlib import redirect_stdout

from .imports import ImportGuard

GUEST_FILENAME = "<guest>"


def _apply_limits(memory_limit_bytes: int, wall_timeout_ms: int) -> None:
    # soft limits only: the shim raises them again to build the report after
    # the guest is done, and the guest cannot (resource is not importable)
    if memory_limit_bytes > 0:
        resource.setrlimit(
            resource.RLIMIT_AS, (memory_limit_bytes, resource.RLIM_INFINITY)
        )
    cpu_seconds = max(1, math.ceil(wall_timeout_ms / 1000)) + 1
    resource.setrlimit(resource.RLIMIT_CPU, (cpu_seconds, cpu_seconds + 5))


def _lift_memory_limit() -> None:
    try:
        resource.setrlimit(
            resource.RLIMIT_AS, (resource.RLIM_INFINITY, resource.RLIM_INFINITY)
        )
    except (ValueError, OSError):
        pass


def _guest_traceback(exc: BaseException) -> str:
    """Format the exception with shim frames stripped: everything from the
    first frame inside the guest source down."""
    frames = traceback.extract_tb(exc.__traceback__)
    start = next(
        (i for i, frame in enumerate(frames) if frame.filename == GUEST_FILENAME), None
    )
    pieces = []
    if start is not None:
        pieces.append("Traceback (most recent call last):\n")
        pieces.extend(traceback.format_list(frames[start:]))
    pieces.extend(traceback.format_exception_only(type(exc), exc))
    return "".join(pieces).rstrip("\n")


def run_guest(request: dict) -> dict:
    """Execute the guest script from a parsed request and build the report."""
    script = request["script"]
    wall_timeout_ms = int(request.get("wall_timeout_ms", 30_000))
    memory_limit_bytes = int(request.get("memory_limit_bytes", 0))

    import sympy  # noqa: F401  (preload the CAS before limits and the guard)

    _apply_limits(memory_limit_bytes, wall_timeout_ms)
    capture = io.StringIO()
    start = time.monotonic()
    ok = True
    exc_name = None
    tb_text = None
    try:
        code = compile(script, GUEST_FILENAME, "exec")
        guest_globals = {"__name__": "__main__"}
        with ImportGuard(guest_globals), redirect_stdout(capture):
            exec(code, guest_globals)
    except SystemExit as exc:
        if exc.code not in (None, 0):
            ok = False
            exc_name = "SystemExit"
            tb_text = _guest_traceback(exc)
    except BaseException as exc:
        ok = False
        exc_name = type(exc).__name__
        tb_text = _guest_traceback(exc)
    finally:
        _lift_memory_limit()
    duration_ms = int((time.monotonic() - start) * 1000)
    return {
        "ok": ok,
        "exc": exc_name,
        "tb": tb_text,
        "stdout": capture.getvalue(),
        "duration_ms": duration_ms,
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="casbench-shim")
    parser.add_argument("--report-fd", type=int, default=3)
    args = parser.parse_args(argv)

    line = sys.stdin.readline()
    try:
        request = json.loads(line)
        if not isinstance(request, dict) or not isinstance(request.get("script"), str):
            return 2
    except (json.JSONDecodeError, UnicodeDecodeError):
        return 2

    report = run_guest(request)
    payload = (json.dumps(report) + "\n").encode("utf-8")
    os.write(args.report_fd, payload)
    return 0


if __name__ == "__main__":
    sys.exit(main())
