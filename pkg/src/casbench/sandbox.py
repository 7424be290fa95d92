"""Sandboxed execution of guest scripts via an external worker process.

Wire protocol (bit-exact): the orchestrator spawns the worker with an extra
"--report-fd N" argument, writes one JSON object
{"script": ..., "wall_timeout_ms": ..., "memory_limit_bytes": ...} plus a
newline to the worker's stdin, and reads exactly one JSON object
{"ok": bool, "exc": str|null, "tb": str|null, "stdout": str,
"duration_ms": int} plus newline from fd N. The worker then exits 0. Any
other behavior is a protocol violation.

The report travels on its own pipe, never on the worker's stdout, so a guest
print cannot forge a report. Each worker runs in its own session; on wall
clock expiry the whole process group is killed.
"""

import json
import os
import signal
import subprocess
import threading
import time
from dataclasses import dataclass, replace
from typing import Optional

from .errors import SandboxError

GiB = 1024**3

STATUS_SUCCESS = "success"
STATUS_EXCEPTION = "exception"
STATUS_ASSERTION = "assertion_failure"
STATUS_TIMEOUT = "timeout"
STATUS_OUTPUT_MISSING = "output_missing"
STATUS_SANDBOX_ERROR = "sandbox_error"

FAILURE_STATUSES = frozenset(
    {STATUS_EXCEPTION, STATUS_ASSERTION, STATUS_TIMEOUT, STATUS_OUTPUT_MISSING}
)

TRUNCATION_MARKER = "\n...[stream truncated]..."


@dataclass(frozen=True)
class ExecutionLimits:
    wall_timeout_ms: int = 30_000
    memory_limit_bytes: int = 1 * GiB
    stdout_cap_bytes: int = 64 * 1024

    def __post_init__(self):
        if self.wall_timeout_ms < 100:
            raise ValueError("wall_timeout_ms must be at least 100")
        if self.memory_limit_bytes <= 0:
            raise ValueError("memory_limit_bytes must be positive")
        if self.stdout_cap_bytes < 4096:
            raise ValueError("stdout_cap_bytes must be at least 4096")


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str
    stdout: str = ""
    stderr: str = ""
    exception_type: Optional[str] = None
    traceback: Optional[str] = None
    duration_ms: int = 0

    def __post_init__(self):
        if self.status == STATUS_EXCEPTION and not self.exception_type:
            raise ValueError("exception outcomes carry an exception type")
        if self.status == STATUS_ASSERTION and self.exception_type != "AssertionError":
            raise ValueError("assertion failures carry exception_type AssertionError")
        if self.status == STATUS_SUCCESS and self.traceback is not None:
            raise ValueError("success outcomes carry no traceback")


def truncate_stream(text: str, cap_bytes: int) -> str:
    """Cap a captured stream, keeping the tail (answers and innermost frames
    print last) and prepending a truncation marker."""
    encoded = text.encode("utf-8")
    if len(encoded) <= cap_bytes:
        return text
    kept = encoded[-cap_bytes:].decode("utf-8", "ignore")
    return TRUNCATION_MARKER + "\n" + kept


def classify(report: "bytes | None", timed_out: bool = False) -> ExecutionOutcome:
    """Map raw report bytes (plus the timeout flag) onto the failure taxonomy.

    Total over arbitrary bytes: a missing report after the timeout signal is
    a timeout, anything malformed is a sandbox_error. A report that parses is
    trusted even when the timeout raced it.
    """
    parsed = None
    if report:
        try:
            parsed = json.loads(report.decode("utf-8", "replace").splitlines()[0])
        except (json.JSONDecodeError, IndexError):
            parsed = None
        if not isinstance(parsed, dict):
            parsed = None
    if parsed is None:
        if timed_out:
            return ExecutionOutcome(status=STATUS_TIMEOUT)
        return ExecutionOutcome(
            status=STATUS_SANDBOX_ERROR, stderr="worker produced no parseable report"
        )
    ok = parsed.get("ok")
    stdout = parsed.get("stdout")
    duration = parsed.get("duration_ms")
    if not isinstance(ok, bool) or not isinstance(stdout, str) or not isinstance(duration, int):
        return ExecutionOutcome(
            status=STATUS_SANDBOX_ERROR, stderr="worker report violates the shim schema"
        )
    if ok:
        return ExecutionOutcome(status=STATUS_SUCCESS, stdout=stdout, duration_ms=duration)
    exc = parsed.get("exc")
    if not isinstance(exc, str) or not exc:
        return ExecutionOutcome(
            status=STATUS_SANDBOX_ERROR,
            stderr="failure report without an exception class",
        )
    tb = parsed.get("tb") if isinstance(parsed.get("tb"), str) else None
    status = STATUS_ASSERTION if exc == "AssertionError" else STATUS_EXCEPTION
    return ExecutionOutcome(
        status=status,
        stdout=stdout,
        exception_type=exc,
        traceback=tb,
        duration_ms=duration,
    )


class _PipeReader(threading.Thread):
    """Drains a file object (or raw fd) fully so the child never blocks."""

    def __init__(self, source, from_fd=False):
        super().__init__(daemon=True)
        self.source = source
        self.from_fd = from_fd
        self.data = b""
        self.start()

    def run(self):
        chunks = []
        try:
            if self.from_fd:
                while True:
                    chunk = os.read(self.source, 65536)
                    if not chunk:
                        break
                    chunks.append(chunk)
            else:
                chunks.append(self.source.read())
        except (OSError, ValueError):
            pass
        self.data = b"".join(chunks or [b""])


class SandboxOrchestrator:
    """Runs guest scripts in worker processes under wall/memory limits.

    worker_cmd is the argv prefix of a worker implementing the shim protocol.
    A bounded semaphore caps simultaneous child processes across threads.
    """

    def __init__(self, worker_cmd, max_workers: int = 4, grace_ms: int = 500):
        if not worker_cmd:
            raise ValueError("worker_cmd must be a non-empty argv list")
        self.worker_cmd = list(worker_cmd)
        self.grace_ms = grace_ms
        self._semaphore = threading.BoundedSemaphore(max_workers)

    def execute(self, script, limits: ExecutionLimits) -> ExecutionOutcome:
        """Run one guest script to an ExecutionOutcome.

        Returns within wall_timeout_ms + grace; on expiry the worker's whole
        process group is killed and the outcome is a timeout. Raises
        SandboxError only for infrastructure faults (spawn failure), never
        for guest failures.
        """
        source = script.source if hasattr(script, "source") else script
        request = {
            "script": source,
            "wall_timeout_ms": limits.wall_timeout_ms,
            "memory_limit_bytes": limits.memory_limit_bytes,
        }
        with self._semaphore:
            return self._execute_locked(request, limits)

    def _execute_locked(self, request, limits) -> ExecutionOutcome:
        read_fd, write_fd = os.pipe()
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                self.worker_cmd + ["--report-fd", str(write_fd)],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                pass_fds=(write_fd,),
                start_new_session=True,
            )
        except OSError as exc:
            os.close(read_fd)
            os.close(write_fd)
            raise SandboxError(f"worker failed to start: {exc}") from exc
        os.close(write_fd)  # child holds the only write end now

        timed_out = False
        try:
            feeder = threading.Thread(
                target=self._feed_stdin, args=(proc, request), daemon=True
            )
            feeder.start()
            report_reader = _PipeReader(read_fd, from_fd=True)
            stdout_reader = _PipeReader(proc.stdout)
            stderr_reader = _PipeReader(proc.stderr)

            deadline = start + limits.wall_timeout_ms / 1000.0
            try:
                proc.wait(timeout=max(0.0, deadline - time.monotonic()))
            except subprocess.TimeoutExpired:
                timed_out = True
        finally:
            # one sweep kills the worker and any descendants it spawned, so
            # readers are guaranteed to reach EOF
            self._kill_group(proc)
        proc.wait()
        join_budget = max(0.05, self.grace_ms / 1000.0 / 3)
        for reader in (report_reader, stdout_reader, stderr_reader):
            reader.join(join_budget)
        try:
            os.close(read_fd)
        except OSError:
            pass

        duration_ms = int((time.monotonic() - start) * 1000)
        outcome = classify(report_reader.data or None, timed_out=timed_out)
        worker_stderr = stderr_reader.data.decode("utf-8", "replace").strip("\n")
        stderr_text = "\n".join(part for part in (outcome.stderr, worker_stderr) if part)
        if outcome.status == STATUS_TIMEOUT or outcome.duration_ms == 0:
            outcome = replace(outcome, duration_ms=duration_ms)
        return replace(
            outcome,
            stdout=truncate_stream(outcome.stdout, limits.stdout_cap_bytes),
            stderr=truncate_stream(stderr_text, limits.stdout_cap_bytes),
        )

    @staticmethod
    def _feed_stdin(proc, request):
        try:
            proc.stdin.write((json.dumps(request) + "\n").encode("utf-8"))
            proc.stdin.flush()
            proc.stdin.close()
        except (OSError, ValueError):
            pass

    @staticmethod
    def _kill_group(proc):
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except (ProcessLookupError, PermissionError, OSError):
            pass
