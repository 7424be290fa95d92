"""Escalation oracle that rides the sandbox wire protocol.

When the staged checker cannot decide a pair, a tiny guest script is run in
the sandbox worker; the worker's CAS-backed oracle decides and prints a
marker line. The harness itself never imports the CAS: the worker process is
the only place symbolic fallback happens.
"""

from ..codeblock import GuestScript
from ..errors import SandboxError
from ..sandbox import STATUS_SUCCESS, ExecutionLimits

_MARKER = "ORACLE_VERDICT:"

_SCRIPT_TEMPLATE = """from casbench_shim.oracle import oracle_equivalent
print({marker!r} + oracle_equivalent({lhs!r}, {rhs!r}))
"""

_ORACLE_LIMITS = ExecutionLimits(wall_timeout_ms=20_000)


def make_sandbox_oracle(orchestrator, limits: ExecutionLimits = _ORACLE_LIMITS):
    """Build an oracle callable suitable for EscalationPolicy.oracle."""

    def oracle(candidate: str, truth: str) -> str:
        script = GuestScript(
            source=_SCRIPT_TEMPLATE.format(marker=_MARKER, lhs=candidate, rhs=truth),
            fence_count_seen=1,
            contract_clean=True,
        )
        try:
            outcome = orchestrator.execute(script, limits)
        except SandboxError:
            return "indeterminate"
        if outcome.status != STATUS_SUCCESS:
            return "indeterminate"
        for line in reversed(outcome.stdout.splitlines()):
            if line.startswith(_MARKER):
                return line[len(_MARKER):].strip()
        return "indeterminate"

    return oracle
