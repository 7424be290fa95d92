"""Staged equivalence decision between a candidate answer and ground truth.

Stage 1 parses both sides and compares canonical forms structurally. Stage 2
evaluates closed-form constants at high precision (accept within relative
1e-30, reject beyond 1e-10; the gap in between never guesses). Expressions
with free symbols are compared at a fixed set of sample points, unanimity
required. Stage 3 optionally escalates to a configured oracle. Grading gives
no partial credit, so false positives are treated as worse than a manual
review: undecidable pairs come back indeterminate.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import mpmath

from ..errors import ParseError
from .canonical import canonicalize
from .nodes import free_symbols
from .numeric import DEFAULT_DPS, SAMPLE_POINTS, eval_numeric, relative_gap
from .parser import parse_latex

EQUIVALENT = "equivalent"
DISTINCT = "distinct"
INDETERMINATE = "indeterminate"

ACCEPT_RELATIVE = "1e-30"
REJECT_RELATIVE = "1e-10"


@dataclass(frozen=True)
class EquivalenceVerdict:
    verdict: str
    method: str  # structural | numeric | oracle
    detail: str = ""

    def __post_init__(self):
        if self.verdict not in (EQUIVALENT, DISTINCT, INDETERMINATE):
            raise ValueError(f"unknown verdict {self.verdict!r}")
        if self.method not in ("structural", "numeric", "oracle"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "structural" and self.verdict == INDETERMINATE:
            raise ValueError("structural stage verdicts are always decisive")


@dataclass(frozen=True)
class EscalationPolicy:
    """Whether and how stage 3 may consult an external oracle.

    The oracle callable takes (candidate, truth) raw strings and returns one
    of the three verdict labels.
    """

    allow_oracle: bool = False
    oracle: Optional[Callable[[str, str], str]] = None


DEFAULT_POLICY = EscalationPolicy()


def _numeric_compare(a, b):
    with mpmath.workdps(DEFAULT_DPS):
        gap = relative_gap(a, b)
        if gap <= mpmath.mpf(ACCEPT_RELATIVE):
            return EQUIVALENT, gap
        if gap > mpmath.mpf(REJECT_RELATIVE):
            return DISTINCT, gap
        return INDETERMINATE, gap


def _compare_constants(left, right):
    a = eval_numeric(left)
    b = eval_numeric(right)
    if a is None or b is None:
        return EquivalenceVerdict(
            INDETERMINATE, "numeric", "one side is not numerically evaluable"
        )
    verdict, gap = _numeric_compare(a, b)
    detail = f"relative gap {mpmath.nstr(gap, 5)}"
    if verdict == INDETERMINATE:
        detail += " falls between the accept and reject thresholds"
    return EquivalenceVerdict(verdict, "numeric", detail)


def _compare_sampled(left, right, names):
    ordered = sorted(names)
    agreements = 0
    failures = 0
    for index, point in enumerate(SAMPLE_POINTS):
        env = {}
        for offset, name in enumerate(ordered):
            shifted = mpmath.mpf(point) + mpmath.mpf(offset) * mpmath.mpf("0.171")
            env[name] = shifted
        a = eval_numeric(left, env)
        b = eval_numeric(right, env)
        if a is None or b is None:
            failures += 1
            continue
        verdict, gap = _numeric_compare(a, b)
        if verdict == DISTINCT:
            return EquivalenceVerdict(
                DISTINCT, "numeric", f"differs at sample point {index}"
            )
        if verdict == INDETERMINATE:
            return EquivalenceVerdict(
                INDETERMINATE, "numeric", f"gap at sample point {index}"
            )
        agreements += 1
    if failures > len(SAMPLE_POINTS) // 2:
        return EquivalenceVerdict(
            INDETERMINATE, "numeric", "too few evaluable sample points"
        )
    return EquivalenceVerdict(
        EQUIVALENT, "numeric", f"agrees at {agreements} sample points"
    )


def check_equivalence(
    candidate: str, truth: str, policy: EscalationPolicy = DEFAULT_POLICY
) -> EquivalenceVerdict:
    """Decide whether candidate and truth denote the same answer.

    Never raises: parse failures and undecidable numeric gaps come back as
    indeterminate (after oracle escalation when the policy allows it).
    """
    if candidate.strip() == truth.strip() and candidate.strip():
        return EquivalenceVerdict(EQUIVALENT, "structural", "identical text")
    try:
        left = canonicalize(parse_latex(candidate))
        right = canonicalize(parse_latex(truth))
    except ParseError as exc:
        return _escalate(
            candidate,
            truth,
            policy,
            EquivalenceVerdict(INDETERMINATE, "numeric", f"parse failure: {exc}"),
        )
    if left == right:
        return EquivalenceVerdict(EQUIVALENT, "structural", "canonical forms match")
    names = free_symbols(left) | free_symbols(right)
    if names:
        verdict = _compare_sampled(left, right, names)
    else:
        verdict = _compare_constants(left, right)
    if verdict.verdict == INDETERMINATE:
        return _escalate(candidate, truth, policy, verdict)
    return verdict


def _escalate(candidate, truth, policy, fallback):
    if not policy.allow_oracle or policy.oracle is None:
        return fallback
    try:
        label = policy.oracle(candidate, truth)
    except Exception as exc:  # oracle faults must not crash scoring
        return EquivalenceVerdict(
            INDETERMINATE, "oracle", f"oracle failed: {type(exc).__name__}: {exc}"
        )
    if label in (EQUIVALENT, DISTINCT, INDETERMINATE):
        return EquivalenceVerdict(label, "oracle", "oracle escalation")
    return EquivalenceVerdict(INDETERMINATE, "oracle", f"oracle returned {label!r}")
