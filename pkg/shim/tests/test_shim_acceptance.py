"""Acceptance suite for the sandbox worker component.

Criterion 7 drives the real worker through the harness's wire protocol and
episode machinery; criterion 8 cross-checks the worker's CAS oracle against
the harness answer engine over the committed pair corpus. The harness is
consumed only through its public interfaces.
"""

import contextlib
import sys
import time

from casbench.codeblock import GuestScript
from casbench.corpus import load_corpus
from casbench.episodes import AblationFlags, EpisodeRunner, LoopConfig
from casbench.gateway import CompletionResult
from casbench.sandbox import ExecutionLimits, SandboxOrchestrator
from casbench.answers.equivalence import check_equivalence

from casbench_shim.oracle import oracle_equivalent


@contextlib.contextmanager
def criterion(number, name, budget_s):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"[criterion {number}] {name}: FAIL")
        raise
    elapsed = time.monotonic() - start
    assert elapsed < budget_s, f"criterion {number} overran its {budget_s}s budget"
    print(f"[criterion {number}] {name}: PASS ({elapsed:.2f}s)")


class OneShotBackend:
    kind = "replay"

    def __init__(self, text):
        self.text = text

    def complete(self, request):
        return CompletionResult(
            text=self.text,
            prompt_tokens=100,
            completion_tokens=200,
            latency_ms=0,
            backend="replay",
        )


def test_criterion_7_real_shim_executes_and_scores(
    shim_cmd, geometry_example_script, sample_corpus_path
):
    with criterion(7, "real worker execution and scoring", budget_s=60.0):
        orchestrator = SandboxOrchestrator(shim_cmd, max_workers=4)
        limits = ExecutionLimits(
            wall_timeout_ms=30_000, memory_limit_bytes=1024**3
        )

        # the stored generated-script fixture solves the square-geometry
        # problem and the episode scores correct against its ground truth
        problems = load_corpus(sample_corpus_path, "custom")
        qt_problem = next(p for p in problems if p.id == "olympiad-qt")
        backend = OneShotBackend(f"```python\n{geometry_example_script}\n```")
        runner = EpisodeRunner(backend, orchestrator)
        episode = runner.run_episode(qt_problem, AblationFlags(), LoopConfig(limits=limits))
        assert episode.final_status == "correct", episode
        assert episode.attempts[0].boxed == "2 \\sqrt{10}"
        assert episode.attempts[0].outcome.stdout == "\\boxed{2 \\sqrt{10}}\n"
        assert not episode.debug_activated

        def classify_source(source, run_limits=limits):
            script = GuestScript(source=source, fence_count_seen=1, contract_clean=True)
            return orchestrator.execute(script, run_limits)

        outcome = classify_source("assert False")
        assert outcome.status == "assertion_failure"
        assert outcome.exception_type == "AssertionError"

        outcome = classify_source("print(1/0)")
        assert outcome.status == "exception"
        assert outcome.exception_type == "ZeroDivisionError"

        outcome = classify_source("import socket")
        assert outcome.status == "exception"
        assert outcome.exception_type == "ImportError"

        outcome = classify_source(
            "while True: pass", ExecutionLimits(wall_timeout_ms=1500)
        )
        assert outcome.status == "timeout"


def test_criterion_8_oracle_agrees_with_engine_on_decided_pairs(equivalence_corpus):
    with criterion(8, "oracle agreement with the answer engine", budget_s=120.0):
        compared = 0
        for row in equivalence_corpus:
            engine = check_equivalence(row["candidate"], row["truth"]).verdict
            oracle = oracle_equivalent(row["candidate"], row["truth"])
            if "indeterminate" in (engine, oracle):
                continue
            compared += 1
            assert engine == oracle, (
                f"{row['candidate']!r} vs {row['truth']!r}: engine={engine} oracle={oracle}"
            )
        assert compared >= 50  # nearly the whole corpus is decided on both sides


def test_oracle_escalation_over_the_wire(shim_cmd):
    """The undecided band escalates through the sandbox protocol and comes
    back decided by the worker's oracle."""
    from casbench.answers.equivalence import EscalationPolicy
    from casbench.answers.oracle import make_sandbox_oracle

    orchestrator = SandboxOrchestrator(shim_cmd, max_workers=2)
    policy = EscalationPolicy(
        allow_oracle=True, oracle=make_sandbox_oracle(orchestrator)
    )
    # outside the harness grammar, decidable by the CAS reader: the oracle
    # normalizes \tfrac while the native parser rejects it
    verdict = check_equivalence(r"\tfrac{1}{2}", r"\frac{1}{2}", policy)
    assert verdict.method == "oracle"
    assert verdict.verdict == "equivalent"
