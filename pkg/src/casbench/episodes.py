"""The generate -> extract -> execute -> score state machine with bounded
error-feedback repair.

An episode repairs execution failures (exceptions, assertion failures,
timeouts, missing output), never wrong-but-clean answers: a script that runs
and prints a scoreable box ends the episode whatever the verdict. Missing
code blocks and missing boxed answers are encoded as synthetic
output_missing outcomes so the repair prompt can state the violation
explicitly; the trigger kind stays derivable (no script vs. script with
clean stdout).
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

from .answers.boxed import extract_boxed
from .answers.equivalence import DEFAULT_POLICY, EquivalenceVerdict, check_equivalence
from .codeblock import GuestScript, extract_script
from .errors import CasbenchError, NoBoxedAnswer, NoCodeBlock, SandboxError
from .gateway import CompletionRequest, CompletionResult
from .prompting import (
    DEFAULT_TRACEBACK_BUDGET,
    RenderedPrompt,
    render_cot,
    render_repair,
    render_symcode,
)
from .sandbox import (
    STATUS_OUTPUT_MISSING,
    STATUS_SANDBOX_ERROR,
    STATUS_SUCCESS,
    ExecutionLimits,
    ExecutionOutcome,
)

FINAL_CORRECT = "correct"
FINAL_INCORRECT = "incorrect"
FINAL_INDETERMINATE = "indeterminate"
FINAL_EXHAUSTED = "exhausted"
FINAL_INFRA = "infra_error"

EPISODE_SCHEMA_VERSION = 1

_VERDICT_TO_FINAL = {
    "equivalent": FINAL_CORRECT,
    "distinct": FINAL_INCORRECT,
    "indeterminate": FINAL_INDETERMINATE,
}


@dataclass(frozen=True)
class AblationFlags:
    """Pipeline switches: all three on is the full self-debugging
    configuration; self_debug off alone is the single-shot variant."""

    self_debug: bool = True
    verification: bool = True
    symbolic: bool = True


@dataclass(frozen=True)
class LoopConfig:
    model: str = "replay-model"
    max_attempts: int = 3
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)
    max_output_tokens: int = 4096
    temperature: float = 0.0
    prompt_mode: str = "symcode"  # symcode | cot
    repair_byte_budget: int = DEFAULT_TRACEBACK_BUDGET

    def __post_init__(self):
        if not 1 <= self.max_attempts <= 5:
            raise ValueError("max_attempts must be within [1, 5]")
        if self.prompt_mode not in ("symcode", "cot"):
            raise ValueError(f"unknown prompt_mode {self.prompt_mode!r}")


@dataclass(frozen=True)
class Attempt:
    index: int
    prompt: RenderedPrompt
    completion: CompletionResult
    script: Optional[GuestScript] = None
    outcome: Optional[ExecutionOutcome] = None
    boxed: Optional[str] = None


@dataclass(frozen=True)
class Episode:
    problem_id: str
    attempts: tuple
    final_status: str
    verdict: Optional[EquivalenceVerdict] = None
    completion_tokens_total: int = 0
    debug_activated: bool = False


def _build_episode(problem_id, attempts, final_status, verdict) -> Episode:
    return Episode(
        problem_id=problem_id,
        attempts=tuple(attempts),
        final_status=final_status,
        verdict=verdict,
        completion_tokens_total=sum(a.completion.completion_tokens for a in attempts),
        debug_activated=len(attempts) > 1,
    )


class EpisodeRunner:
    """Drives episodes against a completion backend, a sandbox orchestrator,
    and the answer engine. Orchestrator may be None for the cot mode."""

    def __init__(self, backend, orchestrator=None, policy=DEFAULT_POLICY):
        self.backend = backend
        self.orchestrator = orchestrator
        self.policy = policy

    def _complete(self, prompt, problem, index, loop_cfg) -> CompletionResult:
        request = CompletionRequest(
            model=loop_cfg.model,
            messages=prompt.messages,
            max_output_tokens=loop_cfg.max_output_tokens,
            temperature=loop_cfg.temperature,
            request_tag=f"{problem.id}#{index}",
        )
        return self.backend.complete(request)

    def run_episode(self, problem, flags: AblationFlags, loop_cfg: LoopConfig) -> Episode:
        """Solve one problem; all failures are encoded in the Episode."""
        if loop_cfg.prompt_mode == "cot":
            return self._run_cot(problem, loop_cfg)
        budget = loop_cfg.max_attempts if flags.self_debug else 1
        attempts = []
        prior = None
        failure = None
        for index in range(budget):
            if index == 0:
                prompt = render_symcode(problem, flags)
            else:
                prompt = render_repair(prior, failure, loop_cfg.repair_byte_budget)
            try:
                completion = self._complete(prompt, problem, index, loop_cfg)
            except CasbenchError:
                return _build_episode(problem.id, attempts, FINAL_INFRA, None)

            attempt, verdict, failure = self._drive_attempt(
                index, prompt, completion, problem, loop_cfg
            )
            attempts.append(attempt)
            if failure is None:
                if verdict is None:  # infrastructure fault inside the sandbox
                    return _build_episode(problem.id, attempts, FINAL_INFRA, None)
                return _build_episode(
                    problem.id, attempts, _VERDICT_TO_FINAL[verdict.verdict], verdict
                )
            prior = attempt
        return _build_episode(problem.id, attempts, FINAL_EXHAUSTED, None)

    def _drive_attempt(self, index, prompt, completion, problem, loop_cfg):
        """Returns (attempt, verdict, failure_outcome); failure_outcome is
        None when the episode is over (scored or infra fault)."""
        try:
            script = extract_script(completion.text)
        except NoCodeBlock as exc:
            outcome = ExecutionOutcome(
                status=STATUS_OUTPUT_MISSING,
                stderr=f"format violation: {exc}",
            )
            return Attempt(index, prompt, completion, None, outcome, None), None, outcome

        try:
            if self.orchestrator is None:
                raise SandboxError("no sandbox worker configured")
            outcome = self.orchestrator.execute(script, loop_cfg.limits)
        except SandboxError as exc:
            outcome = ExecutionOutcome(status=STATUS_SANDBOX_ERROR, stderr=str(exc))
            return Attempt(index, prompt, completion, script, outcome, None), None, None

        if outcome.status == STATUS_SUCCESS:
            try:
                boxed = extract_boxed(outcome.stdout)
            except NoBoxedAnswer as exc:
                synthetic = replace(
                    outcome,
                    status=STATUS_OUTPUT_MISSING,
                    stderr=_join(outcome.stderr, f"missing answer: {exc}"),
                )
                attempt = Attempt(index, prompt, completion, script, synthetic, None)
                return attempt, None, synthetic
            verdict = check_equivalence(boxed, problem.ground_truth, self.policy)
            attempt = Attempt(index, prompt, completion, script, outcome, boxed)
            return attempt, verdict, None

        attempt = Attempt(index, prompt, completion, script, outcome, None)
        if outcome.status == STATUS_SANDBOX_ERROR:
            return attempt, None, None
        return attempt, None, outcome

    def _run_cot(self, problem, loop_cfg) -> Episode:
        prompt = render_cot(problem)
        try:
            completion = self._complete(prompt, problem, 0, loop_cfg)
        except CasbenchError:
            return _build_episode(problem.id, [], FINAL_INFRA, None)
        try:
            boxed = extract_boxed(completion.text)
        except NoBoxedAnswer:
            attempt = Attempt(0, prompt, completion)
            return _build_episode(problem.id, [attempt], FINAL_EXHAUSTED, None)
        verdict = check_equivalence(boxed, problem.ground_truth, self.policy)
        attempt = Attempt(0, prompt, completion, boxed=boxed)
        return _build_episode(
            problem.id, [attempt], _VERDICT_TO_FINAL[verdict.verdict], verdict
        )

    def run_corpus(self, problems, flags, loop_cfg, parallelism: int = 1) -> list:
        """Run every problem; episodes come back in corpus order regardless
        of completion order, and one failure never aborts the others."""
        if parallelism < 1:
            raise ValueError("parallelism must be at least 1")
        if not problems:
            return []

        def safe_run(problem):
            try:
                return self.run_episode(problem, flags, loop_cfg)
            except Exception:  # never let one episode abort the run
                return Episode(
                    problem_id=problem.id,
                    attempts=(),
                    final_status=FINAL_INFRA,
                    verdict=None,
                    completion_tokens_total=0,
                    debug_activated=False,
                )

        if parallelism == 1:
            return [safe_run(p) for p in problems]
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(safe_run, problems))


def _join(left, right):
    parts = [p for p in (left, right) if p]
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# episode log serialization (one JSON object per line, schema versioned)


def _prompt_to_json(prompt: RenderedPrompt) -> dict:
    return {
        "kind": prompt.kind,
        "problem_id": prompt.problem_id,
        "messages": [{"role": m.role, "content": m.content} for m in prompt.messages],
    }


def _outcome_to_json(outcome: Optional[ExecutionOutcome]):
    if outcome is None:
        return None
    return {
        "status": outcome.status,
        "stdout": outcome.stdout,
        "stderr": outcome.stderr,
        "exception_type": outcome.exception_type,
        "traceback": outcome.traceback,
        "duration_ms": outcome.duration_ms,
    }


def episode_to_json(episode: Episode) -> dict:
    return {
        "schema": EPISODE_SCHEMA_VERSION,
        "problem_id": episode.problem_id,
        "final_status": episode.final_status,
        "verdict": (
            None
            if episode.verdict is None
            else {
                "verdict": episode.verdict.verdict,
                "method": episode.verdict.method,
                "detail": episode.verdict.detail,
            }
        ),
        "completion_tokens_total": episode.completion_tokens_total,
        "debug_activated": episode.debug_activated,
        "attempts": [
            {
                "index": a.index,
                "prompt": _prompt_to_json(a.prompt),
                "completion": {
                    "text": a.completion.text,
                    "prompt_tokens": a.completion.prompt_tokens,
                    "completion_tokens": a.completion.completion_tokens,
                    "latency_ms": a.completion.latency_ms,
                    "backend": a.completion.backend,
                },
                "script": (
                    None
                    if a.script is None
                    else {
                        "source": a.script.source,
                        "fence_count_seen": a.script.fence_count_seen,
                        "contract_clean": a.script.contract_clean,
                    }
                ),
                "outcome": _outcome_to_json(a.outcome),
                "boxed": a.boxed,
            }
            for a in episode.attempts
        ],
    }


def serialize_episode(episode: Episode) -> str:
    """Deterministic single-line JSON; fixed key order and ascii escapes so
    byte-identical logs certify replay determinism."""
    return json.dumps(episode_to_json(episode), sort_keys=True, ensure_ascii=True)


def write_episode_log(path, episodes, append: bool = False) -> None:
    mode = "a" if append else "w"
    with open(path, mode, encoding="utf-8") as fh:
        for episode in episodes:
            fh.write(serialize_episode(episode) + "\n")


def read_episode_log(path) -> list:
    """Parse a stored episode log back into dicts (not dataclasses): scoring
    and metrics only need the recorded fields."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
