"""Prompt rendering for the code-generation pipeline.

Templates ship as versioned resource files (results are prompt-sensitive, so
prompt diffs must be auditable). Each template carries a single
"{problem_text}" placeholder which is substituted verbatim; problem
statements are never escaped or reflowed. Repair prompts extend the prior
conversation monotonically: history is never rewritten.
"""

from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .errors import InvalidState

PLACEHOLDER = "{problem_text}"

KIND_SYMCODE = "symcode"
KIND_REPAIR = "symcode_repair"
KIND_COT = "cot_baseline"

# The guidance sentence fed back on failure; fixed wording, never paraphrased.
REPAIR_INSTRUCTION = "Debug the following code based on the provided error message."

DEFAULT_TRACEBACK_BUDGET = 4096


@dataclass(frozen=True)
class ChatMessage:
    role: str  # system | user | assistant
    content: str

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        if not self.content:
            raise ValueError("message content must be non-empty")


@dataclass(frozen=True)
class RenderedPrompt:
    messages: tuple
    kind: str
    problem_id: str


def _load_template(name: str) -> str:
    return resources.files("casbench").joinpath(f"templates/{name}").read_text("utf-8")


def _symcode_template_name(flags) -> str:
    if flags.symbolic and flags.verification:
        return "symcode.txt"
    if flags.symbolic:
        return "symcode_no_verify.txt"
    if flags.verification:
        return "symcode_numeric.txt"
    return "symcode_numeric_no_verify.txt"


def render_symcode(problem, flags) -> RenderedPrompt:
    """Render the code-generation prompt for a problem.

    With verification ablated, the verification instruction block is omitted;
    with the symbolic library ablated, the CAS-import instruction is replaced
    by a standard-numerics instruction. The statement is substituted verbatim
    between the # PROBLEM sentinels.
    """
    template = _load_template(_symcode_template_name(flags))
    content = template.replace(PLACEHOLDER, problem.statement)
    return RenderedPrompt(
        messages=(ChatMessage("user", content),),
        kind=KIND_SYMCODE,
        problem_id=problem.id,
    )


def render_cot(problem) -> RenderedPrompt:
    """Single-turn baseline prompt: stepwise prose plus a final boxed answer."""
    template = _load_template("cot.txt")
    content = template.replace(PLACEHOLDER, problem.statement)
    return RenderedPrompt(
        messages=(ChatMessage("user", content),),
        kind=KIND_COT,
        problem_id=problem.id,
    )


def truncate_tail(text: str, byte_budget: int) -> str:
    """Keep the tail of text within byte_budget bytes (innermost traceback
    frames live at the tail, where the error class and line number are)."""
    encoded = text.encode("utf-8")
    if len(encoded) <= byte_budget:
        return text
    kept = encoded[-byte_budget:].decode("utf-8", "ignore")
    return f"...[truncated {len(encoded) - byte_budget} bytes]...\n" + kept


def _error_body(error, byte_budget: int) -> str:
    lines = [f"Error status: {error.status}"]
    if error.status == "timeout":
        lines.append(
            f"Execution was terminated after {error.duration_ms} ms: "
            "the wall-clock limit was reached before the script finished."
        )
    elif error.status == "output_missing":
        detail = (error.stderr or "").strip()
        if detail:
            lines.append(detail)
        lines.append(
            "The run produced no usable \\boxed{...} answer. Print ONLY the final "
            "answer in LaTeX boxed form as the last line of output."
        )
    else:
        if error.exception_type:
            lines.append(f"Exception: {error.exception_type}")
        trace = error.traceback or error.stderr or ""
        if trace.strip():
            lines.append(truncate_tail(trace.strip(), byte_budget))
    return "\n".join(lines)


def render_repair(
    prior,
    error,
    byte_budget: int = DEFAULT_TRACEBACK_BUDGET,
    problem_id: Optional[str] = None,
) -> RenderedPrompt:
    """Extend the conversation with the failing script and its error.

    prior is the failed Attempt; error its failure outcome. The new user turn
    holds the fixed repair instruction, the failure status label, and the
    captured traceback/stderr truncated (tail kept) to byte_budget bytes.
    Raises InvalidState when called with a success outcome.
    """
    if error.status == "success":
        raise InvalidState("render_repair called with a success outcome")
    if prior.script is not None:
        assistant_text = f"```python\n{prior.script.source}\n```"
    else:
        assistant_text = prior.completion.text or "(the previous completion was empty)"
    user_text = f"{REPAIR_INSTRUCTION}\n{_error_body(error, byte_budget)}"
    messages = prior.prompt.messages + (
        ChatMessage("assistant", assistant_text),
        ChatMessage("user", user_text),
    )
    return RenderedPrompt(
        messages=messages,
        kind=KIND_REPAIR,
        problem_id=problem_id or prior.prompt.problem_id,
    )
