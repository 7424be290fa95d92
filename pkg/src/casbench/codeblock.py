"""Extraction of the single fenced guest script a completion must contain.

Fence dialect: an opening fence is an unindented line of three backticks
carrying the guest-language tag ("```python"); the closing fence is the next
unindented line of exactly three backticks. Fences appearing inside string
literals are tolerated by longest-match: the last candidate closing line
before the next opening fence (or end of text) wins, so a properly closed
outer fence keeps its interior intact.
"""

from dataclasses import dataclass

from .errors import NoCodeBlock

GUEST_TAG = "python"


@dataclass(frozen=True)
class GuestScript:
    """A candidate guest script plus output-contract bookkeeping.

    contract_clean is True only when the completion was exactly one fenced
    block with no surrounding prose.
    """

    source: str
    fence_count_seen: int
    contract_clean: bool

    def __post_init__(self):
        if not self.source:
            raise ValueError("guest script source must be non-empty")
        if self.fence_count_seen < 1:
            raise ValueError("fence_count_seen must be positive")
        if self.contract_clean and self.fence_count_seen != 1:
            raise ValueError("a clean contract implies exactly one fenced block")


def _is_open_fence(line: str) -> bool:
    return line.rstrip() == f"```{GUEST_TAG}"


def _is_close_fence(line: str) -> bool:
    return line.rstrip("\r\n") == "```" and line.rstrip() == "```"


def extract_script(completion_text: str) -> GuestScript:
    """Return the first guest-labeled fenced block from a completion.

    Multiple blocks or surrounding prose mark the script dirty rather than
    erroring: a salvageable script still executes, and the violation is
    surfaced through contract_clean. Raises NoCodeBlock when no guest-labeled
    block exists.
    """
    if not completion_text:
        raise NoCodeBlock("empty completion")
    lines = completion_text.splitlines()
    opens = [i for i, line in enumerate(lines) if _is_open_fence(line)]
    if not opens:
        raise NoCodeBlock("no ```python fenced block in completion")

    first_open = opens[0]
    next_open = opens[1] if len(opens) > 1 else len(lines)
    closes = [
        i for i in range(first_open + 1, next_open) if _is_close_fence(lines[i])
    ]
    if closes:
        close = closes[-1]  # longest match keeps interior fence-like lines
        body_lines = lines[first_open + 1 : close]
        closed = True
    else:
        body_lines = lines[first_open + 1 : next_open]
        closed = False
    source = "\n".join(body_lines)
    if not source.strip():
        raise NoCodeBlock("fenced block is empty")

    prose_before = any(line.strip() for line in lines[:first_open])
    tail_start = (close + 1) if closes else next_open
    # text between this block's close and a second opening fence is prose too
    prose_after = any(
        line.strip() for line in lines[tail_start:] if not _is_open_fence(line)
    ) or len(opens) > 1
    fence_count = len(opens)
    clean = fence_count == 1 and closed and not prose_before and not prose_after
    return GuestScript(source=source, fence_count_seen=fence_count, contract_clean=clean)
