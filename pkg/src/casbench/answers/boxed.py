"""Extraction of the final \\boxed{...} answer from guest stdout."""

from ..errors import NoBoxedAnswer

_MARKER = "\\boxed"


def _balanced_span(text: str, start: int):
    """Content of the brace group opening at or after start, or None.

    Brace matching is nesting-aware; escaped braces (\\{ \\}) do not count
    toward nesting.
    """
    i = start
    while i < len(text) and text[i].isspace():
        i += 1
    if i >= len(text) or text[i] != "{":
        return None
    depth = 0
    j = i
    while j < len(text):
        ch = text[j]
        if ch in "{}" and j > 0 and text[j - 1] == "\\":
            j += 1
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth -= 1
            if depth == 0:
                return text[i + 1 : j]
        j += 1
    return None


def extract_boxed(stdout: str) -> str:
    """Return the contents of the last balanced \\boxed{...} span.

    Generated scripts may print debug lines before the answer; the prompt
    contract puts the boxed answer last, so the last span wins. Raises
    NoBoxedAnswer when no balanced span exists.
    """
    if not stdout:
        raise NoBoxedAnswer("empty stdout")
    best = None
    pos = stdout.find(_MARKER)
    while pos != -1:
        content = _balanced_span(stdout, pos + len(_MARKER))
        if content is not None:
            best = content
        pos = stdout.find(_MARKER, pos + 1)
    if best is None:
        raise NoBoxedAnswer("no balanced \\boxed{...} span in stdout")
    return best
