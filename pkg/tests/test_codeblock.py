import pytest

from casbench.codeblock import GuestScript, extract_script
from casbench.errors import NoCodeBlock

APPENDIX_STYLE_SCRIPT = """import sympy as sp

# set up the two circle equations
x, y = sp.symbols('x y', real=True)
print(r"\\boxed{2 \\sqrt{10}}")"""


def wrap(source):
    return f"```python\n{source}\n```"


def test_single_clean_block():
    script = extract_script(wrap(APPENDIX_STYLE_SCRIPT))
    assert script.source == APPENDIX_STYLE_SCRIPT
    assert script.contract_clean
    assert script.fence_count_seen == 1


def test_prose_before_block_marks_dirty():
    script = extract_script("Here is my solution:\n" + wrap("x = 1"))
    assert script.source == "x = 1"
    assert not script.contract_clean
    assert script.fence_count_seen == 1


def test_prose_after_block_marks_dirty():
    script = extract_script(wrap("x = 1") + "\nHope that helps!")
    assert script.source == "x = 1"
    assert not script.contract_clean


def test_two_blocks_take_first_and_count_two():
    text = wrap("first = 1") + "\nand another:\n" + wrap("second = 2")
    script = extract_script(text)
    assert script.source == "first = 1"
    assert script.fence_count_seen == 2
    assert not script.contract_clean


def test_zero_blocks_raises():
    with pytest.raises(NoCodeBlock):
        extract_script("There is no code here, the answer is 4.")
    with pytest.raises(NoCodeBlock):
        extract_script("```text\nnot guest labeled\n```")


def test_interior_fence_in_string_literal_survives():
    body = 's = """\n```\n"""\nprint(s)'
    script = extract_script(wrap(body))
    assert script.source == body
    assert script.contract_clean


def test_unclosed_block_extends_to_end_and_is_dirty():
    script = extract_script("```python\nx = 1\ny = 2")
    assert script.source == "x = 1\ny = 2"
    assert not script.contract_clean


def test_round_trip_wrap_then_extract():
    for source in ("a = 1", "a = 1\n", "a = 1\n\n", "def f():\n    return 2"):
        assert extract_script(wrap(source)).source == source


def test_re_extraction_is_stable():
    script = extract_script("prose\n" + wrap(APPENDIX_STYLE_SCRIPT))
    again = extract_script(wrap(script.source))
    assert again.source == script.source


def test_indented_fences_not_recognized():
    with pytest.raises(NoCodeBlock):
        extract_script("  ```python\n  x = 1\n  ```")


def test_empty_block_raises():
    with pytest.raises(NoCodeBlock):
        extract_script("```python\n```")


def test_guest_script_invariants():
    with pytest.raises(ValueError):
        GuestScript(source="", fence_count_seen=1, contract_clean=True)
    with pytest.raises(ValueError):
        GuestScript(source="x", fence_count_seen=2, contract_clean=True)
