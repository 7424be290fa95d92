import json
import sys
from pathlib import Path

import pytest

SHIM_CMD = [sys.executable, "-m", "casbench_shim.worker"]
DATA_DIR = Path(__file__).parent / "data"

# fixtures shared with the harness package, consumed as files
HARNESS_TESTS = Path(__file__).resolve().parents[2] / "tests"


@pytest.fixture(scope="session")
def shim_cmd():
    return SHIM_CMD


@pytest.fixture(scope="session")
def geometry_example_script():
    return (DATA_DIR / "geometry_square_example.py").read_text("utf-8")


@pytest.fixture(scope="session")
def equivalence_corpus():
    rows = []
    path = HARNESS_TESTS / "data" / "equivalence_corpus.jsonl"
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


@pytest.fixture(scope="session")
def sample_corpus_path():
    return HARNESS_TESTS / "data" / "sample_corpus.jsonl"
