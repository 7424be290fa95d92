import json
import sys
from pathlib import Path

import pytest

from casbench.corpus import load_corpus
from casbench.sandbox import SandboxOrchestrator

from helpers import ScriptedBackend, make_stub_server

DATA_DIR = Path(__file__).parent / "data"
STUB_WORKER = Path(__file__).parent / "stub_worker.py"


@pytest.fixture(scope="session")
def sample_corpus_path():
    return DATA_DIR / "sample_corpus.jsonl"


@pytest.fixture(scope="session")
def sample_problems(sample_corpus_path):
    return load_corpus(sample_corpus_path, "custom")


@pytest.fixture(scope="session")
def equivalence_corpus():
    rows = []
    with open(DATA_DIR / "equivalence_corpus.jsonl", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append(json.loads(line))
    return rows


@pytest.fixture()
def stub_orchestrator():
    return SandboxOrchestrator([sys.executable, str(STUB_WORKER)], max_workers=4)


@pytest.fixture()
def scripted_backend_factory():
    return ScriptedBackend


@pytest.fixture()
def stub_server():
    servers = []

    def factory(plan):
        server, base_url = make_stub_server(plan)
        servers.append(server)
        return base_url

    yield factory
    for server in servers:
        server.shutdown()
        server.server_close()
