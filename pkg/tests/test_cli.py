import json
import sys
from pathlib import Path

import pytest

from casbench.cli import main
from casbench.episodes import AblationFlags, EpisodeRunner, LoopConfig, read_episode_log
from casbench.gateway import RecordingBackend
from casbench.sandbox import ExecutionLimits

from helpers import ScriptedBackend

STUB_WORKER = str(Path(__file__).parent / "stub_worker.py")

PER_PROBLEM = {
    "math500-parens": ["```python\n#stub ok\n\\boxed{4}\n```"],
    "olympiad-qt": ["```python\n#stub ok\n\\boxed{2 \\sqrt{10}}\n```"],
    "aime-incenter": [
        "```python\n#stub exc TypeError unsupported operand type(s) for +: 'int' and 'tuple'\n```",
        "```python\n#stub ok\n\\boxed{468}\n```",
    ],
}


def record_cassette(tmp_path, sample_problems, flag_sets=(AblationFlags(),)):
    """Record deterministic traffic for every requested flag configuration."""
    cassette = tmp_path / "cassette.jsonl"
    orchestrator_cmd = [sys.executable, STUB_WORKER]
    from casbench.sandbox import SandboxOrchestrator

    orchestrator = SandboxOrchestrator(orchestrator_cmd)
    loop = LoopConfig(limits=ExecutionLimits(wall_timeout_ms=3000))
    for flags in flag_sets:
        backend = RecordingBackend(ScriptedBackend([], per_problem=PER_PROBLEM), cassette)
        EpisodeRunner(backend, orchestrator).run_corpus(sample_problems, flags, loop, 1)
    return cassette


def write_config(tmp_path, sample_corpus_path, cassette, **extra):
    config = {
        "corpus": str(sample_corpus_path),
        "dataset": "custom",
        "model": "replay-model",
        "backend": {"kind": "replay", "cassette": str(cassette)},
        "worker_cmd": [sys.executable, STUB_WORKER],
        "limits": {"wall_timeout_ms": 3000},
        "episode_log": str(tmp_path / "episodes.jsonl"),
        **extra,
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config, indent=2))
    return path, config


def test_run_replay_fixture(tmp_path, sample_corpus_path, sample_problems, capsys):
    cassette = record_cassette(tmp_path, sample_problems)
    config_path, config = write_config(tmp_path, sample_corpus_path, cassette)
    assert main(["run", "--config", str(config_path)]) == 0
    records = read_episode_log(config["episode_log"])
    assert len(records) == 3
    assert [r["final_status"] for r in records] == ["correct", "correct", "correct"]
    out = capsys.readouterr().out
    assert "100.0" in out


def test_run_resumes_from_existing_log(tmp_path, sample_corpus_path, sample_problems, capsys):
    cassette = record_cassette(tmp_path, sample_problems)
    config_path, config = write_config(tmp_path, sample_corpus_path, cassette)
    assert main(["run", "--config", str(config_path)]) == 0
    first = Path(config["episode_log"]).read_text()
    # truncate to one episode and rerun; only the missing two are appended
    lines = first.splitlines(keepends=True)
    Path(config["episode_log"]).write_text(lines[0])
    assert main(["run", "--config", str(config_path)]) == 0
    records = read_episode_log(config["episode_log"])
    assert len(records) == 3
    assert {r["problem_id"] for r in records} == {p.id for p in sample_problems}
    out = capsys.readouterr().out
    assert "resuming" in out


def test_record_with_replay_backend_is_config_error(tmp_path, sample_corpus_path, capsys):
    cassette = tmp_path / "whatever.jsonl"
    cassette.write_text("")
    config_path, _ = write_config(tmp_path, sample_corpus_path, cassette, record=True)
    assert main(["run", "--config", str(config_path)]) == 2
    assert "record" in capsys.readouterr().err


def test_unreadable_corpus_file_is_io_error(tmp_path, sample_corpus_path, capsys):
    cassette = tmp_path / "cassette.jsonl"
    cassette.write_text("")
    config_path, _ = write_config(tmp_path, tmp_path / "missing.jsonl", cassette)
    assert main(["run", "--config", str(config_path)]) == 1
    assert "io error" in capsys.readouterr().err


def test_missing_corpus_is_config_error(tmp_path, capsys):
    config = {
        "dataset": "custom",
        "model": "m",
        "backend": {"kind": "replay", "cassette": "c.jsonl"},
        "worker_cmd": ["x"],
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    assert main(["run", "--config", str(path)]) == 2
    assert "corpus" in capsys.readouterr().err


def test_ablate_renders_four_rows_in_order(tmp_path, sample_corpus_path, sample_problems, capsys):
    from casbench.cli import ABLATION_GRID

    cassette = record_cassette(
        tmp_path, sample_problems, flag_sets=[flags for _, flags in ABLATION_GRID]
    )
    config_path, config = write_config(tmp_path, sample_corpus_path, cassette)
    assert main(["ablate", "--config", str(config_path)]) == 0
    out = capsys.readouterr().out
    labels = ["SymCode+", "No Self-Debug", "No Verification", "No SymPy (Numeric Python)"]
    positions = [out.index(label) for label in labels]
    assert positions == sorted(positions)
    # self-debug-off variants ran single attempts everywhere
    for _, flags in ABLATION_GRID[1:]:
        suffix_log = read_episode_log(next(tmp_path.glob("episodes.no_self-debug.jsonl")))
        assert all(len(r["attempts"]) == 1 for r in suffix_log)


def test_ablate_is_deterministic(tmp_path, sample_corpus_path, sample_problems, capsys):
    from casbench.cli import ABLATION_GRID

    cassette = record_cassette(
        tmp_path, sample_problems, flag_sets=[flags for _, flags in ABLATION_GRID]
    )
    config_path, _ = write_config(tmp_path, sample_corpus_path, cassette)
    assert main(["ablate", "--config", str(config_path)]) == 0
    first = capsys.readouterr().out
    assert main(["ablate", "--config", str(config_path)]) == 0
    second = capsys.readouterr().out
    assert first == second


def test_score_reproduces_run_accuracy(tmp_path, sample_corpus_path, sample_problems, capsys):
    cassette = record_cassette(tmp_path, sample_problems)
    config_path, config = write_config(tmp_path, sample_corpus_path, cassette)
    assert main(["run", "--config", str(config_path)]) == 0
    run_out = capsys.readouterr().out
    assert (
        main(
            [
                "score",
                "--episodes",
                config["episode_log"],
                "--corpus",
                str(sample_corpus_path),
                "--dataset",
                "custom",
            ]
        )
        == 0
    )
    score_out = capsys.readouterr().out

    def accuracy_cell(text):
        for line in text.splitlines():
            if line.startswith("| run") or line.startswith("| score"):
                return line.split("|")[2].strip()
        raise AssertionError(f"no metrics row in {text!r}")

    assert accuracy_cell(run_out) == accuracy_cell(score_out)


def test_score_unknown_episode_id(tmp_path, sample_corpus_path, sample_problems, capsys):
    cassette = record_cassette(tmp_path, sample_problems)
    config_path, config = write_config(tmp_path, sample_corpus_path, cassette)
    assert main(["run", "--config", str(config_path)]) == 0
    capsys.readouterr()
    log = Path(config["episode_log"])
    record = json.loads(log.read_text().splitlines()[0])
    record["problem_id"] = "not-in-corpus"
    log.write_text(json.dumps(record) + "\n")
    assert (
        main(
            [
                "score",
                "--episodes",
                str(log),
                "--corpus",
                str(sample_corpus_path),
                "--dataset",
                "custom",
            ]
        )
        == 1
    )
    assert "not-in-corpus" in capsys.readouterr().err


def test_report_over_stored_logs(tmp_path, sample_corpus_path, sample_problems, capsys):
    cassette = record_cassette(tmp_path, sample_problems)
    config_path, config = write_config(tmp_path, sample_corpus_path, cassette)
    assert main(["run", "--config", str(config_path)]) == 0
    capsys.readouterr()
    out_path = tmp_path / "report.md"
    assert (
        main(
            [
                "report",
                "--entry",
                f"baseline={config['episode_log']}",
                "--out",
                str(out_path),
            ]
        )
        == 0
    )
    out = capsys.readouterr().out
    assert "baseline" in out
    assert out_path.read_text() == out
