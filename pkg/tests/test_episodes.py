import json

import pytest

from casbench.episodes import (
    AblationFlags,
    EpisodeRunner,
    LoopConfig,
    read_episode_log,
    serialize_episode,
    write_episode_log,
)
from casbench.gateway import ReplayBackend, RecordingBackend
from casbench.sandbox import ExecutionLimits

FAST_LOOP = LoopConfig(limits=ExecutionLimits(wall_timeout_ms=3000))

FIX_SEQUENCE = [
    "```python\n#stub exc TypeError unsupported operand type(s) for +: 'int' and 'tuple'\n```",
    "```python\n#stub ok\n\\boxed{468}\n```",
]


@pytest.fixture()
def aime_problem(sample_problems):
    return sample_problems[2]


def test_fail_then_fix(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(FIX_SEQUENCE)
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "correct"
    assert episode.debug_activated
    assert len(episode.attempts) == 2
    assert episode.attempts[0].outcome.status == "exception"
    assert episode.attempts[1].boxed == "468"
    assert episode.attempts[1].prompt.kind == "symcode_repair"
    assert episode.completion_tokens_total == sum(
        a.completion.completion_tokens for a in episode.attempts
    )


def test_first_try_success_means_no_activation(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(["```python\n#stub ok\n\\boxed{468}\n```"])
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "correct"
    assert not episode.debug_activated
    assert len(episode.attempts) == 1


def test_budget_exhaustion(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(["```python\n#stub assert\n```"])
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "exhausted"
    assert len(episode.attempts) == FAST_LOOP.max_attempts
    assert all(a.outcome.status == "assertion_failure" for a in episode.attempts)


def test_self_debug_off_forces_single_attempt(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(["```python\n#stub assert\n```"])
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(self_debug=False), FAST_LOOP)
    assert episode.final_status == "exhausted"
    assert len(episode.attempts) == 1
    assert not episode.debug_activated


def test_monotone_history(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(["```python\n#stub assert\n```"])
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    for prev, nxt in zip(episode.attempts, episode.attempts[1:]):
        prior_messages = prev.prompt.messages
        assert nxt.prompt.messages[: len(prior_messages)] == prior_messages
        joined = "\n".join(m.content for m in nxt.prompt.messages)
        assert prev.script.source in joined


def test_missing_box_is_repairable(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(
        ["```python\n#stub ok\nnothing boxed\n```", "```python\n#stub ok\n\\boxed{468}\n```"]
    )
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "correct"
    assert episode.attempts[0].outcome.status == "output_missing"
    assert episode.attempts[0].script is not None
    repair_text = episode.attempts[1].prompt.messages[-1].content
    assert "output_missing" in repair_text


def test_no_code_block_is_repairable(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(
        ["The answer is 468.", "```python\n#stub ok\n\\boxed{468}\n```"]
    )
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "correct"
    assert episode.attempts[0].script is None
    assert episode.attempts[0].outcome.status == "output_missing"
    assert "format violation" in episode.attempts[0].outcome.stderr


def test_wrong_answer_ends_episode_without_retry(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(["```python\n#stub ok\n\\boxed{156}\n```"])
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "incorrect"
    assert len(episode.attempts) == 1
    assert episode.verdict.verdict == "distinct"


def test_timeout_feeds_repair(aime_problem, stub_orchestrator, scripted_backend_factory):
    backend = scripted_backend_factory(
        ["```python\n#stub sleep 30\n```", "```python\n#stub ok\n\\boxed{468}\n```"]
    )
    loop = LoopConfig(limits=ExecutionLimits(wall_timeout_ms=500))
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), loop)
    assert episode.final_status == "correct"
    assert episode.attempts[0].outcome.status == "timeout"
    assert "Error status: timeout" in episode.attempts[1].prompt.messages[-1].content


def test_sandbox_error_is_infra(aime_problem, scripted_backend_factory):
    backend = scripted_backend_factory(["```python\n#stub garbage\n```"])
    runner = EpisodeRunner(backend, None)  # no orchestrator configured
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "infra_error"


def test_gateway_miss_is_infra(aime_problem, stub_orchestrator, tmp_path):
    cassette = tmp_path / "empty.jsonl"
    cassette.write_text("")
    runner = EpisodeRunner(ReplayBackend(cassette), stub_orchestrator)
    episode = runner.run_episode(aime_problem, AblationFlags(), FAST_LOOP)
    assert episode.final_status == "infra_error"
    assert episode.attempts == ()


def test_cot_mode_scores_completion_text_directly(aime_problem, scripted_backend_factory):
    backend = scripted_backend_factory(
        ["Step 1: consider the incenter. Therefore the answer is \\boxed{468}."]
    )
    runner = EpisodeRunner(backend, None)
    loop = LoopConfig(prompt_mode="cot")
    episode = runner.run_episode(aime_problem, AblationFlags(), loop)
    assert episode.final_status == "correct"
    assert len(episode.attempts) == 1
    assert episode.attempts[0].prompt.kind == "cot_baseline"
    assert episode.attempts[0].script is None


def test_run_corpus_preserves_order_and_isolation(sample_problems, stub_orchestrator, scripted_backend_factory):
    per_problem = {
        "math500-parens": ["```python\n#stub ok\n\\boxed{4}\n```"],
        "olympiad-qt": ["```python\n#stub garbage\n```"],  # infra fault
        "aime-incenter": FIX_SEQUENCE,
    }
    backend = scripted_backend_factory([], per_problem=per_problem)
    runner = EpisodeRunner(backend, stub_orchestrator)
    episodes = runner.run_corpus(sample_problems, AblationFlags(), FAST_LOOP, parallelism=3)
    assert [e.problem_id for e in episodes] == [p.id for p in sample_problems]
    assert episodes[0].final_status == "correct"
    assert episodes[1].final_status == "infra_error"
    assert episodes[2].final_status == "correct"


def test_run_corpus_empty_is_empty(stub_orchestrator, scripted_backend_factory):
    runner = EpisodeRunner(scripted_backend_factory(["x"]), stub_orchestrator)
    assert runner.run_corpus([], AblationFlags(), FAST_LOOP) == []


def test_replay_parallelism_determinism(sample_problems, stub_orchestrator, scripted_backend_factory, tmp_path):
    # record deterministic traffic once, then replay at two parallelism levels
    per_problem = {
        "math500-parens": ["```python\n#stub ok\n\\boxed{4}\n```"],
        "olympiad-qt": ["```python\n#stub ok\n\\boxed{2 \\sqrt{10}}\n```"],
        "aime-incenter": FIX_SEQUENCE,
    }
    cassette = tmp_path / "cassette.jsonl"
    recorder = RecordingBackend(scripted_backend_factory([], per_problem=per_problem), cassette)
    EpisodeRunner(recorder, stub_orchestrator).run_corpus(
        sample_problems, AblationFlags(), FAST_LOOP, parallelism=1
    )

    logs = []
    for parallelism in (1, 8):
        replay = ReplayBackend(cassette)
        runner = EpisodeRunner(replay, stub_orchestrator)
        episodes = runner.run_corpus(sample_problems, AblationFlags(), FAST_LOOP, parallelism)
        log_path = tmp_path / f"episodes_p{parallelism}.jsonl"
        write_episode_log(log_path, episodes)
        logs.append(log_path.read_bytes())
    assert logs[0] == logs[1]


def test_episode_log_round_trip(sample_problems, stub_orchestrator, scripted_backend_factory, tmp_path):
    backend = scripted_backend_factory(FIX_SEQUENCE)
    runner = EpisodeRunner(backend, stub_orchestrator)
    episode = runner.run_episode(sample_problems[2], AblationFlags(), FAST_LOOP)
    path = tmp_path / "log.jsonl"
    write_episode_log(path, [episode])
    (record,) = read_episode_log(path)
    assert record["schema"] == 1
    assert record["problem_id"] == episode.problem_id
    assert record["final_status"] == "correct"
    assert record["attempts"][1]["boxed"] == "468"
    assert json.loads(serialize_episode(episode)) == record


def test_loop_config_validation():
    with pytest.raises(ValueError):
        LoopConfig(max_attempts=0)
    with pytest.raises(ValueError):
        LoopConfig(max_attempts=6)
    with pytest.raises(ValueError):
        LoopConfig(prompt_mode="tree")
