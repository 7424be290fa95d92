"""Operator entry point: run, ablate, score, report, record.

Episode logs are append-only; a crashed run resumes by skipping problem ids
already present in the log. All paths are explicit, the only environment
input is the API credential variable.
"""

import argparse
import os
import sys

from .answers.equivalence import DEFAULT_POLICY, EscalationPolicy, check_equivalence
from .answers.oracle import make_sandbox_oracle
from .config import load_config
from .corpus import load_corpus
from .episodes import (
    AblationFlags,
    EpisodeRunner,
    read_episode_log,
    write_episode_log,
)
from .errors import CasbenchError, ConfigError, UnknownEpisodeId
from .gateway import LiveBackend, RecordingBackend, ReplayBackend, TokenBucket
from .metrics import aggregate, load_labels, render_report
from .sandbox import SandboxOrchestrator

# Repair-loop variants in the order ablation tables report them: the full
# configuration first, then one feature removed at each step.
ABLATION_GRID = (
    ("SymCode+", AblationFlags(self_debug=True, verification=True, symbolic=True)),
    ("No Self-Debug", AblationFlags(self_debug=False, verification=True, symbolic=True)),
    ("No Verification", AblationFlags(self_debug=False, verification=False, symbolic=True)),
    ("No SymPy (Numeric Python)", AblationFlags(self_debug=False, verification=False, symbolic=False)),
)


def _build_backend(config):
    if config.backend.kind == "replay":
        return ReplayBackend(config.backend.cassette)
    limiter = None
    if config.backend.requests_per_second > 0:
        limiter = TokenBucket(
            rate=config.backend.requests_per_second,
            capacity=max(1, config.backend.burst),
        )
    backend = LiveBackend(
        base_url=config.backend.base_url,
        timeout_s=config.backend.timeout_s,
        max_retries=config.backend.max_retries,
        rate_limiter=limiter,
    )
    if config.record:
        return RecordingBackend(backend, config.record_cassette)
    return backend


def _build_runner(config, backend):
    orchestrator = (
        SandboxOrchestrator(list(config.worker_cmd), max_workers=config.parallelism)
        if config.worker_cmd
        else None
    )
    policy = DEFAULT_POLICY
    if config.oracle and orchestrator is not None:
        policy = EscalationPolicy(allow_oracle=True, oracle=make_sandbox_oracle(orchestrator))
    return EpisodeRunner(backend, orchestrator, policy)


def _print_summary(title, metrics, out=None):
    (out or sys.stdout).write(render_report([(title, metrics)]))


def cmd_run(config) -> int:
    problems = load_corpus(config.corpus, config.dataset)
    backend = _build_backend(config)
    runner = _build_runner(config, backend)

    done_ids = set()
    if os.path.exists(config.episode_log):
        done_ids = {record["problem_id"] for record in read_episode_log(config.episode_log)}
    pending = [p for p in problems if p.id not in done_ids]
    if done_ids:
        print(f"resuming: {len(done_ids)} episodes already logged, {len(pending)} to run")

    episodes = runner.run_corpus(pending, config.flags, config.loop, config.parallelism)
    write_episode_log(config.episode_log, episodes, append=bool(done_ids))

    all_records = read_episode_log(config.episode_log)
    metrics = aggregate(all_records, problems=problems)
    _print_summary("run", metrics)
    return 0


def cmd_ablate(config) -> int:
    problems = load_corpus(config.corpus, config.dataset)
    backend = _build_backend(config)
    entries = []
    base_log = config.episode_log
    stem, dot, ext = base_log.rpartition(".")
    for label, flags in ABLATION_GRID:
        runner = _build_runner(config, backend)
        episodes = runner.run_corpus(problems, flags, config.loop, config.parallelism)
        suffix = label.lower().replace(" ", "_").replace("(", "").replace(")", "").replace("+", "plus")
        log_path = f"{stem}.{suffix}.{ext}" if dot else f"{base_log}.{suffix}"
        write_episode_log(log_path, episodes)
        entries.append((label, aggregate(episodes, problems=problems)))
    document = render_report(entries)
    if config.report_path:
        with open(config.report_path, "w", encoding="utf-8") as fh:
            fh.write(document)
    sys.stdout.write(document)
    return 0


def _stored_boxed(record):
    for attempt in reversed(record.get("attempts", [])):
        if attempt.get("boxed"):
            return attempt["boxed"]
    return None


def rescore_records(records, problems_by_id, policy=DEFAULT_POLICY):
    """Re-score stored boxed answers against ground truth; the answer engine
    can be upgraded independently of generation."""
    rescored = []
    for record in records:
        problem = problems_by_id.get(record["problem_id"])
        if problem is None:
            raise UnknownEpisodeId(record["problem_id"])
        boxed = _stored_boxed(record)
        updated = dict(record)
        if boxed is not None:
            verdict = check_equivalence(boxed, problem.ground_truth, policy)
            updated["final_status"] = {
                "equivalent": "correct",
                "distinct": "incorrect",
                "indeterminate": "indeterminate",
            }[verdict.verdict]
            updated["verdict"] = {
                "verdict": verdict.verdict,
                "method": verdict.method,
                "detail": verdict.detail,
            }
        rescored.append(updated)
    return rescored


def cmd_score(episode_log, corpus_path, dataset, labels_path=None) -> int:
    problems = load_corpus(corpus_path, dataset)
    records = read_episode_log(episode_log)
    labels = load_labels(labels_path) if labels_path else None
    rescored = rescore_records(records, {p.id: p for p in problems})
    metrics = aggregate(rescored, labels=labels, problems=problems)
    _print_summary("score", metrics)
    return 0


def cmd_report(entries, labels_path=None, out_path=None) -> int:
    labels = load_labels(labels_path) if labels_path else None
    rendered_entries = []
    for label, log_path in entries:
        records = read_episode_log(log_path)
        rendered_entries.append((label, aggregate(records, labels=labels)))
    document = render_report(rendered_entries)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(document)
    sys.stdout.write(document)
    return 0


def _common_config(args):
    overrides = {}
    if args.episode_log:
        overrides["episode_log"] = args.episode_log
    if args.parallelism:
        overrides["parallelism"] = args.parallelism
    return load_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="casbench",
        description="Benchmark harness for CAS-script math reasoning",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("run", "run the pipeline over a corpus"),
        ("ablate", "run the four ablation configurations and print the table"),
        ("record", "run against the live backend while recording a cassette"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--episode-log", dest="episode_log", help="override episode log path")
        p.add_argument("--parallelism", type=int, help="override worker count")

    p = sub.add_parser("score", help="re-score a stored episode log against a corpus")
    p.add_argument("--episodes", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--labels", help="optional failure-label sidecar")

    p = sub.add_parser("report", help="render tables from one or more episode logs")
    p.add_argument(
        "--entry",
        action="append",
        required=True,
        metavar="LABEL=LOGPATH",
        help="repeatable labeled episode log",
    )
    p.add_argument("--labels", help="optional failure-label sidecar")
    p.add_argument("--out", help="also write the report to this path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "record"):
            config = _common_config(args)
            if args.command == "record":
                if config.backend.kind != "live":
                    raise ConfigError("backend.kind", "record requires a live backend")
                if not config.record:
                    raise ConfigError("record", "set record=true and record_cassette in the config")
            return cmd_run(config)
        if args.command == "ablate":
            return cmd_ablate(_common_config(args))
        if args.command == "score":
            return cmd_score(args.episodes, args.corpus, args.dataset, args.labels)
        if args.command == "report":
            entries = []
            for item in args.entry:
                label, sep, log_path = item.partition("=")
                if not sep:
                    raise ConfigError("--entry", f"expected LABEL=LOGPATH, got {item!r}")
                entries.append((label, log_path))
            return cmd_report(entries, args.labels, args.out)
        raise ConfigError("command", f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CasbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
