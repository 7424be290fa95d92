"""Evaluation metrics over episode sets and deterministic report tables.

Aggregation is a pure fold over counts, so it is order-insensitive and
partition-mergeable (aggregate(A + B) == merge(aggregate(A), aggregate(B))).
Error labels come from a human-assigned sidecar file, never auto-inference:
one JSON object per line {"episode_id": ..., "label": ...}.
"""

import json
from collections import Counter
from dataclasses import dataclass, field

from .errors import DivisionByZero, EmptyRun, SchemaError

ERROR_LABELS = (
    "arithmetic_mistake",
    "logical_fallacy",
    "problem_misinterpretation",
    "incorrect_api_usage",
    "runtime_issue",
    "verification_failure",
    "other",
)


@dataclass(frozen=True)
class RunMetrics:
    accuracy: float
    mean_completion_tokens: float
    debug_activation_rate: float
    n: int
    indeterminate_rate: float
    by_subject: dict
    by_answer_kind: dict
    error_labels: dict


@dataclass
class MetricCounts:
    """Mergeable accumulator behind RunMetrics."""

    n: int = 0
    correct: int = 0
    indeterminate: int = 0
    activated: int = 0
    tokens_sum: int = 0
    subject_n: Counter = field(default_factory=Counter)
    subject_correct: Counter = field(default_factory=Counter)
    kind_n: Counter = field(default_factory=Counter)
    kind_correct: Counter = field(default_factory=Counter)
    labels: Counter = field(default_factory=Counter)

    def add_episode(self, final_status, completion_tokens, debug_activated,
                    subject=None, answer_kind=None, label=None):
        self.n += 1
        is_correct = final_status == "correct"
        self.correct += is_correct
        self.indeterminate += final_status == "indeterminate"
        self.activated += bool(debug_activated)
        self.tokens_sum += completion_tokens
        if subject is not None:
            self.subject_n[subject] += 1
            self.subject_correct[subject] += is_correct
        if answer_kind is not None:
            self.kind_n[answer_kind] += 1
            self.kind_correct[answer_kind] += is_correct
        if label is not None:
            if label not in ERROR_LABELS:
                raise SchemaError(f"unknown error label {label!r}")
            self.labels[label] += 1

    def merge(self, other: "MetricCounts") -> "MetricCounts":
        out = MetricCounts(
            n=self.n + other.n,
            correct=self.correct + other.correct,
            indeterminate=self.indeterminate + other.indeterminate,
            activated=self.activated + other.activated,
            tokens_sum=self.tokens_sum + other.tokens_sum,
        )
        out.subject_n = self.subject_n + other.subject_n
        out.subject_correct = self.subject_correct + other.subject_correct
        out.kind_n = self.kind_n + other.kind_n
        out.kind_correct = self.kind_correct + other.kind_correct
        out.labels = self.labels + other.labels
        return out

    def finalize(self) -> RunMetrics:
        if self.n == 0:
            raise EmptyRun("no episodes to aggregate")
        by_subject = {
            s: self.subject_correct[s] / self.subject_n[s] for s in sorted(self.subject_n)
        }
        by_kind = {
            k: self.kind_correct[k] / self.kind_n[k] for k in sorted(self.kind_n)
        }
        return RunMetrics(
            accuracy=self.correct / self.n,
            mean_completion_tokens=self.tokens_sum / self.n,
            debug_activation_rate=self.activated / self.n,
            n=self.n,
            indeterminate_rate=self.indeterminate / self.n,
            by_subject=by_subject,
            by_answer_kind=by_kind,
            error_labels={k: self.labels[k] for k in sorted(self.labels)},
        )


def _episode_fields(episode):
    """Accept both Episode dataclasses and stored log records."""
    if isinstance(episode, dict):
        return (
            episode["problem_id"],
            episode["final_status"],
            episode.get("completion_tokens_total", 0),
            episode.get("debug_activated", False),
        )
    return (
        episode.problem_id,
        episode.final_status,
        episode.completion_tokens_total,
        episode.debug_activated,
    )


def collect_counts(episodes, labels=None, problems_by_id=None) -> MetricCounts:
    counts = MetricCounts()
    labels = labels or {}
    problems_by_id = problems_by_id or {}
    for episode in episodes:
        problem_id, final_status, tokens, activated = _episode_fields(episode)
        problem = problems_by_id.get(problem_id)
        counts.add_episode(
            final_status,
            tokens,
            activated,
            subject=getattr(problem, "subject", None),
            answer_kind=getattr(problem, "answer_kind", None),
            label=labels.get(problem_id),
        )
    return counts


def aggregate(episodes, labels=None, problems=None) -> RunMetrics:
    """Fold episodes into RunMetrics.

    Tokens are averaged over all episodes including failures; accuracy counts
    only final_status == correct (indeterminate verdicts count as incorrect
    but are surfaced in indeterminate_rate for manual review). labels maps
    episode id -> taxonomy label; problems (optional) resolves subject and
    answer_kind splits.
    """
    episodes = list(episodes)
    if not episodes:
        raise EmptyRun("no episodes to aggregate")
    problems_by_id = {p.id: p for p in problems} if problems else {}
    return collect_counts(episodes, labels, problems_by_id).finalize()


def token_reduction(method_mean: float, baseline_mean: float) -> float:
    """Fractional output-token saving of a method against a baseline mean."""
    if baseline_mean <= 0:
        raise DivisionByZero("baseline mean tokens must be positive")
    return 1.0 - method_mean / baseline_mean


def load_labels(path) -> dict:
    """Read the human-labeled failure sidecar: {episode_id, label} per line."""
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid label JSON: {exc.msg}", line=lineno, path=path) from exc
            if "episode_id" not in record or "label" not in record:
                raise SchemaError("label entry needs episode_id and label", line=lineno, path=path)
            if record["label"] not in ERROR_LABELS:
                raise SchemaError(
                    f"unknown error label {record['label']!r}", line=lineno, path=path
                )
            labels[record["episode_id"]] = record["label"]
    return labels


# ---------------------------------------------------------------------------
# report rendering


def _pct(fraction: float) -> str:
    return f"{fraction * 100:.1f}"


def _table(headers, rows) -> str:
    lines = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(str(cell) for cell in row) + " |")
    return "\n".join(lines)


def render_report(entries) -> str:
    """Deterministic markdown report over labeled metric sets.

    entries is an ordered list of (label, RunMetrics); row order is preserved
    so ablation tables keep their configuration order. All numbers print at
    one decimal place.
    """
    if not entries:
        raise EmptyRun("report needs at least one entry")
    sections = []
    sections.append("## Accuracy")
    sections.append(
        _table(
            ["configuration", "accuracy (%)", "indeterminate (%)", "n"],
            [
                (label, _pct(m.accuracy), _pct(m.indeterminate_rate), m.n)
                for label, m in entries
            ],
        )
    )
    baseline = entries[0][1].mean_completion_tokens
    token_rows = []
    for position, (label, m) in enumerate(entries):
        saving = (
            "-"
            if position == 0 or baseline <= 0
            else _pct(token_reduction(m.mean_completion_tokens, baseline))
        )
        token_rows.append((label, f"{m.mean_completion_tokens:.1f}", saving))
    sections.append("## Output tokens")
    sections.append(
        _table(["configuration", "mean completion tokens", "reduction vs first row (%)"], token_rows)
    )
    sections.append("## Self-debug activation")
    sections.append(
        _table(
            ["configuration", "activation rate (%)"],
            [(label, _pct(m.debug_activation_rate)) for label, m in entries],
        )
    )
    subject_rows = [
        (label, subject, _pct(acc))
        for label, m in entries
        for subject, acc in m.by_subject.items()
    ]
    if subject_rows:
        sections.append("## Accuracy by subject")
        sections.append(_table(["configuration", "subject", "accuracy (%)"], subject_rows))
    kind_rows = [
        (label, kind, _pct(acc))
        for label, m in entries
        for kind, acc in m.by_answer_kind.items()
    ]
    if kind_rows:
        sections.append("## Accuracy by answer kind")
        sections.append(_table(["configuration", "answer kind", "accuracy (%)"], kind_rows))
    label_rows = []
    for label, m in entries:
        total = sum(m.error_labels.values())
        for name, count in m.error_labels.items():
            label_rows.append((label, name, count, _pct(count / total)))
    if label_rows:
        sections.append("## Labeled failure modes")
        sections.append(
            _table(["configuration", "label", "count", "share (%)"], label_rows)
        )
    return "\n\n".join(sections) + "\n"
