"""Benchmark problem ingestion.

A corpus file is UTF-8 with one JSON object per line. Required keys: "id",
"statement", "answer". Optional: "subject", "answer_kind". Statements and
answers are stored verbatim; any LaTeX normalization happens later in the
answer engine, never at ingest.

Contest answer sheets that use a fixed-width integer convention (e.g. the
three-digit 000-999 style) are ingested as plain integers; leading zeros are
preserved in the raw string and unified during scoring.
"""

import json
import re
from dataclasses import dataclass
from typing import Optional

from .errors import SchemaError

DATASETS = frozenset({"math500", "olympiadbench", "aime", "custom"})
ANSWER_KINDS = frozenset({"numeric", "expression"})

# Canonical subject tags; ingestion accepts any non-empty tag since the source
# benchmarks carry more (e.g. precalculus).
SUBJECTS = ("algebra", "geometry", "number_theory", "combinatorics")

_PURE_NUMBER = re.compile(r"-?\d+(\.\d+)?")


@dataclass(frozen=True)
class Problem:
    """One benchmark item: statement text plus its ground-truth answer string."""

    id: str
    dataset: str
    statement: str
    ground_truth: str
    subject: Optional[str] = None
    answer_kind: str = "numeric"

    def __post_init__(self):
        if not self.id:
            raise ValueError("problem id must be non-empty")
        if not self.statement:
            raise ValueError("problem statement must be non-empty")
        if not self.ground_truth:
            raise ValueError("problem ground_truth must be non-empty")
        if self.dataset not in DATASETS:
            raise ValueError(f"unknown dataset {self.dataset!r}")
        if self.answer_kind not in ANSWER_KINDS:
            raise ValueError(f"unknown answer_kind {self.answer_kind!r}")


def default_answer_kind(ground_truth: str) -> str:
    """Numeric when the ground truth is a pure number, expression otherwise."""
    return "numeric" if _PURE_NUMBER.fullmatch(ground_truth.strip()) else "expression"


def load_corpus(path, dataset: str) -> list[Problem]:
    """Load and validate problems from a line-delimited record file.

    Deterministic: the same bytes always yield the same Problem list, in file
    order. Raises SchemaError (with the line number) on malformed records,
    empty required fields, or duplicate ids; IOError on unreadable files.
    """
    if dataset not in DATASETS:
        raise SchemaError(f"unknown dataset {dataset!r}", path=path)
    problems = []
    seen = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line=lineno, path=path) from exc
            if not isinstance(record, dict):
                raise SchemaError("record is not a JSON object", line=lineno, path=path)
            problems.append(_validate_record(record, dataset, lineno, seen, path))
    return problems


def _validate_record(record, dataset, lineno, seen, path) -> Problem:
    for key in ("id", "statement", "answer"):
        value = record.get(key)
        if not isinstance(value, str) or not value:
            raise SchemaError(f"missing or empty required key {key!r}", line=lineno, path=path)
    pid = record["id"]
    if pid in seen:
        raise SchemaError(
            f"duplicate id {pid!r} (first seen on line {seen[pid]})", line=lineno, path=path
        )
    seen[pid] = lineno
    subject = record.get("subject")
    if subject is not None and (not isinstance(subject, str) or not subject):
        raise SchemaError("subject must be a non-empty string when present", line=lineno, path=path)
    answer_kind = record.get("answer_kind")
    if answer_kind is None:
        answer_kind = default_answer_kind(record["answer"])
    elif answer_kind not in ANSWER_KINDS:
        raise SchemaError(f"unknown answer_kind {answer_kind!r}", line=lineno, path=path)
    return Problem(
        id=pid,
        dataset=dataset,
        statement=record["statement"],
        ground_truth=record["answer"],
        subject=subject,
        answer_kind=answer_kind,
    )


def dump_corpus(problems, path) -> None:
    """Serialize problems back to the line-delimited record format.

    Round-trip guarantee: load_corpus(dump_corpus(ps)) == ps.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for problem in problems:
            record = {
                "id": problem.id,
                "statement": problem.statement,
                "answer": problem.ground_truth,
                "answer_kind": problem.answer_kind,
            }
            if problem.subject is not None:
                record["subject"] = problem.subject
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
