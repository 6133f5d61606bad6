"""Run each suite's tests on every non-parent engine; collect failures.

The failure matrix is suite-by-engine, with the suite's own engine skipped:
a failure there would be a regression or a flaky test, not transplantation
news. Human triage verdicts live in a sidecar annotations file that survives
pipeline reruns.
"""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus
from .engines import Runner
from .errors import UnknownEntry


class TriageCategory(enum.Enum):
    UNDEFINED_BEHAVIOR = "UNDEFINED_BEHAVIOR"
    TIMEOUT_OME = "TIMEOUT_OME"
    NOT_IMPLEMENTED = "NOT_IMPLEMENTED"
    NON_STANDARD_ELEMENT = "NON_STANDARD_ELEMENT"
    INVALID_INPUT = "INVALID_INPUT"
    ERROR_MESSAGE_MISMATCH = "ERROR_MESSAGE_MISMATCH"
    OTHER = "OTHER"
    DUPLICATE = "DUPLICATE"
    BUG = "BUG"


@dataclass(frozen=True)
class TriageLabel:
    test_id: str
    engine: str
    category: TriageCategory
    note: str = ""
    author: str = ""

    def to_json(self) -> dict:
        return {
            "test_id": self.test_id,
            "engine": self.engine,
            "category": self.category.value,
            "note": self.note,
            "author": self.author,
        }


@dataclass
class FailureMatrix:
    cells: dict[tuple[str, str], list[str]]
    diagonal_skipped: list[tuple[str, str]]

    def failing_ids(self) -> set[str]:
        out: set[str] = set()
        for ids in self.cells.values():
            out.update(ids)
        return out

    def total_failures(self) -> int:
        return sum(len(ids) for ids in self.cells.values())

    def suites(self) -> list[str]:
        return sorted({suite for suite, _ in self.cells} | {s for s, _ in self.diagonal_skipped})

    def engines(self) -> list[str]:
        return sorted({eng for _, eng in self.cells} | {e for _, e in self.diagonal_skipped})

    def to_json(self) -> dict:
        return {
            "cells": [
                [suite, engine, ids]
                for (suite, engine), ids in sorted(self.cells.items())
            ],
            "diagonal_skipped": [list(p) for p in sorted(self.diagonal_skipped)],
        }

    @classmethod
    def from_json(cls, data: dict) -> "FailureMatrix":
        return cls(
            cells={(s, e): list(ids) for s, e, ids in data.get("cells", [])},
            diagonal_skipped=[(s, e) for s, e in data.get("diagonal_skipped", [])],
        )


def run_matrix(corpus: Corpus, runner: Runner) -> FailureMatrix:
    """Execute every (test, non-parent engine) pair and record non-passes.

    Expects a corpus already cleansed of type-availability errors."""
    engine_names = [spec.name for spec in runner.registry]
    suite_names = sorted({t.origin_suite for t in corpus})

    cells: dict[tuple[str, str], list[str]] = {}
    skipped: list[tuple[str, str]] = []
    for suite in suite_names:
        parent = corpus.suites[suite].parent_engine if suite in corpus.suites else None
        for engine in engine_names:
            if engine == parent:
                skipped.append((suite, engine))
            else:
                cells[(suite, engine)] = []

    outcomes = runner.outcomes(corpus.tests)
    for t in corpus:
        parent = corpus.parent_engine_of(t)
        for spec in runner.registry:
            if spec.name == parent:
                continue
            if not outcomes[(t.id, spec.name)].is_pass:
                cells[(t.origin_suite, spec.name)].append(t.id)
    for ids in cells.values():
        ids.sort()
    return FailureMatrix(cells=cells, diagonal_skipped=sorted(skipped))


@dataclass
class AnnotationReport:
    labels: list[TriageLabel]
    distribution: dict[str, int]
    labeled: int
    unlabeled: int

    def to_json(self) -> dict:
        return {
            "labels": [l.to_json() for l in self.labels],
            "distribution": dict(sorted(self.distribution.items())),
            "labeled": self.labeled,
            "unlabeled": self.unlabeled,
        }


def annotate(matrix: FailureMatrix, labels: list[TriageLabel]) -> AnnotationReport:
    """Merge human triage labels into a distribution over categories.

    Every label must point at an existing failure cell entry."""
    failing: set[tuple[str, str]] = set()
    for (suite, engine), ids in matrix.cells.items():
        for test_id in ids:
            failing.add((test_id, engine))

    distribution = {c.value: 0 for c in TriageCategory}
    seen: set[tuple[str, str]] = set()
    for label in labels:
        if (label.test_id, label.engine) not in failing:
            raise UnknownEntry(label.test_id, label.engine)
        distribution[label.category.value] += 1
        seen.add((label.test_id, label.engine))
    return AnnotationReport(
        labels=list(labels),
        distribution=distribution,
        labeled=len(seen),
        unlabeled=len(failing) - len(seen),
    )


def append_labels(path: str | os.PathLike, labels: list[TriageLabel]) -> None:
    """Append-only annotations file, one JSON record per line."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    with p.open("a", encoding="utf-8") as fh:
        for label in labels:
            fh.write(json.dumps(label.to_json(), sort_keys=True) + "\n")


def load_labels(path: str | os.PathLike) -> list[TriageLabel]:
    p = Path(path)
    if not p.exists():
        return []
    labels = []
    for line in p.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        data = json.loads(line)
        labels.append(
            TriageLabel(
                test_id=data["test_id"],
                engine=data["engine"],
                category=TriageCategory(data["category"]),
                note=data.get("note", ""),
                author=data.get("author", ""),
            )
        )
    return labels
