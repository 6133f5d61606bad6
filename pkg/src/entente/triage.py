"""Order warnings for human inspection and minimize fault-revealing inputs.

Inspection is fair across engines: items are grouped by the engine whose
behavior deviates (plus the "+1" group for multi-engine disagreements) and
drained k at a time in round-robin, hi warnings strictly before lo cluster
representatives. Minimization is a line-then-token ddmin whose predicate
pins the full warning identity, so reduction cannot slide onto a different
discrepancy.
"""

from __future__ import annotations

import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from .cluster import Cluster, signature_of_outcomes
from .engines import EngineSpec, run_and_classify
from .errors import PredicateFlaky
from .oracle import PRIORITY_HI, PRIORITY_LO, Warning, compare
from . import jstokens

DEFAULT_K_PER_ITERATION = 10


@dataclass(frozen=True)
class QueueItem:
    ref: str
    priority: str
    group: str
    cluster_size: int = 1

    def to_json(self) -> dict:
        return {
            "ref": self.ref,
            "priority": self.priority,
            "group": self.group,
            "cluster_size": self.cluster_size,
        }


@dataclass
class InspectionQueue:
    """Round-robin draining of per-group FIFOs, k items per visit."""

    groups: dict[str, list[QueueItem]]
    k_per_iteration: int = DEFAULT_K_PER_ITERATION
    cursor: int = 0

    @classmethod
    def from_items(cls, items: Sequence[QueueItem], k: int) -> "InspectionQueue":
        groups: dict[str, list[QueueItem]] = {}
        for item in sorted(items, key=lambda i: i.ref):
            groups.setdefault(item.group, []).append(item)
        return cls(groups={name: groups[name] for name in sorted(groups)}, k_per_iteration=k)

    def next_batch(self) -> list[QueueItem]:
        """Up to k items from the next non-empty group in cyclic order."""
        names = sorted(self.groups)
        if not any(self.groups.values()):
            return []
        for _ in range(len(names)):
            name = names[self.cursor % len(names)]
            self.cursor += 1
            fifo = self.groups[name]
            if fifo:
                batch, self.groups[name] = (
                    fifo[: self.k_per_iteration],
                    fifo[self.k_per_iteration:],
                )
                return batch
        return []

    def drain(self) -> list[QueueItem]:
        out: list[QueueItem] = []
        while True:
            batch = self.next_batch()
            if not batch:
                return out
            out.extend(batch)


def schedule(
    hi_warnings: Sequence[Warning],
    lo_clusters: Sequence[Cluster],
    k: int = DEFAULT_K_PER_ITERATION,
) -> list[QueueItem]:
    """Full inspection order: hi warnings first, then one representative
    per lo cluster, each tier drained round-robin over groups."""
    if k < 1:
        raise ValueError("k must be at least 1")
    hi_items = [
        QueueItem(ref=w.ref, priority=PRIORITY_HI, group=w.group) for w in hi_warnings
    ]
    lo_items = [
        QueueItem(
            ref=c.representative,
            priority=PRIORITY_LO,
            group=c.group,
            cluster_size=c.size,
        )
        for c in lo_clusters
    ]
    order = InspectionQueue.from_items(hi_items, k).drain()
    order += InspectionQueue.from_items(lo_items, k).drain()
    return order


# --- minimization -----------------------------------------------------------

Predicate = Callable[[str], bool]


def _ddmin(items: list, test: Callable[[list], bool]) -> list:
    """Zeller-style minimizing delta debugging over a list.

    Assumes test(items) is True; returns a sublist that still satisfies the
    test and is 1-minimal: dropping any single element breaks it."""
    if test([]):
        return []
    c = list(items)
    n = 2
    while len(c) >= 2:
        chunk_size = (len(c) + n - 1) // n
        chunks = [c[i : i + chunk_size] for i in range(0, len(c), chunk_size)]
        reduced = False
        for chunk in chunks:
            if len(chunk) < len(c) and test(chunk):
                c, n, reduced = chunk, 2, True
                break
        if reduced:
            continue
        for i in range(len(chunks)):
            comp = [x for j, chunk in enumerate(chunks) if j != i for x in chunk]
            if len(comp) < len(c) and test(comp):
                c, n, reduced = comp, max(n - 1, 2), True
                break
        if reduced:
            continue
        if n >= len(c):
            break
        n = min(2 * n, len(c))
    return c


def _reduce_tokens_in_line(
    lines: list[str], index: int, predicate: Predicate, cache: dict[str, bool]
) -> str:
    line = lines[index]
    try:
        tokens = [t.text for t in jstokens.tokenize(line)]
    except jstokens.TokenizeError:
        return line
    if len(tokens) < 2:
        return line

    def test(kept: list) -> bool:
        rebuilt = list(lines)
        rebuilt[index] = " ".join(kept)
        return _cached(predicate, cache, "\n".join(rebuilt))

    kept = _ddmin(tokens, test)
    if 0 < len(kept) < len(tokens):
        return " ".join(kept)
    return line


def _cached(predicate: Predicate, cache: dict[str, bool], candidate: str) -> bool:
    if not candidate.strip():
        return False
    hit = cache.get(candidate)
    if hit is None:
        hit = cache[candidate] = bool(predicate(candidate))
    return hit


def reduce(source: str, predicate: Predicate) -> str:
    """Minimize source while the predicate stays true.

    Line-level ddmin first, then token-level within each surviving line,
    looping until the result is 1-minimal at line granularity. Raises
    PredicateFlaky when the predicate rejects the input up front or the
    final result on re-validation."""
    cache: dict[str, bool] = {}
    if not _cached(predicate, cache, source):
        raise PredicateFlaky("predicate is false on the unreduced input")

    lines = source.splitlines() or [source]

    def line_test(kept: list) -> bool:
        return _cached(predicate, cache, "\n".join(kept))

    while True:
        lines = _ddmin(lines, line_test)
        lines = [
            _reduce_tokens_in_line(lines, i, predicate, cache)
            for i in range(len(lines))
        ]
        # Token reduction may unlock further line removals; verify
        # 1-minimality and go around again if it broke.
        one_minimal = True
        for i in range(len(lines)):
            probe = lines[:i] + lines[i + 1:]
            if probe and _cached(predicate, cache, "\n".join(probe)):
                one_minimal = False
                break
        if one_minimal:
            break

    result = "\n".join(lines)
    if not _cached(predicate, cache, result):
        raise PredicateFlaky("reduced result no longer satisfies the predicate")
    return result


def make_warning_predicate(
    registry: Sequence[EngineSpec],
    baseline: Warning,
    prelude: str | None = None,
) -> Predicate:
    """Predicate for reduce(): the candidate must reproduce the baseline
    warning's identity (priority, group and full signature)."""
    target = (
        baseline.priority,
        baseline.group,
        signature_of_outcomes(baseline.outcomes),
    )

    def predicate(candidate: str) -> bool:
        if not candidate.strip():
            return False
        outcomes = {
            spec.name: run_and_classify(spec, candidate, prelude=prelude)
            for spec in registry
        }
        found = compare(outcomes, ref=baseline.ref)
        if found is None:
            return False
        identity = (found.priority, found.group, signature_of_outcomes(found.outcomes))
        return identity == target

    return predicate


class ExternalReducer:
    """Hook for an external minimizer: ``cmd <in> <out>``.

    The output is re-validated against the predicate; a reducer that
    breaks the warning identity raises PredicateFlaky."""

    def __init__(self, command: list[str], timeout: float = 600.0):
        self.command = list(command)
        self.timeout = timeout

    def reduce(self, source: str, predicate: Predicate) -> str:
        if not predicate(source):
            raise PredicateFlaky("predicate is false on the unreduced input")
        with tempfile.TemporaryDirectory(prefix="entente-reduce-") as tmp:
            src = Path(tmp) / "in.js"
            dst = Path(tmp) / "out.js"
            src.write_text(source, encoding="utf-8")
            subprocess.run(
                [*self.command, str(src), str(dst)],
                check=True,
                timeout=self.timeout,
                capture_output=True,
            )
            result = dst.read_text(encoding="utf-8")
        if not predicate(result):
            raise PredicateFlaky("external reducer output fails the predicate")
        return result
