"""Seed-test ingestion, cleansing filters and deduplication.

A corpus is an ordered set of test cases with suite provenance. The filter
pipeline narrows it in three monotone stages: drop tests that fail on their
own (parent) engine, drop tests that raise ReferenceError/TypeError anywhere
(missing-feature noise, not bugs), and finally keep only tests that pass
everywhere, which is the pool of eligible fuzzing seeds.
"""

from __future__ import annotations

import enum
import hashlib
import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from . import jstokens
from .engines import OutcomeCategory, Runner
from .errors import ConfigParse, MissingDirectory

log = logging.getLogger(__name__)

TYPE_AVAILABILITY_KINDS = frozenset({"ReferenceError", "TypeError"})
NEAR_DUP_THRESHOLD = 0.95


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # domain type, not a pytest class

    id: str
    origin_suite: str
    source: str
    needs_prelude: bool = False
    tags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SuiteSpec:
    name: str
    directory: str
    parent_engine: str | None = None
    needs_prelude: bool = False
    tags: tuple[str, ...] = ()


@dataclass
class Corpus:
    tests: list[TestCase]
    suites: dict[str, SuiteSpec] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.tests)

    def __iter__(self):
        return iter(self.tests)

    def ids(self) -> list[str]:
        return [t.id for t in self.tests]

    def subset(self, keep_ids: set[str]) -> "Corpus":
        return Corpus(
            tests=[t for t in self.tests if t.id in keep_ids],
            suites=self.suites,
        )

    def parent_engine_of(self, test: TestCase) -> str | None:
        suite = self.suites.get(test.origin_suite)
        return suite.parent_engine if suite else None

    def digests(self) -> dict[str, str]:
        per_suite: dict[str, hashlib._Hash] = {}
        for t in self.tests:
            h = per_suite.setdefault(t.origin_suite, hashlib.sha256())
            h.update(t.id.encode())
            h.update(hashlib.sha256(t.source.encode()).digest())
        out = {suite: h.hexdigest() for suite, h in sorted(per_suite.items())}
        total = hashlib.sha256()
        for suite, digest in sorted(out.items()):
            total.update(f"{suite}:{digest}".encode())
        out["*total*"] = total.hexdigest()
        return out


class FilterStage(enum.Enum):
    PASS_IN_PARENT = "PASS_IN_PARENT"
    TYPE_IN_ALL = "TYPE_IN_ALL"
    NO_FAIL_IN_ALL = "NO_FAIL_IN_ALL"
    DEDUP = "DEDUP"


@dataclass
class FilterReport:
    stage: FilterStage
    kept: int
    discarded: list[tuple[str, str]]
    near_duplicates: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def input_size(self) -> int:
        return self.kept + len(self.discarded)

    def to_json(self) -> dict:
        return {
            "stage": self.stage.value,
            "input": self.input_size,
            "kept": self.kept,
            "discarded": [list(d) for d in self.discarded],
            "near_duplicates": [list(p) for p in self.near_duplicates],
        }


def load_manifest(path: str | os.PathLike) -> list[SuiteSpec]:
    """Read the suite manifest (JSON, see configs/manifest.example.json)."""
    path = os.fspath(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigParse(path, "file not found")
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"{path}:{exc.lineno}", exc.msg)
    entries = data.get("suites")
    if not isinstance(entries, list):
        raise ConfigParse(path, "top level must contain a 'suites' list")
    suites = []
    seen: set[str] = set()
    base = Path(path).resolve().parent
    for i, entry in enumerate(entries):
        name = entry.get("name")
        directory = entry.get("dir")
        if not name or not directory:
            raise ConfigParse(f"{path}#suites[{i}]", "suite needs 'name' and 'dir'")
        if name in seen:
            raise ConfigParse(f"{path}#suites[{i}]", f"suite {name!r} declared twice")
        seen.add(name)
        directory = str((base / directory).resolve()) if not os.path.isabs(directory) else directory
        suites.append(
            SuiteSpec(
                name=name,
                directory=directory,
                parent_engine=entry.get("parent_engine"),
                needs_prelude=bool(entry.get("needs_prelude", False)),
                tags=tuple(entry.get("tags", [])),
            )
        )
    return suites


def ingest(manifest: str | os.PathLike | list[SuiteSpec]) -> Corpus:
    """One TestCase per .js file under each suite directory, ordered by id."""
    suites = manifest if isinstance(manifest, list) else load_manifest(manifest)
    tests: list[TestCase] = []
    for suite in suites:
        root = Path(suite.directory)
        if not root.is_dir():
            raise MissingDirectory(suite.name, str(root))
        files = sorted(p for p in root.rglob("*.js") if p.is_file())
        if not files:
            log.warning("suite %s has no .js files under %s", suite.name, root)
        for p in files:
            rel = p.relative_to(root).as_posix()
            source = p.read_text(encoding="utf-8", errors="replace")
            if not source:
                log.warning("skipping empty file %s", p)
                continue
            tests.append(
                TestCase(
                    id=f"{suite.name}/{rel}",
                    origin_suite=suite.name,
                    source=source,
                    needs_prelude=suite.needs_prelude,
                    tags=frozenset(suite.tags),
                )
            )
    tests.sort(key=lambda t: t.id)
    return Corpus(tests=tests, suites={s.name: s for s in suites})


def filter_pass_in_parent(corpus: Corpus, runner: Runner) -> tuple[Corpus, FilterReport]:
    """Drop tests that do not PASS on the engine their suite came from.

    Suites without a parent engine binding (conformance or third-party
    corpora) are kept unconditionally."""
    bound = [t for t in corpus if corpus.parent_engine_of(t) is not None]
    by_engine: dict[str, list[TestCase]] = {}
    for t in bound:
        by_engine.setdefault(corpus.parent_engine_of(t), []).append(t)
    for engine_name, tests in by_engine.items():
        runner.outcomes(tests, [runner.engine(engine_name)])

    kept_ids: set[str] = set()
    discarded: list[tuple[str, str]] = []
    for t in corpus:
        parent = corpus.parent_engine_of(t)
        if parent is None:
            kept_ids.add(t.id)
            continue
        outcome = runner.outcome(runner.engine(parent), t)
        if outcome.is_pass:
            kept_ids.add(t.id)
        else:
            discarded.append((t.id, f"fails in parent: {outcome.category.value}"))
    report = FilterReport(FilterStage.PASS_IN_PARENT, len(kept_ids), discarded)
    return corpus.subset(kept_ids), report


def filter_type_in_all(corpus: Corpus, runner: Runner) -> tuple[Corpus, FilterReport]:
    """Drop tests raising ReferenceError or TypeError on any engine.

    Those two kinds signal a missing feature or non-portable name rather
    than a bug, so they would only add noise downstream. Detection is by
    classified outcome kind, not raw output grep."""
    outcomes = runner.outcomes(corpus.tests)
    kept_ids: set[str] = set()
    discarded: list[tuple[str, str]] = []
    for t in corpus:
        reason = None
        for spec in runner.registry:
            o = outcomes[(t.id, spec.name)]
            if (
                o.category is OutcomeCategory.RUNTIME_ERROR
                and o.exception_kind in TYPE_AVAILABILITY_KINDS
            ):
                reason = f"{o.exception_kind} on {spec.name}"
                break
        if reason is None:
            kept_ids.add(t.id)
        else:
            discarded.append((t.id, reason))
    report = FilterReport(FilterStage.TYPE_IN_ALL, len(kept_ids), discarded)
    return corpus.subset(kept_ids), report


def filter_no_fail_in_all(corpus: Corpus, runner: Runner) -> tuple[Corpus, FilterReport]:
    """Keep exactly the tests that PASS on every engine (fuzzing seeds)."""
    outcomes = runner.outcomes(corpus.tests)
    kept_ids: set[str] = set()
    discarded: list[tuple[str, str]] = []
    for t in corpus:
        failing = [
            (spec.name, outcomes[(t.id, spec.name)])
            for spec in runner.registry
            if not outcomes[(t.id, spec.name)].is_pass
        ]
        if not failing:
            kept_ids.add(t.id)
        else:
            name, o = failing[0]
            discarded.append((t.id, f"{o.category.value} on {name}"))
    report = FilterReport(FilterStage.NO_FAIL_IN_ALL, len(kept_ids), discarded)
    return corpus.subset(kept_ids), report


def _canonical_bytes(source: str) -> str:
    return "\n".join(line.rstrip() for line in source.splitlines()).rstrip("\n")


def _token_set(source: str) -> frozenset[str]:
    return frozenset(jstokens.strip_and_normalize(source))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def dedup(corpus: Corpus) -> tuple[Corpus, FilterReport]:
    """Collapse exact duplicates; report (but keep) near-duplicates.

    Exact means byte-identical after trimming trailing whitespace; the
    survivor is the lexicographically smallest id. Near-duplicates are
    pairs whose comment-stripped token sets have Jaccard similarity at or
    above NEAR_DUP_THRESHOLD; removal is left to the operator."""
    by_canonical: dict[str, list[TestCase]] = {}
    for t in corpus:  # corpus is already id-ordered
        by_canonical.setdefault(_canonical_bytes(t.source), []).append(t)

    kept: list[TestCase] = []
    discarded: list[tuple[str, str]] = []
    for group in by_canonical.values():
        keeper = min(group, key=lambda t: t.id)
        kept.append(keeper)
        for other in group:
            if other.id != keeper.id:
                discarded.append((other.id, f"exact duplicate of {keeper.id}"))
    kept.sort(key=lambda t: t.id)
    discarded.sort()

    tokens = {t.id: _token_set(t.source) for t in kept}
    near: list[tuple[str, str, float]] = []
    for i, a in enumerate(kept):
        for b in kept[i + 1:]:
            score = jaccard(tokens[a.id], tokens[b.id])
            if score >= NEAR_DUP_THRESHOLD:
                near.append((a.id, b.id, round(score, 4)))

    report = FilterReport(FilterStage.DEDUP, len(kept), discarded, near_duplicates=near)
    return Corpus(tests=kept, suites=corpus.suites), report


def run_filter_pipeline(
    corpus: Corpus, runner: Runner, with_dedup: bool = False
) -> tuple[Corpus, list[FilterReport]]:
    """The standard narrowing order; returns the final corpus and one
    report per stage."""
    reports: list[FilterReport] = []
    if with_dedup:
        corpus, rep = dedup(corpus)
        reports.append(rep)
    corpus, rep = filter_pass_in_parent(corpus, runner)
    reports.append(rep)
    corpus, rep = filter_type_in_all(corpus, runner)
    reports.append(rep)
    corpus, rep = filter_no_fail_in_all(corpus, runner)
    reports.append(rep)
    return corpus, reports
