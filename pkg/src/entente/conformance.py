"""Conformance-suite runner with averaged pass ratios.

Understands the conformance suite's frontmatter far enough for scoring:
``negative`` expectations (the test passes when the declared error kind is
raised) and ``includes`` (harness files prepended from the suite's harness/
directory). Repeats run back to back; pinned binaries make a daily cadence
pointless, so the average mostly documents variance.
"""

from __future__ import annotations

import concurrent.futures
import os
import re
import statistics
from dataclasses import dataclass
from pathlib import Path

import yaml

from .engines import EngineSpec, OutcomeCategory, run_and_classify
from .errors import EmptySuite

DEFAULT_REPEATS = 7

_FRONTMATTER_RE = re.compile(r"/\*---(.*?)---\*/", re.DOTALL)


@dataclass(frozen=True)
class ConformanceRun:
    engine: str
    total: int
    passed: int
    run_index: int

    @property
    def ratio(self) -> float | None:
        return self.passed / self.total if self.total else None

    def to_json(self) -> dict:
        return {
            "engine": self.engine,
            "total": self.total,
            "passed": self.passed,
            "run_index": self.run_index,
            "ratio": self.ratio,
        }


@dataclass
class ConformanceResult:
    engine: str
    runs: list[ConformanceRun]
    mean_ratio: float | None
    variance: float | None

    def to_json(self) -> dict:
        return {
            "engine": self.engine,
            "mean_ratio": self.mean_ratio,
            "variance": self.variance,
            "runs": [r.to_json() for r in self.runs],
        }


def parse_frontmatter(source: str) -> dict:
    m = _FRONTMATTER_RE.search(source)
    if not m:
        return {}
    try:
        data = yaml.safe_load(m.group(1))
    except yaml.YAMLError:
        return {}
    return data if isinstance(data, dict) else {}


def expected_negative_kind(meta: dict) -> str | None:
    negative = meta.get("negative")
    if negative is None:
        return None
    if isinstance(negative, str):
        return negative
    if isinstance(negative, dict):
        return negative.get("type")
    return None


@dataclass(frozen=True)
class _SuiteTest:
    path: str
    source: str
    prelude: str | None
    negative_kind: str | None


def _load_suite(suite_dir: Path) -> list[_SuiteTest]:
    harness_dir = suite_dir / "harness"
    suite_prelude = suite_dir / "prelude.js"
    base_prelude = (
        suite_prelude.read_text(encoding="utf-8") if suite_prelude.is_file() else None
    )

    tests: list[_SuiteTest] = []
    for path in sorted(suite_dir.rglob("*.js")):
        if not path.is_file():
            continue
        if harness_dir in path.parents or path == suite_prelude:
            continue
        source = path.read_text(encoding="utf-8", errors="replace")
        meta = parse_frontmatter(source)
        pieces = [base_prelude] if base_prelude else []
        for include in meta.get("includes", []) or []:
            inc = harness_dir / include
            if inc.is_file():
                pieces.append(inc.read_text(encoding="utf-8"))
        prelude = "\n".join(pieces) if pieces else None
        tests.append(
            _SuiteTest(
                path=path.relative_to(suite_dir).as_posix(),
                source=source,
                prelude=prelude,
                negative_kind=expected_negative_kind(meta),
            )
        )
    return tests


def _test_passes(spec: EngineSpec, test: _SuiteTest) -> bool:
    outcome = run_and_classify(spec, test.source, prelude=test.prelude)
    if test.negative_kind is not None:
        return (
            outcome.category
            in (OutcomeCategory.RUNTIME_ERROR, OutcomeCategory.SYNTAX_ERROR)
            and outcome.exception_kind == test.negative_kind
        )
    return outcome.is_pass


def run_conformance(
    spec: EngineSpec,
    suite_dir: str | os.PathLike,
    repeats: int = DEFAULT_REPEATS,
    jobs: int | None = None,
) -> ConformanceResult:
    """Run the suite ``repeats`` times and average the passing ratios."""
    suite = Path(suite_dir)
    tests = _load_suite(suite)
    if not tests:
        raise EmptySuite(str(suite))

    workers = jobs or os.cpu_count() or 2
    runs: list[ConformanceRun] = []
    for index in range(repeats):
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            verdicts = list(pool.map(lambda t: _test_passes(spec, t), tests))
        runs.append(
            ConformanceRun(
                engine=spec.name,
                total=len(tests),
                passed=sum(verdicts),
                run_index=index,
            )
        )

    ratios = [r.ratio for r in runs if r.ratio is not None]
    return ConformanceResult(
        engine=spec.name,
        runs=runs,
        mean_ratio=statistics.fmean(ratios) if ratios else None,
        variance=statistics.pvariance(ratios) if len(ratios) > 0 else None,
    )
