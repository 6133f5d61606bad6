"""Acceptance suite: every criterion as a test with a printed verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one
``ACCEPTANCE <name>: PASS/FAIL`` line per criterion. All criteria are
hermetic (scripted mock engines) except the final smoke check, which only
runs when at least two real JS engines are installed.
"""

from __future__ import annotations

import itertools
import json
import random
import shutil
import time
from contextlib import contextmanager
from pathlib import Path

import pytest

from util import write_manifest, write_registry, write_suite

from entente.cli import main
from entente.cluster import bucket, serialize_signature, signature
from entente.corpus import (
    TestCase,
    filter_no_fail_in_all,
    filter_pass_in_parent,
    filter_type_in_all,
    ingest,
)
from entente.engines import (
    Outcome,
    OutcomeCategory,
    Runner,
    load_registry,
    run_and_classify,
)
from entente.fuzz import TokenizerChecker, generate_valid, is_valid
from entente.miner import OfflineTrackerClient, classify_paragraph, extract_embedded_tests
from entente.oracle import PRIORITY_HI, PRIORITY_LO, compare
from entente.report import load_report
from entente.triage import InspectionQueue, QueueItem, reduce as reduce_source

FIXTURES = Path(__file__).parent / "fixtures"
JOBS = 8


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {name}: FAIL")
        raise
    print(f"\nACCEPTANCE {name}: PASS")


def outcome_of(engine: str, category: OutcomeCategory) -> Outcome:
    kind = (
        "TypeError"
        if category in (OutcomeCategory.RUNTIME_ERROR, OutcomeCategory.SYNTAX_ERROR)
        else None
    )
    return Outcome(category=category, engine=engine, exception_kind=kind)


class TestOracleExhaustiveness:
    def test_all_category_tuples_for_three_and_four_engines(self):
        with criterion("oracle-exhaustiveness"):
            start = time.monotonic()
            mismatches = 0
            checked = 0
            for n in (3, 4):
                names = [f"e{i + 1}" for i in range(n)]
                for cats in itertools.product(OutcomeCategory, repeat=n):
                    outcomes = {
                        name: outcome_of(name, cat) for name, cat in zip(names, cats)
                    }
                    warning = compare(outcomes)
                    brute = any(c is OutcomeCategory.PASS for c in cats) and any(
                        c is not OutcomeCategory.PASS for c in cats
                    )
                    if (warning is not None) != brute:
                        mismatches += 1
                    checked += 1
            elapsed = time.monotonic() - start
            assert checked == 7**3 + 7**4
            assert mismatches == 0
            assert elapsed < 10.0


DATAVIEW_SOURCE = """var buffer = new ArrayBuffer(64);
var view = new DataView(buffer);
view.setInt8(0, 0x80);
assert(view.getInt8(-1770523502845470856) === -0x80);
"""

DATAVIEW_DIRECTIVES = (
    "//!mock chakra pass\n"
    "//!mock jsc error RangeError byteOffset cannot be negative\n"
    "//!mock spidermonkey error RangeError invalid or out-of-range index\n"
    "//!mock v8 error RangeError Offset is outside the bounds of the DataView\n"
)

DATAVIEW_EXPECTED_SIGNATURE = (
    '[["chakra", "-", "-"],'
    ' ["jsc", "RangeError", "byteOffset cannot be negative"],'
    ' ["spidermonkey", "RangeError", "invalid or out-of-range index"],'
    ' ["v8", "RangeError", "Offset is outside the bounds of the DataView"]]'
)


class TestDataViewWarningReproduction:
    def test_scripted_messages_reproduce_warning_and_signature(self, tmp_path):
        with criterion("dataview-warning-reproduction"):
            registry_path = write_registry(
                tmp_path / "registry.json", ["chakra", "jsc", "spidermonkey", "v8"]
            )
            registry = load_registry(registry_path, probe=False)
            source = DATAVIEW_DIRECTIVES + DATAVIEW_SOURCE
            outcomes = {
                spec.name: run_and_classify(spec, source) for spec in registry
            }
            warning = compare(outcomes, ref="jsc/dataview.js#0")
            assert warning is not None
            assert warning.priority == PRIORITY_LO
            assert warning.group == "chakra"
            serialized = serialize_signature(signature(warning))
            assert serialized.encode("utf-8") == DATAVIEW_EXPECTED_SIGNATURE.encode("utf-8")


class TestFilterNesting:
    def test_fifty_test_corpus_with_injected_failures(self, tmp_path, mock_registry):
        with criterion("filter-nesting"):
            pass_src = "var ok = 1;\n"
            alpha = {}
            for i in range(30):
                alpha[f"a{i:02}.js"] = pass_src
            for i in range(4):  # fail on parent engine e1
                alpha[f"a{i:02}.js"] = "//!mock e1 assert-fail parent\n" + pass_src
            for i in range(4, 7):  # ReferenceError on e3
                alpha[f"a{i:02}.js"] = (
                    "//!mock e3 error ReferenceError name is not defined\n" + pass_src
                )
            for i in range(7, 10):  # RangeError on e2: survives type-in-all only
                alpha[f"a{i:02}.js"] = "//!mock e2 error RangeError out\n" + pass_src

            beta = {}
            for i in range(12):
                beta[f"b{i:02}.js"] = pass_src
            for i in range(2):  # fail on parent engine e2
                beta[f"b{i:02}.js"] = "//!mock e2 error RangeError parent\n" + pass_src
            for i in range(2, 4):  # crash on e4
                beta[f"b{i:02}.js"] = "//!mock e4 crash\n" + pass_src

            gamma = {}
            for i in range(8):
                gamma[f"g{i:02}.js"] = pass_src
            for i in range(2):  # TypeError on e4
                gamma[f"g{i:02}.js"] = (
                    "//!mock e4 error TypeError x is undefined\n" + pass_src
                )
            for i in range(2, 4):  # assert-fail on e1
                gamma[f"g{i:02}.js"] = "//!mock e1 assert-fail g\n" + pass_src

            write_suite(tmp_path / "alpha", alpha)
            write_suite(tmp_path / "beta", beta)
            write_suite(tmp_path / "gamma", gamma)
            manifest = write_manifest(
                tmp_path / "manifest.json",
                [
                    {"name": "alpha", "dir": str(tmp_path / "alpha"), "parent_engine": "e1"},
                    {"name": "beta", "dir": str(tmp_path / "beta"), "parent_engine": "e2"},
                    {"name": "gamma", "dir": str(tmp_path / "gamma"), "parent_engine": None},
                ],
            )
            corpus = ingest(manifest)
            assert len(corpus) == 50

            runner = Runner(registry=mock_registry, jobs=JOBS)
            c1, r1 = filter_pass_in_parent(corpus, runner)
            c2, r2 = filter_type_in_all(c1, runner)
            c3, r3 = filter_no_fail_in_all(c2, runner)

            # Injected: 6 parent failures, then 5 Reference/TypeErrors,
            # then 7 other failures (3 RangeError, 2 crash, 2 assert-fail).
            assert (len(corpus), len(c1), len(c2), len(c3)) == (50, 44, 39, 32)
            assert set(c3.ids()) <= set(c2.ids()) <= set(c1.ids()) <= set(corpus.ids())
            for report, expected_drop in ((r1, 6), (r2, 5), (r3, 7)):
                assert len(report.discarded) == expected_drop
                assert report.kept + len(report.discarded) == report.input_size


def fuzz_seed_sources() -> list[str]:
    sources = []
    for i in range(20):
        sources.append(
            f"var base{i} = {i + 3};\n"
            f'var text{i} = "payload-{i}";\n'
            f"function calc{i}(x) {{ return x * base{i} + {i}; }}\n"
            f"var out{i} = calc{i}({i + 40});\n"
            f'if (out{i} > 0) {{ text{i} = text{i} + "!"; }}\n'
        )
    return sources


class TestFuzzerContract:
    def test_twenty_seeds_twenty_valid_replayable_mutants(self):
        with criterion("fuzzer-contract"):
            start = time.monotonic()
            checker = TokenizerChecker()
            for i, source in enumerate(fuzz_seed_sources()):
                seed = TestCase(id=f"seeds/s{i:02}.js", origin_suite="seeds", source=source)
                batch = generate_valid(seed, n=20, rng_seed=1000 + i)
                rerun = generate_valid(seed, n=20, rng_seed=1000 + i)
                assert len(batch.mutants) == 20
                assert not batch.budget_exhausted
                assert all(is_valid(m.source, checker) for m in batch.mutants)
                assert [m.source for m in batch.mutants] == [
                    m.source for m in rerun.mutants
                ]
            elapsed = time.monotonic() - start
            assert elapsed < 30.0


class TestReducerMinimality:
    def test_randomized_predicates_reach_brute_force_minimum(self):
        with criterion("reducer-1-minimality"):
            rng = random.Random(2024)
            for trial in range(25):
                n = rng.randint(2, 12)
                lines = [f"stmt{j} = {j};" for j in range(n)]
                required = set(rng.sample(range(n), rng.randint(1, min(4, n))))
                required_lines = [lines[j] for j in sorted(required)]

                def predicate(source: str) -> bool:
                    present = source.splitlines()
                    return all(r in present for r in required_lines)

                # Brute-force minimal witness size over all subsets.
                best_size = None
                for mask in range(1 << n):
                    subset = [lines[j] for j in range(n) if mask >> j & 1]
                    if predicate("\n".join(subset)):
                        size = len(subset)
                        if best_size is None or size < best_size:
                            best_size = size
                assert best_size == len(required)

                reduced = reduce_source("\n".join(lines), predicate)
                reduced_lines = reduced.splitlines()
                assert len(reduced_lines) == best_size, f"trial {trial}"
                for j in range(len(reduced_lines)):
                    probe = reduced_lines[:j] + reduced_lines[j + 1:]
                    assert not predicate("\n".join(probe))


class TestClusteringProperties:
    def _lo(self, ref: str, kind: str, message: str):
        outcomes = {
            "e1": Outcome(
                OutcomeCategory.RUNTIME_ERROR, "e1", exception_kind=kind, message=message
            ),
            "e2": Outcome(OutcomeCategory.PASS, "e2"),
        }
        warning = compare(outcomes, ref=ref)
        assert warning is not None and warning.priority == PRIORITY_LO
        return warning

    def test_normalization_merges_and_kinds_separate(self):
        with criterion("clustering"):
            variants = [
                # Same message modulo a numeric literal: one bucket of 3.
                self._lo("m0", "RangeError", "invalid index 1770523502845470856"),
                self._lo("m1", "RangeError", "invalid index 657604378"),
                self._lo("m2", "RangeError", "invalid index 0x7fffffff"),
                # Same modulo a quoted code span: one bucket of 2.
                self._lo("m3", "RangeError", 'invalid index "big"'),
                self._lo("m4", "RangeError", 'invalid index "other"'),
                # Same modulo file:line:col: one bucket of 2.
                self._lo("m5", "RangeError", "invalid index 12 at foo.js:3:10"),
                self._lo("m6", "RangeError", "invalid index 99 at bar.js:11:2"),
            ]
            clusters = bucket(variants)
            sizes = sorted(c.size for c in clusters)
            assert sizes == [2, 2, 3]
            by_rep = {c.representative: sorted(c.members) for c in clusters}
            assert by_rep["m0"] == ["m0", "m1", "m2"]
            assert by_rep["m3"] == ["m3", "m4"]
            assert by_rep["m5"] == ["m5", "m6"]

            different_kinds = [
                self._lo("k0", "RangeError", "boom 123"),
                self._lo("k1", "TypeError", "boom 123"),
            ]
            assert len(bucket(different_kinds)) == 2

            rng = random.Random(77)
            kinds = ["RangeError", "TypeError", "SyntaxError", "URIError"]
            messages = [
                "bad index 12",
                "bad index 3456",
                "cannot convert 'x' to number",
                "unexpected token at f.js:1:2",
                "out of bounds",
            ]
            warnings = [
                self._lo(f"w{i:04}", rng.choice(kinds), rng.choice(messages))
                for i in range(1000)
            ]
            clusters = bucket(warnings)
            members = [ref for c in clusters for ref in c.members]
            assert len(members) == 1000
            assert sorted(members) == sorted(w.ref for w in warnings)


class TestRoundRobinScheduler:
    def test_random_trials_match_independent_simulation(self):
        with criterion("round-robin-scheduler"):
            rng = random.Random(4321)
            for _ in range(100):
                k = rng.randint(1, 5)
                groups = rng.sample(["+1", "e1", "e2", "e3", "e4"], rng.randint(1, 5))
                hi_items = []
                lo_items = []
                for g in groups:
                    for i in range(rng.randint(0, 6)):
                        hi_items.append(
                            QueueItem(ref=f"hi/{g}/{i:02}", priority=PRIORITY_HI, group=g)
                        )
                    for i in range(rng.randint(0, 6)):
                        lo_items.append(
                            QueueItem(
                                ref=f"lo/{g}/{i:02}",
                                priority=PRIORITY_LO,
                                group=g,
                                cluster_size=rng.randint(1, 9),
                            )
                        )
                order = InspectionQueue.from_items(hi_items, k).drain()
                order += InspectionQueue.from_items(lo_items, k).drain()

                def simulate(items):
                    pending = {}
                    for item in sorted(items, key=lambda x: x.ref):
                        pending.setdefault(item.group, []).append(item.ref)
                    result = []
                    names = sorted(pending)
                    while any(pending.values()):
                        for g in names:
                            take, pending[g] = pending[g][:k], pending[g][k:]
                            result.extend(take)
                    return result

                expected = simulate(hi_items) + simulate(lo_items)
                got = [i.ref for i in order]
                assert got == expected
                assert sorted(got) == sorted(
                    i.ref for i in hi_items + lo_items
                )


class TestMinerAcceptance:
    def test_extraction_reproduces_hand_labels_and_accuracy(self):
        with criterion("miner"):
            dumps = FIXTURES / "issues" / "dumps"
            expected_dir = FIXTURES / "issues" / "expected"
            docs = OfflineTrackerClient(dumps).fetch_issues()
            assert len(docs) == 20
            for doc in docs:
                want = json.loads(
                    (expected_dir / doc.tracker / f"{doc.issue_id}.json").read_text()
                )
                got = extract_embedded_tests(doc)
                assert got.blocks == want["blocks"], (doc.tracker, doc.issue_id)
                assert got.dropped_invalid == want["dropped"]

            entries = [
                json.loads(line)
                for line in (FIXTURES / "paragraphs.jsonl").read_text().splitlines()
            ]
            correct = sum(
                1
                for e in entries
                if classify_paragraph(e["text"]).label.value == e["label"]
            )
            assert correct / len(entries) >= 0.90


class TestConformanceArithmetic:
    def test_three_quarters_over_three_repeats(self, tmp_path, mock_registry):
        with criterion("conformance-arithmetic"):
            from entente.conformance import run_conformance

            write_suite(
                tmp_path / "suite",
                {
                    "t1.js": "var ok = 1;\n",
                    "t2.js": "var ok = 2;\n",
                    "t3.js": "var ok = 3;\n",
                    "t4.js": "//!mock e1 assert-fail missing feature\nvar ok = 4;\n",
                },
            )
            result = run_conformance(
                mock_registry[0], tmp_path / "suite", repeats=3, jobs=JOBS
            )
            assert result.mean_ratio == pytest.approx(0.750, abs=0)
            assert result.variance == pytest.approx(0.0, abs=0)
            assert [r.ratio for r in result.runs] == [0.75, 0.75, 0.75]


class TestPreludeNeutrality:
    PASSING_FIXTURES = [
        "var a = 1;\n",
        "function f() { return 2; }\nf();\n",
        "//!mock e2 pass output line\nvar b = 3;\n",
        "var s = 'str';\nvar t = s + s;\n",
    ]

    def test_secondary_prelude_contract(self, mock_registry, prelude_source):
        with criterion("prelude-neutrality [secondary]"):
            for source in self.PASSING_FIXTURES:
                for spec in mock_registry:
                    bare = run_and_classify(spec, source)
                    shimmed = run_and_classify(spec, source, prelude=prelude_source)
                    assert bare.category == shimmed.category, (source, spec.name)

            assert_false = "//!mock * assert-fail assertion failed\nassert(false);\n"
            for spec in mock_registry:
                from entente.engines import classify, execute

                raw = execute(spec, assert_false, prelude=prelude_source)
                assert "ENTENTE_ASSERT_FAIL:" in raw.stdout + raw.stderr
                assert classify(spec, raw).category is OutcomeCategory.ASSERT_FAIL


REAL_ENGINE_CANDIDATES = {
    "node": {"binary": "node", "parse_only": ["--check"]},
    "d8": {"binary": "d8", "parse_only": None},
    "js": {"binary": "js", "parse_only": None},
    "jsc": {"binary": "jsc", "parse_only": None},
    "ch": {"binary": "ch", "parse_only": None},
    "hermes": {"binary": "hermes", "parse_only": None},
    "qjs": {"binary": "qjs", "parse_only": None},
}

GENERIC_PATTERNS = [
    {"category": "syntax_error", "kind": "SyntaxError", "pattern": "^SyntaxError: (?P<message>.*)$"},
    {"category": "runtime_error", "kind": "", "pattern": "^(?P<kind>[A-Z][A-Za-z0-9]*Error): (?P<message>.*)$"},
]


def detect_real_engines() -> list[dict]:
    found = []
    for name, info in REAL_ENGINE_CANDIDATES.items():
        if shutil.which(info["binary"]):
            entry = {
                "name": name,
                "binary": info["binary"],
                "flags": [],
                "timeout": 20.0,
                "error_patterns": GENERIC_PATTERNS,
            }
            if info["parse_only"]:
                entry["parse_only_flags"] = info["parse_only"]
            found.append(entry)
    return found


class TestRealEngineSmoke:
    def test_fuzzdiff_on_real_engines(self, tmp_path, capsys):
        engines = detect_real_engines()
        if len(engines) < 2:
            pytest.skip(
                f"needs >= 2 real JS engines, found {[e['name'] for e in engines]}"
            )
        with criterion("real-engine-smoke [optional]"):
            registry_path = tmp_path / "registry.json"
            registry_path.write_text(json.dumps({"engines": engines}, indent=2))
            seeds = {
                f"s{i:02}.js": src
                for i, src in enumerate(fuzz_seed_sources()[:10])
            }
            write_suite(tmp_path / "seeds", seeds)
            manifest = write_manifest(
                tmp_path / "manifest.json",
                [{"name": "seeds", "dir": str(tmp_path / "seeds"), "parent_engine": None}],
            )
            code = main(
                [
                    "fuzzdiff",
                    "--registry", str(registry_path),
                    "--manifest", str(manifest),
                    "--out", str(tmp_path / "out"),
                    "--mutants", "5",
                    "--seed", "7",
                    "--jobs", str(JOBS),
                    "--epoch", "0",
                ]
            )
            assert code == 0
            payload = load_report(tmp_path / "out")
            assert payload["fuzz"]["seeds"] <= 10
            pass_ratio = {}
            specs = load_registry(registry_path, probe=False)
            prelude = (
                Path(__file__).resolve().parents[1]
                / "src" / "entente" / "data" / "prelude.js"
            ).read_text()
            for spec in specs:
                outcome = run_and_classify(spec, DATAVIEW_SOURCE, prelude=prelude)
                assert outcome.category is not OutcomeCategory.TIMEOUT
                pass_ratio[spec.name] = outcome.category.value
            print(f"\nreal-engine outcomes on the DataView probe: {pass_ratio}")
