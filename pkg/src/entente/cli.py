"""Command-line entry point: one subcommand per pipeline stage.

Finding warnings is the tool doing its job, so runs that produce warnings
still exit 0 (use --fail-on-warning for CI gates). Nonzero exits mean an
operational problem: bad config, missing binary, unreadable suite.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

from . import __version__, corpus as corpus_mod, fuzz, oracle, report as report_mod
from .cluster import bucket
from .conformance import DEFAULT_REPEATS, run_conformance
from .engines import EngineSpec, Runner, load_registry, registry_digest, run_and_classify
from .errors import EntenteError
from .miner import (
    HeuristicScorer,
    HttpTrackerClient,
    OfflineTrackerClient,
    fetch_issues,
    mine_to_corpus,
)
from .transplant import annotate, load_labels, run_matrix
from .triage import (
    DEFAULT_K_PER_ITERATION,
    ExternalReducer,
    make_warning_predicate,
    reduce as reduce_source,
    schedule,
)


def _bundled_prelude_path() -> Path:
    return Path(__file__).resolve().parent / "data" / "prelude.js"


@dataclasses.dataclass
class RunConfig:
    registry: Path | None = None
    manifest: Path | None = None
    out: Path = Path("out")
    rng_seed: int = 0
    mutants_per_seed: int = fuzz.DEFAULT_MUTANTS_PER_SEED
    k_per_iteration: int = DEFAULT_K_PER_ITERATION
    timeout: float | None = None
    memory_limit: int | None = None
    jobs: int | None = None
    prelude: Path | None = None
    epoch: float | None = None
    report_all_fail_mismatch: bool = False
    fail_on_warning: bool = False
    with_dedup: bool = False

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        cfg = cls()
        for field_ in dataclasses.fields(cls):
            if hasattr(args, field_.name) and getattr(args, field_.name) is not None:
                setattr(cfg, field_.name, getattr(args, field_.name))
        for name in ("registry", "manifest", "out", "prelude"):
            value = getattr(cfg, name)
            if value is not None:
                setattr(cfg, name, Path(value).resolve())
        if cfg.epoch is None:
            env = os.environ.get("SOURCE_DATE_EPOCH")
            cfg.epoch = float(env) if env else time.time()
        return cfg

    def report_section(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "mutants_per_seed": self.mutants_per_seed,
            "k_per_iteration": self.k_per_iteration,
            "timeout_override": self.timeout,
            "memory_override": self.memory_limit,
            "report_all_fail_mismatch": self.report_all_fail_mismatch,
        }

    def load_registry(self, probe: bool = True) -> list[EngineSpec]:
        if self.registry is None:
            raise EntenteError("--registry is required for this command")
        specs = load_registry(self.registry, probe=probe)
        if self.timeout is not None or self.memory_limit is not None:
            overrides = {}
            if self.timeout is not None:
                overrides["timeout"] = self.timeout
            if self.memory_limit is not None:
                overrides["memory_limit"] = self.memory_limit
            specs = [dataclasses.replace(s, **overrides) for s in specs]
        return specs

    def prelude_source(self) -> str:
        path = self.prelude or _bundled_prelude_path()
        return path.read_text(encoding="utf-8")

    def make_runner(self, specs: list[EngineSpec]) -> Runner:
        return Runner(registry=specs, prelude=self.prelude_source(), jobs=self.jobs)


def _add_common(parser: argparse.ArgumentParser, *names: str) -> None:
    opts = {
        "registry": dict(type=Path, help="engine registry JSON"),
        "manifest": dict(type=Path, help="suite manifest JSON"),
        "out": dict(type=Path, help="output directory (default: out)"),
        "jobs": dict(type=int, help="worker pool size (default: cpu count)"),
        "prelude": dict(type=Path, help="harness prelude file (default: bundled)"),
        "timeout": dict(type=float, help="override per-engine timeout, seconds"),
        "memory_limit": dict(type=int, help="override per-engine memory limit, bytes"),
        "epoch": dict(
            type=float,
            help="fixed report timestamp (also via SOURCE_DATE_EPOCH) for reproducible output",
        ),
    }
    for name in names:
        parser.add_argument(f"--{name.replace('_', '-')}", **opts[name])


def _new_report(cfg: RunConfig, corp: corpus_mod.Corpus | None = None) -> report_mod.RunReport:
    run = report_mod.RunReport(config=cfg.report_section(), timestamp=cfg.epoch or 0.0)
    if cfg.registry is not None:
        run.registry_digest = registry_digest(cfg.registry)
    if corp is not None:
        run.corpus_digests = corp.digests()
    return run


def cmd_engines_doctor(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    specs = cfg.load_registry(probe=True)
    for spec in specs:
        print(f"ok  {spec.name:<16} {spec.binary_path} (timeout {spec.timeout:g}s)")
    print(f"{len(specs)} engine(s) healthy")
    return 0


def cmd_corpus_ingest(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    corp = corpus_mod.ingest(cfg.manifest)
    per_suite: dict[str, int] = {}
    for t in corp:
        per_suite[t.origin_suite] = per_suite.get(t.origin_suite, 0) + 1
    for suite, count in sorted(per_suite.items()):
        print(f"{suite:<24} {count}")
    print(f"total: {len(corp)} test(s)")
    if args.out:
        cfg.out.mkdir(parents=True, exist_ok=True)
        index = [{"id": t.id, "suite": t.origin_suite} for t in corp]
        (cfg.out / "corpus-index.json").write_text(
            json.dumps(index, indent=2) + "\n", encoding="utf-8"
        )
    return 0


def cmd_corpus_filter(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    specs = cfg.load_registry()
    runner = cfg.make_runner(specs)
    corp = corpus_mod.ingest(cfg.manifest)
    final, reports = corpus_mod.run_filter_pipeline(corp, runner, with_dedup=cfg.with_dedup)

    run = _new_report(cfg, corp)
    run.filter_reports = reports
    report_mod.emit_report(run, cfg.out)
    for rep in reports:
        print(
            f"{rep.stage.value:<16} input={rep.input_size:<5} kept={rep.kept:<5} "
            f"discarded={len(rep.discarded)}"
        )
    print(f"final corpus: {len(final)} test(s); report under {cfg.out}")
    return 0


def cmd_transplant(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    specs = cfg.load_registry()
    runner = cfg.make_runner(specs)
    corp = corpus_mod.ingest(cfg.manifest)

    reports = []
    corp2, rep = corpus_mod.filter_pass_in_parent(corp, runner)
    reports.append(rep)
    corp3, rep = corpus_mod.filter_type_in_all(corp2, runner)
    reports.append(rep)

    matrix = run_matrix(corp3, runner)

    run = _new_report(cfg, corp)
    run.filter_reports = reports
    run.transplant_matrix = matrix
    if args.annotations:
        labels = load_labels(args.annotations)
        run.annotations = annotate(matrix, labels)
    report_path, summary_path = report_mod.emit_report(run, cfg.out)

    payload = run.to_payload()
    print(report_mod.render_summary(payload))
    print(f"report: {report_path}")
    if cfg.fail_on_warning and matrix.total_failures():
        return 1
    return 0


def cmd_fuzzdiff(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    specs = cfg.load_registry()
    runner = cfg.make_runner(specs)
    corp = corpus_mod.ingest(cfg.manifest)
    seeds, reports = corpus_mod.run_filter_pipeline(corp, runner, with_dedup=cfg.with_dedup)

    prelude = cfg.prelude_source()
    mutants_dir = cfg.out / "mutants"
    warnings: list[oracle.Warning] = []
    info_records = []
    fuzz_stats = {
        "seeds": len(seeds),
        "mutants": 0,
        "attempts": 0,
        "budget_exhausted": [],
    }
    for seed in seeds:
        batch = fuzz.generate_valid(
            seed,
            n=cfg.mutants_per_seed,
            rng_seed=fuzz.derive_seed(cfg.rng_seed, seed.id),
        )
        fuzz.write_mutants(batch, mutants_dir)
        fuzz_stats["mutants"] += len(batch.mutants)
        fuzz_stats["attempts"] += batch.attempts
        if batch.budget_exhausted:
            fuzz_stats["budget_exhausted"].append(seed.id)
        for mutant in batch.mutants:
            outcomes = {
                spec.name: run_and_classify(
                    spec,
                    mutant.source,
                    prelude=prelude if seed.needs_prelude else None,
                )
                for spec in specs
            }
            ref = f"{mutant.seed_id}#{mutant.generation_index}"
            warning = oracle.compare(outcomes, ref=ref, created_at=cfg.epoch or 0.0)
            if warning is not None:
                warnings.append(warning)
            elif cfg.report_all_fail_mismatch:
                record = oracle.all_fail_mismatch(outcomes, ref=ref)
                if record is not None:
                    info_records.append(record)

    warnings.sort(key=lambda w: w.ref)
    hi = [w for w in warnings if w.priority == oracle.PRIORITY_HI]
    lo = [w for w in warnings if w.priority == oracle.PRIORITY_LO]
    clusters = bucket(lo)
    queue = schedule(hi, clusters, k=cfg.k_per_iteration)

    run = _new_report(cfg, corp)
    run.filter_reports = reports
    run.warnings = warnings
    run.clusters = clusters
    run.queue = queue
    run.fuzz = fuzz_stats
    run.info = info_records
    report_path, _ = report_mod.emit_report(run, cfg.out)

    print(
        f"{len(seeds)} seed(s), {fuzz_stats['mutants']} mutant(s), "
        f"{len(warnings)} warning(s) ({len(hi)} hi, {len(lo)} lo in "
        f"{len(clusters)} cluster(s))"
    )
    print(f"report: {report_path}")
    if cfg.fail_on_warning and warnings:
        return 1
    return 0


def cmd_cluster(args: argparse.Namespace) -> int:
    payload = report_mod.load_report(args.report)
    from .engines import Outcome, OutcomeCategory

    los = []
    for w in payload.get("warnings", []):
        if w["priority"] != oracle.PRIORITY_LO:
            continue
        outcomes = {
            name: Outcome(
                category=OutcomeCategory(o["category"]),
                engine=o["engine"],
                exception_kind=o["exception_kind"],
                message=o["message"],
            )
            for name, o in w["outcomes"].items()
        }
        los.append(
            oracle.Warning(
                ref=w["ref"],
                outcomes=outcomes,
                priority=w["priority"],
                group=w["group"],
                created_at=w.get("created_at", 0.0),
            )
        )
    clusters = bucket(los)
    for c in clusters:
        print(f"{c.size:>4}  {c.representative}  group={c.group}")
    print(f"{len(los)} lo warning(s) in {len(clusters)} cluster(s)")
    return 0


def cmd_triage_schedule(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    payload = report_mod.load_report(args.report)
    from .cluster import Cluster
    from .engines import Outcome, OutcomeCategory

    hi = []
    for w in payload.get("warnings", []):
        if w["priority"] != oracle.PRIORITY_HI:
            continue
        outcomes = {
            name: Outcome(
                category=OutcomeCategory(o["category"]),
                engine=o["engine"],
                exception_kind=o["exception_kind"],
                message=o["message"],
            )
            for name, o in w["outcomes"].items()
        }
        hi.append(
            oracle.Warning(
                ref=w["ref"],
                outcomes=outcomes,
                priority=w["priority"],
                group=w["group"],
            )
        )
    clusters = [
        Cluster(
            signature=tuple(tuple(t) for t in c["signature"]),
            representative=c["representative"],
            members=list(c["members"]),
            group=c["group"],
        )
        for c in payload.get("clusters", [])
    ]
    queue = schedule(hi, clusters, k=cfg.k_per_iteration)
    for i, item in enumerate(queue, 1):
        print(f"{i:>4}  {item.priority}  {item.group:<12} {item.ref}")
    return 0


def cmd_reduce(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    specs = cfg.load_registry()
    source = Path(args.test).read_text(encoding="utf-8")
    prelude = cfg.prelude_source() if args.with_prelude else None

    outcomes = {spec.name: run_and_classify(spec, source, prelude=prelude) for spec in specs}
    baseline = oracle.compare(outcomes, ref=str(args.test))
    if baseline is None:
        print("input produces no warning; nothing to reduce", file=sys.stderr)
        return 2
    predicate = make_warning_predicate(specs, baseline, prelude=prelude)
    if args.external_reducer:
        reduced = ExternalReducer(args.external_reducer.split()).reduce(source, predicate)
    else:
        reduced = reduce_source(source, predicate)

    if args.output:
        Path(args.output).write_text(reduced + "\n", encoding="utf-8")
        print(f"reduced {len(source.splitlines())} -> {len(reduced.splitlines())} line(s): {args.output}")
    else:
        print(reduced)
    return 0


def cmd_mine(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    if args.endpoint:
        token = os.environ.get(args.token_env) if args.token_env else None
        client = HttpTrackerClient(
            tracker=args.tracker or "tracker",
            endpoint=args.endpoint,
            family=args.family,
            token=token,
            delay=args.delay,
        )
    elif args.dumps:
        client = OfflineTrackerClient(args.dumps)
    else:
        raise EntenteError("mine needs either --dumps (offline) or --endpoint (online)")
    issues = fetch_issues(client, args.query or "")
    stats = mine_to_corpus(issues, cfg.out / "mined", classifier=HeuristicScorer())
    print(
        f"issues: {stats['issues']}  embedded: {stats['embedded']}  "
        f"attachments: {stats['attachments']}  dropped(invalid): {stats['dropped_invalid']}"
    )
    return 0


def cmd_conformance(args: argparse.Namespace) -> int:
    cfg = RunConfig.from_args(args)
    specs = cfg.load_registry()
    results = [
        run_conformance(spec, args.suite, repeats=args.repeats, jobs=cfg.jobs)
        for spec in specs
    ]
    for result in results:
        ratio = f"{result.mean_ratio:.3f}" if result.mean_ratio is not None else "-"
        print(f"{result.engine:<16} mean ratio {ratio} over {len(result.runs)} run(s)")
    if args.out:
        run = _new_report(cfg)
        run.conformance = [r.to_json() for r in results]
        report_mod.emit_report(run, cfg.out)
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    payload = report_mod.load_report(args.report)
    print(report_mod.render_summary(payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entente",
        description="Differential testing and test transplantation for JavaScript engines.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    engines = sub.add_parser("engines", help="engine registry utilities")
    engines_sub = engines.add_subparsers(dest="subcommand", required=True)
    doctor = engines_sub.add_parser("doctor", help="validate and probe every engine")
    _add_common(doctor, "registry", "timeout", "memory_limit")
    doctor.set_defaults(func=cmd_engines_doctor)

    corpus_p = sub.add_parser("corpus", help="corpus ingestion and filtering")
    corpus_sub = corpus_p.add_subparsers(dest="subcommand", required=True)
    ingest_p = corpus_sub.add_parser("ingest", help="list tests found by the manifest")
    _add_common(ingest_p, "manifest", "out")
    ingest_p.set_defaults(func=cmd_corpus_ingest)
    filter_p = corpus_sub.add_parser("filter", help="run the cleansing filter pipeline")
    _add_common(filter_p, "registry", "manifest", "out", "jobs", "prelude", "timeout", "memory_limit", "epoch")
    filter_p.add_argument("--dedup", dest="with_dedup", action="store_true", help="also collapse exact duplicates")
    filter_p.set_defaults(func=cmd_corpus_filter)

    transplant_p = sub.add_parser("transplant", help="run suites on non-parent engines")
    _add_common(transplant_p, "registry", "manifest", "out", "jobs", "prelude", "timeout", "memory_limit", "epoch")
    transplant_p.add_argument("--annotations", type=Path, help="triage annotations file (JSON lines)")
    transplant_p.add_argument("--fail-on-warning", dest="fail_on_warning", action="store_true")
    transplant_p.set_defaults(func=cmd_transplant)

    fuzzdiff_p = sub.add_parser("fuzzdiff", help="fuzz seeds and compare engine outputs")
    _add_common(fuzzdiff_p, "registry", "manifest", "out", "jobs", "prelude", "timeout", "memory_limit", "epoch")
    fuzzdiff_p.add_argument("--mutants", dest="mutants_per_seed", type=int, help="valid mutants per seed (default 20)")
    fuzzdiff_p.add_argument("--seed", dest="rng_seed", type=int, help="base rng seed (default 0)")
    fuzzdiff_p.add_argument("--k", dest="k_per_iteration", type=int, help="items per group per round (default 10)")
    fuzzdiff_p.add_argument("--dedup", dest="with_dedup", action="store_true")
    fuzzdiff_p.add_argument(
        "--report-all-fail-mismatch",
        dest="report_all_fail_mismatch",
        action="store_true",
        help="also record all-fail cases with differing kinds as INFO",
    )
    fuzzdiff_p.add_argument("--fail-on-warning", dest="fail_on_warning", action="store_true")
    fuzzdiff_p.set_defaults(func=cmd_fuzzdiff)

    cluster_p = sub.add_parser("cluster", help="list lo-warning clusters from a report")
    cluster_p.add_argument("--report", type=Path, required=True)
    cluster_p.set_defaults(func=cmd_cluster)

    triage_p = sub.add_parser("triage", help="inspection scheduling")
    triage_sub = triage_p.add_subparsers(dest="subcommand", required=True)
    schedule_p = triage_sub.add_parser("schedule", help="print the round-robin inspection order")
    schedule_p.add_argument("--report", type=Path, required=True)
    schedule_p.add_argument("--k", dest="k_per_iteration", type=int)
    schedule_p.set_defaults(func=cmd_triage_schedule)

    reduce_p = sub.add_parser("reduce", help="minimize a warning-producing test")
    _add_common(reduce_p, "registry", "jobs", "prelude", "timeout", "memory_limit")
    reduce_p.add_argument("--test", type=Path, required=True, help="JS file to minimize")
    reduce_p.add_argument("--output", type=Path, help="write reduced source here")
    reduce_p.add_argument("--with-prelude", action="store_true", help="prepend the harness prelude")
    reduce_p.add_argument("--external-reducer", help="external reducer command (cmd <in> <out>)")
    reduce_p.set_defaults(func=cmd_reduce)

    mine_p = sub.add_parser("mine", help="extract tests from issue trackers")
    _add_common(mine_p, "out")
    mine_p.add_argument("--dumps", type=Path, help="offline dumps directory")
    mine_p.add_argument("--query", help="substring filter over bodies and ids")
    mine_p.add_argument("--endpoint", help="tracker API endpoint (online mode)")
    mine_p.add_argument(
        "--family",
        choices=["issues-api", "attachment-tracker"],
        default="issues-api",
        help="tracker API shape",
    )
    mine_p.add_argument("--tracker", help="tracker name used in output paths")
    mine_p.add_argument(
        "--token-env",
        help="environment variable holding the auth token (never passed on the command line)",
    )
    mine_p.add_argument("--delay", type=float, default=0.0, help="seconds between requests")
    mine_p.set_defaults(func=cmd_mine)

    conformance_p = sub.add_parser("conformance", help="run a conformance suite per engine")
    _add_common(conformance_p, "registry", "out", "jobs", "timeout", "memory_limit", "epoch")
    conformance_p.add_argument("--suite", type=Path, required=True)
    conformance_p.add_argument("--repeats", type=int, default=DEFAULT_REPEATS)
    conformance_p.set_defaults(func=cmd_conformance)

    report_p = sub.add_parser("report", help="print the human summary of a report")
    report_p.add_argument("--report", type=Path, required=True)
    report_p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EntenteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
