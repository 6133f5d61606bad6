"""Machine-readable run reports and the human triage summary.

The JSON schema is a stable contract (field names documented in the
README): run_id, timestamp, registry_digest, corpus_digests,
filter_reports, transplant_matrix (optional), warnings, clusters, queue,
annotations, plus additive sections (config, fuzz, conformance, info).
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .cluster import Cluster
from .corpus import FilterReport
from .errors import IoFailure
from .oracle import InfoRecord, Warning
from .transplant import AnnotationReport, FailureMatrix
from .triage import QueueItem

REPORT_FILENAME = "report.json"
SUMMARY_FILENAME = "summary.txt"


@dataclass
class RunReport:
    registry_digest: str = ""
    corpus_digests: dict[str, str] = field(default_factory=dict)
    timestamp: float = 0.0
    config: dict = field(default_factory=dict)
    filter_reports: list[FilterReport] = field(default_factory=list)
    transplant_matrix: FailureMatrix | None = None
    warnings: list[Warning] = field(default_factory=list)
    clusters: list[Cluster] = field(default_factory=list)
    queue: list[QueueItem] = field(default_factory=list)
    annotations: AnnotationReport | None = None
    conformance: list[dict] = field(default_factory=list)
    fuzz: dict = field(default_factory=dict)
    info: list[InfoRecord] = field(default_factory=list)

    @property
    def run_id(self) -> str:
        basis = json.dumps(
            {
                "registry": self.registry_digest,
                "corpus": self.corpus_digests,
                "config": self.config,
            },
            sort_keys=True,
        )
        return hashlib.sha256(basis.encode()).hexdigest()[:16]

    def to_payload(self) -> dict:
        return {
            "run_id": self.run_id,
            "timestamp": self.timestamp,
            "registry_digest": self.registry_digest,
            "corpus_digests": dict(sorted(self.corpus_digests.items())),
            "config": self.config,
            "filter_reports": [r.to_json() for r in self.filter_reports],
            "transplant_matrix": (
                self.transplant_matrix.to_json() if self.transplant_matrix else None
            ),
            "warnings": [w.to_json() for w in self.warnings],
            "clusters": [c.to_json() for c in self.clusters],
            "queue": [q.to_json() for q in self.queue],
            "annotations": self.annotations.to_json() if self.annotations else None,
            "conformance": self.conformance,
            "fuzz": self.fuzz,
            "info": [r.to_json() for r in self.info],
        }


def payload_digest(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode("utf-8")
    ).hexdigest()


def emit_report(run: RunReport, out_dir: str | os.PathLike) -> tuple[Path, Path]:
    """Write report.json and summary.txt under out_dir."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        payload = run.to_payload()
        report_path = out / REPORT_FILENAME
        report_path.write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        summary_path = out / SUMMARY_FILENAME
        summary_path.write_text(render_summary(payload), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(out), str(exc))
    return report_path, summary_path


def load_report(path: str | os.PathLike) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / REPORT_FILENAME
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(str(p), str(exc))


def _table(rows: list[list[str]], header: list[str]) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*row) for row in rows]
    return "\n".join(lines)


def render_summary(payload: dict) -> str:
    """Plain-text digest for humans; mirrors the report's sections."""
    parts: list[str] = []
    parts.append(f"run {payload['run_id']}  (timestamp {payload['timestamp']})")
    parts.append("")

    parts.append("## Corpus filters")
    reports = payload.get("filter_reports", [])
    if reports:
        rows = [
            [r["stage"], str(r["input"]), str(r["kept"]), str(len(r["discarded"]))]
            for r in reports
        ]
        parts.append(_table(rows, ["stage", "input", "kept", "discarded"]))
    else:
        parts.append("(none)")
    parts.append("")

    matrix = payload.get("transplant_matrix")
    parts.append("## Transplant failures (suite x engine)")
    if matrix and matrix.get("cells"):
        engines = sorted({e for _, e, _ in matrix["cells"]})
        suites = sorted({s for s, _, _ in matrix["cells"]})
        skipped = {(s, e) for s, e in matrix.get("diagonal_skipped", [])}
        counts = {(s, e): len(ids) for s, e, ids in matrix["cells"]}
        rows = []
        for s in suites:
            row = [s]
            for e in engines:
                row.append("-" if (s, e) in skipped else str(counts.get((s, e), 0)))
            rows.append(row)
        totals = ["total"]
        for e in engines:
            totals.append(str(sum(counts.get((s, e), 0) for s in suites)))
        rows.append(totals)
        parts.append(_table(rows, ["suite\\engine", *engines]))
    else:
        parts.append("(not run)")
    parts.append("")

    parts.append("## hi warnings per affected-engine group")
    warnings = payload.get("warnings", [])
    hi = [w for w in warnings if w["priority"] == "hi"]
    groups: dict[str, int] = {}
    for w in hi:
        groups[w["group"]] = groups.get(w["group"], 0) + 1
    if groups:
        rows = [[g, str(n)] for g, n in sorted(groups.items())]
        rows.append(["total", str(len(hi))])
        parts.append(_table(rows, ["group", "count"]))
    else:
        parts.append("(none)")
    parts.append("")

    parts.append("## lo clusters")
    clusters = payload.get("clusters", [])
    if clusters:
        rows = [
            [c["representative"], str(c["size"]), c["group"], json.dumps(c["signature"], ensure_ascii=False)[:100]]
            for c in clusters
        ]
        parts.append(_table(rows, ["representative", "size", "group", "signature"]))
    else:
        parts.append("(none)")
    parts.append("")

    parts.append("## Inspection queue")
    queue = payload.get("queue", [])
    if queue:
        rows = [
            [str(i + 1), q["priority"], q["group"], q["ref"], str(q["cluster_size"])]
            for i, q in enumerate(queue)
        ]
        parts.append(_table(rows, ["#", "priority", "group", "ref", "cluster"]))
    else:
        parts.append("(empty)")
    parts.append("")

    parts.append("## Annotation distribution")
    ann = payload.get("annotations")
    if ann:
        rows = [[cat, str(n)] for cat, n in sorted(ann["distribution"].items())]
        rows.append(["unlabeled", str(ann["unlabeled"])])
        parts.append(_table(rows, ["category", "count"]))
    else:
        parts.append("(none)")
    parts.append("")

    conformance = payload.get("conformance", [])
    if conformance:
        parts.append("## Conformance")
        rows = [
            [
                c["engine"],
                f"{c['mean_ratio']:.3f}" if c.get("mean_ratio") is not None else "-",
                f"{c['variance']:.6f}" if c.get("variance") is not None else "-",
                str(len(c.get("runs", []))),
            ]
            for c in conformance
        ]
        parts.append(_table(rows, ["engine", "mean ratio", "variance", "repeats"]))
        parts.append("")

    fuzz = payload.get("fuzz")
    if fuzz:
        parts.append("## Fuzzing")
        parts.append(
            f"seeds: {fuzz.get('seeds', 0)}  mutants: {fuzz.get('mutants', 0)}  "
            f"attempts: {fuzz.get('attempts', 0)}  "
            f"budget_exhausted: {len(fuzz.get('budget_exhausted', []))}"
        )
        parts.append("")

    return "\n".join(parts)
