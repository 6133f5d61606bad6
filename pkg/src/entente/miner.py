"""Harvest candidate test cases from issue trackers.

Developers attach test files to issues or paste them into the description.
Attachments are taken as-is; embedded code is recovered by splitting the
body into paragraphs, labeling each paragraph code / not-code, merging
consecutive code paragraphs and keeping the merged block only when it is
well-formed JS.

The bundled classifier is a transparent feature scorer (brace, semicolon,
keyword, call and stopword densities through a logistic squash). It is not
a reimplementation of any trained model; an external scorer can be plugged
in through a one-line subprocess contract when higher fidelity is needed.
"""

from __future__ import annotations

import enum
import json
import math
import re
import subprocess
import time
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    AuthFailure,
    ExternalScorerFailure,
    NetworkFailure,
    RateLimited,
)
from .fuzz import ValidityChecker, is_valid

CODE_THRESHOLD = 0.7


class ParagraphClass(enum.Enum):
    CODE = "CODE"
    NOT_CODE = "NOT_CODE"


@dataclass(frozen=True)
class ParagraphLabel:
    text: str
    probability_code: float
    label: ParagraphClass


@dataclass(frozen=True)
class IssueDocument:
    tracker: str
    issue_id: str
    body: str
    attachments: list[tuple[str, bytes]] = field(default_factory=list)


_JS_KEYWORD_RE = re.compile(
    r"\b(var|let|const|function|return|if|else|for|while|new|typeof|"
    r"instanceof|throw|try|catch|finally|class|switch|case|break|continue|"
    r"this|null|undefined|true|false)\b"
)
_CALLISH_RE = re.compile(r"[A-Za-z_$][\w$]*\s*\(|[A-Za-z_$][\w$]*\.[A-Za-z_$]")
_WORD_RE = re.compile(r"[A-Za-z']+")
_PUNCT_CHARS = set("{}();=[]")
_CODE_LINE_END = (";", "{", "}", ")", "=>", ",")

_STOPWORDS = frozenset(
    """
    the a an is are was were be been being it its to of and or but so when
    on at by my our we you he she they them have has had do does did
    should would could there here which what who because about after
    before also only just any some not me please thanks seems think
    happens happened getting got version browser machine page error issue
    bug report expected actual behavior
    """.split()
)


def score_paragraph(text: str) -> float:
    """Probability that a paragraph is code rather than natural language."""
    stripped = text.strip()
    if not stripped:
        return 0.0
    lines = [ln for ln in stripped.splitlines() if ln.strip()]
    words = _WORD_RE.findall(stripped)
    n_words = max(len(words), 1)
    n_chars = max(len(stripped), 1)

    punct_density = sum(1 for c in stripped if c in _PUNCT_CHARS) / n_chars
    code_line_frac = sum(
        1
        for ln in lines
        if ln.rstrip().endswith(_CODE_LINE_END)
        or ln.lstrip().startswith(("//", "/*", "*"))
    ) / len(lines)
    keyword_density = len(_JS_KEYWORD_RE.findall(stripped)) / n_words
    callish_density = len(_CALLISH_RE.findall(stripped)) / n_words
    # "I" is a strong prose signal only when capitalized; lowercase i is
    # the most common loop variable in existence.
    stopword_frac = sum(
        1 for w in words if w.lower() in _STOPWORDS or w == "I"
    ) / n_words
    sentence_frac = sum(
        1 for ln in lines if ln.rstrip().endswith((".", "!", "?"))
    ) / len(lines)

    z = (
        -2.4
        + 16.0 * punct_density
        + 2.4 * code_line_frac
        + 3.0 * keyword_density
        + 1.6 * callish_density
        - 7.0 * stopword_frac
        - 1.6 * sentence_frac
    )
    return 1.0 / (1.0 + math.exp(-z))


class HeuristicScorer:
    def __call__(self, text: str) -> float:
        return score_paragraph(text)


class ExternalScorer:
    """Subprocess scorer contract: paragraph on stdin, probability on
    stdout."""

    def __init__(self, command: list[str], timeout: float = 30.0):
        self.command = list(command)
        self.timeout = timeout

    def __call__(self, text: str) -> float:
        try:
            proc = subprocess.run(
                self.command,
                input=text.encode("utf-8"),
                capture_output=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ExternalScorerFailure(str(exc))
        if proc.returncode != 0:
            raise ExternalScorerFailure(
                f"scorer exited {proc.returncode}: {proc.stderr.decode(errors='replace')[:200]}"
            )
        try:
            probability = float(proc.stdout.strip())
        except ValueError:
            raise ExternalScorerFailure(
                f"scorer printed non-numeric output: {proc.stdout[:80]!r}"
            )
        if not 0.0 <= probability <= 1.0:
            raise ExternalScorerFailure(f"probability out of range: {probability}")
        return probability


def classify_paragraph(text: str, classifier=None) -> ParagraphLabel:
    """Label one paragraph. The empty paragraph is NOT_CODE by definition."""
    if not text.strip():
        return ParagraphLabel(text=text, probability_code=0.0, label=ParagraphClass.NOT_CODE)
    scorer = classifier or HeuristicScorer()
    probability = scorer(text)
    label = (
        ParagraphClass.CODE if probability >= CODE_THRESHOLD else ParagraphClass.NOT_CODE
    )
    return ParagraphLabel(text=text, probability_code=probability, label=label)


def split_paragraphs(body: str) -> list[str]:
    """Blank-line splitting; fenced code blocks stay whole (markers
    dropped) even when they contain blank lines."""
    paragraphs: list[str] = []
    current: list[str] = []
    fence: list[str] | None = None

    def flush() -> None:
        if current:
            paragraphs.append("\n".join(current))
            current.clear()

    for line in body.splitlines():
        if line.strip().startswith("```"):
            if fence is None:
                flush()
                fence = []
            else:
                paragraphs.append("\n".join(fence))
                fence = None
            continue
        if fence is not None:
            fence.append(line)
            continue
        if not line.strip():
            flush()
        else:
            current.append(line)
    if fence is not None and fence:
        paragraphs.append("\n".join(fence))
    flush()
    return [p for p in paragraphs if p.strip()]


@dataclass
class ExtractionResult:
    blocks: list[str]
    dropped_invalid: int


def extract_embedded_tests(
    issue: IssueDocument,
    classifier=None,
    checker: ValidityChecker | None = None,
) -> ExtractionResult:
    """Merged maximal runs of code-labeled paragraphs that parse."""
    paragraphs = split_paragraphs(issue.body)
    labels = [classify_paragraph(p, classifier) for p in paragraphs]

    blocks: list[str] = []
    run: list[str] = []
    for label in labels + [None]:
        if label is not None and label.label is ParagraphClass.CODE:
            run.append(label.text)
            continue
        if run:
            blocks.append("\n".join(run))
            run = []

    kept: list[str] = []
    dropped = 0
    for block in blocks:
        if is_valid(block, checker):
            kept.append(block)
        else:
            dropped += 1
    return ExtractionResult(blocks=kept, dropped_invalid=dropped)


# --- tracker clients --------------------------------------------------------


class OfflineTrackerClient:
    """Reads saved issue dumps: dumps/<tracker>/<issue_id>.json plus
    dumps/<tracker>/<issue_id>/attachments/*."""

    def __init__(self, dumps_root: str | Path):
        self.root = Path(dumps_root)

    def fetch_issues(self, query: str = "") -> list[IssueDocument]:
        issues: list[IssueDocument] = []
        if not self.root.is_dir():
            return issues
        for path in sorted(self.root.glob("*/*.json")):
            tracker = path.parent.name
            issue_id = path.stem
            data = json.loads(path.read_text(encoding="utf-8"))
            body = data.get("body", "")
            if query and query not in body and query not in issue_id:
                continue
            attachments = []
            attach_dir = path.parent / issue_id / "attachments"
            if attach_dir.is_dir():
                for f in sorted(attach_dir.iterdir()):
                    if f.is_file():
                        attachments.append((f.name, f.read_bytes()))
            issues.append(
                IssueDocument(
                    tracker=tracker,
                    issue_id=issue_id,
                    body=body,
                    attachments=attachments,
                )
            )
        return issues


class HttpTrackerClient:
    """Generic HTTP+token client.

    family "issues-api": endpoint returns a JSON array of objects with
    id/number and body fields. family "attachment-tracker": endpoint
    returns {"bugs": [...]} and serves attachments under
    /bug/<id>/attachment. Auth token comes from the named environment
    variable; never from the config file."""

    def __init__(
        self,
        tracker: str,
        endpoint: str,
        family: str = "issues-api",
        token: str | None = None,
        delay: float = 0.0,
        session=None,
    ):
        if family not in ("issues-api", "attachment-tracker"):
            raise ValueError(f"unknown tracker family {family!r}")
        self.tracker = tracker
        self.endpoint = endpoint.rstrip("/")
        self.family = family
        self.token = token
        self.delay = delay
        if session is None:
            import requests

            session = requests.Session()
        self.session = session

    def _get(self, url: str, params: dict | None = None):
        if self.delay:
            time.sleep(self.delay)
        headers = {}
        if self.token:
            headers["Authorization"] = f"token {self.token}"
        try:
            response = self.session.get(url, params=params, headers=headers, timeout=30)
        except Exception as exc:
            raise NetworkFailure(str(exc))
        if response.status_code in (401, 403):
            raise AuthFailure(f"{url}: HTTP {response.status_code}")
        if response.status_code == 429:
            retry = response.headers.get("Retry-After")
            raise RateLimited(float(retry) if retry else None)
        if response.status_code >= 400:
            raise NetworkFailure(f"{url}: HTTP {response.status_code}")
        return response

    def fetch_issues(self, query: str = "") -> list[IssueDocument]:
        params = {"q": query} if query else None
        if self.family == "issues-api":
            payload = self._get(self.endpoint, params).json()
            entries = payload if isinstance(payload, list) else payload.get("items", [])
            return [
                IssueDocument(
                    tracker=self.tracker,
                    issue_id=str(e.get("number", e.get("id"))),
                    body=e.get("body") or "",
                )
                for e in entries
            ]
        payload = self._get(f"{self.endpoint}/bug", params).json()
        issues = []
        for e in payload.get("bugs", []):
            issue_id = str(e.get("id"))
            attachments: list[tuple[str, bytes]] = []
            for att in self._get(f"{self.endpoint}/bug/{issue_id}/attachment").json().get(
                "attachments", []
            ):
                name = att.get("file_name", "attachment")
                import base64

                attachments.append((name, base64.b64decode(att.get("data", ""))))
            issues.append(
                IssueDocument(
                    tracker=self.tracker,
                    issue_id=issue_id,
                    body=e.get("summary") or e.get("body") or "",
                    attachments=attachments,
                )
            )
        return issues


def fetch_issues(client, query: str = "") -> list[IssueDocument]:
    """Uniform front for offline and HTTP clients."""
    return client.fetch_issues(query)


def mine_to_corpus(
    issues: list[IssueDocument],
    out_dir: str | Path,
    classifier=None,
    checker: ValidityChecker | None = None,
) -> dict:
    """Write extracted blocks and .js attachments into a directory that
    corpus ingestion can consume. Returns counts for the report."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stats = {"issues": len(issues), "embedded": 0, "attachments": 0, "dropped_invalid": 0}
    for issue in issues:
        result = extract_embedded_tests(issue, classifier=classifier, checker=checker)
        stats["dropped_invalid"] += result.dropped_invalid
        for i, block in enumerate(result.blocks):
            dest = out / issue.tracker / f"{issue.issue_id}_embedded_{i}.js"
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(block + "\n", encoding="utf-8")
            stats["embedded"] += 1
        for name, data in issue.attachments:
            if not name.endswith(".js"):
                continue
            dest = out / issue.tracker / f"{issue.issue_id}_{name}"
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(data)
            stats["attachments"] += 1
    return stats
