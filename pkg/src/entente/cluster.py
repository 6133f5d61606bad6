"""Bucket lo-priority warnings by normalized signature.

Engines phrase the same complaint differently and fuzzers inject literals
into messages, so clustering keys on a normalized form: code spans, large
numerals and source locations are replaced by placeholders. hi warnings are
not clustered; their messages come from the test itself and are typically
unique.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .engines import Outcome
from .errors import PriorityMismatch
from .oracle import PRIORITY_LO, Warning

Triple = tuple[str, str, str]
Signature = tuple[Triple, ...]

_CODE_SPAN = re.compile(r"`[^`]*`|'[^']*'|\"[^\"]*\"")
_HEX = re.compile(r"\b0[xX][0-9a-fA-F]+\b")
_INT = re.compile(r"\d{2,}")
_LOCATION = re.compile(
    r"(?:[\w./\\-]|⟨num⟩)+\.[A-Za-z][A-Za-z0-9]{0,3}"
    r":(?:\d+|⟨num⟩)(?::(?:\d+|⟨num⟩))?"
)
_WS = re.compile(r"\s+")

CODE_MARK = "⟨code⟩"  # ⟨code⟩
NUM_MARK = "⟨num⟩"  # ⟨num⟩
LOC_MARK = "⟨loc⟩"  # ⟨loc⟩


def normalize_message(message: str) -> str:
    """Erase code references from an engine message.

    Single digits survive on purpose: small indices are usually semantic,
    while multi-digit and hexadecimal literals are fuzzer noise."""
    text = _CODE_SPAN.sub(CODE_MARK, message)
    text = _HEX.sub(NUM_MARK, text)
    text = _INT.sub(NUM_MARK, text)
    text = _LOCATION.sub(LOC_MARK, text)
    return _WS.sub(" ", text).strip()


def _triple(name: str, outcome: Outcome) -> Triple:
    if outcome.is_pass:
        return (name, "-", "-")
    if outcome.exception_kind:
        kind = outcome.exception_kind
    else:
        # Kind-less categories (crash, timeout, oom, assert_fail) keep the
        # category name so e.g. crashes never merge with timeouts.
        kind = outcome.category.value.upper()
    message = normalize_message(outcome.message) if outcome.message else "-"
    return (name, kind, message)


def signature_of_outcomes(outcomes: dict[str, Outcome]) -> Signature:
    return tuple(_triple(name, outcomes[name]) for name in sorted(outcomes))


def signature(warning: Warning) -> Signature:
    """Sorted (engine, kind, normalized message) triples; engines that
    passed contribute (engine, "-", "-")."""
    if warning.priority != PRIORITY_LO:
        raise PriorityMismatch(
            f"clustering applies to lo warnings only, got {warning.priority!r}"
        )
    return signature_of_outcomes(warning.outcomes)


def serialize_signature(sig: Signature) -> str:
    return json.dumps([list(t) for t in sig], ensure_ascii=False)


@dataclass
class Cluster:
    signature: Signature
    representative: str
    members: list[str]
    group: str

    @property
    def size(self) -> int:
        return len(self.members)

    def to_json(self) -> dict:
        return {
            "signature": [list(t) for t in self.signature],
            "representative": self.representative,
            "members": self.members,
            "group": self.group,
            "size": self.size,
        }


def bucket(warnings: list[Warning]) -> list[Cluster]:
    """Partition lo warnings by signature equality.

    The representative is the member with the smallest ref; clusters come
    out largest first, ties broken by representative id."""
    groups: dict[Signature, list[Warning]] = {}
    for w in warnings:
        groups.setdefault(signature(w), []).append(w)
    clusters = []
    for sig, members in groups.items():
        rep = min(members, key=lambda w: w.ref)
        clusters.append(
            Cluster(
                signature=sig,
                representative=rep.ref,
                members=sorted(w.ref for w in members),
                group=rep.group,
            )
        )
    clusters.sort(key=lambda c: (-c.size, c.representative))
    return clusters
