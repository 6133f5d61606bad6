"""The differential oracle: turn per-engine outcomes into warnings.

A warning exists exactly when the engines disagree in the cheap-to-trust
direction: at least one engine passes and at least one does not. All-pass is
consistent; all-fail is deliberately not reported, because relating distinct
failures to each other has no sound automatic interpretation.
"""

from __future__ import annotations

from dataclasses import dataclass

from .engines import Outcome, OutcomeCategory

PRIORITY_HI = "hi"
PRIORITY_LO = "lo"

# Group name for warnings where no single engine is the odd one out.
MULTI_GROUP = "+1"


@dataclass
class Warning:
    ref: str
    outcomes: dict[str, Outcome]
    priority: str
    group: str
    created_at: float = 0.0

    def to_json(self) -> dict:
        return {
            "ref": self.ref,
            "priority": self.priority,
            "group": self.group,
            "created_at": self.created_at,
            "outcomes": {
                name: self.outcomes[name].to_json() for name in sorted(self.outcomes)
            },
        }


@dataclass
class InfoRecord:
    """All-fail-with-different-kinds case, surfaced only when asked for."""

    ref: str
    outcomes: dict[str, Outcome]

    def to_json(self) -> dict:
        return {
            "ref": self.ref,
            "kind": "all_fail_mismatch",
            "outcomes": {
                name: self.outcomes[name].to_json() for name in sorted(self.outcomes)
            },
        }


def _group_of(outcomes: dict[str, Outcome]) -> str:
    """The engine whose outcome category differs from the single category
    shared by all the others, or "+1" when no such unique engine exists."""
    names = sorted(outcomes)
    candidates = []
    for name in names:
        others = {outcomes[n].category for n in names if n != name}
        if len(others) == 1 and outcomes[name].category not in others:
            candidates.append(name)
    if len(candidates) == 1:
        return candidates[0]
    return MULTI_GROUP


def prioritize(warning: Warning) -> str:
    """hi when every failing engine failed only by violating a test or
    harness assertion; lo for anything involving an engine-raised
    exception, crash, timeout or out-of-memory."""
    non_pass = [o for o in warning.outcomes.values() if not o.is_pass]
    if non_pass and all(
        o.category is OutcomeCategory.ASSERT_FAIL for o in non_pass
    ):
        return PRIORITY_HI
    return PRIORITY_LO


def compare(
    outcomes: dict[str, Outcome],
    ref: str = "",
    created_at: float = 0.0,
) -> Warning | None:
    """Return a Warning when outcomes are inconsistent, else None."""
    if len(outcomes) < 2:
        raise ValueError("compare needs outcomes from at least two engines")
    any_pass = any(o.is_pass for o in outcomes.values())
    any_fail = any(not o.is_pass for o in outcomes.values())
    if not (any_pass and any_fail):
        return None
    warning = Warning(
        ref=ref,
        outcomes=dict(outcomes),
        priority=PRIORITY_LO,
        group=_group_of(outcomes),
        created_at=created_at,
    )
    warning.priority = prioritize(warning)
    return warning


def all_fail_mismatch(outcomes: dict[str, Outcome], ref: str = "") -> InfoRecord | None:
    """Optional INFO record: every engine failed, but not identically.

    Identical means same (category, exception kind) on every engine."""
    if len(outcomes) < 2:
        return None
    if any(o.is_pass for o in outcomes.values()):
        return None
    shapes = {(o.category, o.exception_kind) for o in outcomes.values()}
    if len(shapes) <= 1:
        return None
    return InfoRecord(ref=ref, outcomes=dict(outcomes))
