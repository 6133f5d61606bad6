"""Black-box mutational fuzzing of seed tests.

Mutants are produced by simple token-aware operators, filtered through a
validity check so only well-formed candidates reach the engines, and are
fully replayable: the same (seed, count, rng seed) always yields the same
byte-for-byte mutants. An external fuzzer binary can replace the bundled
operators via the ``fuzzer <in> <out> <rng_seed>`` subprocess contract.
"""

from __future__ import annotations

import json
import hashlib
import os
import random
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from . import jstokens
from .corpus import TestCase
from .engines import EngineSpec, OutcomeCategory, resolve_binary, run_and_classify
from .errors import CheckerUnavailable, MissingBinary

DEFAULT_MUTANTS_PER_SEED = 20
ATTEMPT_BUDGET_FACTOR = 50

# Boundary values that historically shake out precondition checks.
NUMERIC_BOUNDARIES = ("0", "-1", "2147483647", "9007199254740992")

STRING_NOISE = ("\\x00", "\\u0000", "\\n", "\\t", "\\\\")

BUILTIN_NAMES = (
    "Array", "Boolean", "Infinity", "JSON", "Math", "NaN", "Number",
    "Object", "String", "eval", "isNaN", "parseInt", "undefined",
)

OPERATOR_SWAPS = {"===": "==", "==": "===", "+": "-", "-": "+"}


@dataclass(frozen=True)
class Mutant:
    seed_id: str
    generation_index: int
    source: str
    operator: str
    rng_seed: int


@dataclass
class FuzzBatch:
    seed_id: str
    rng_seed: int
    mutants: list[Mutant]
    attempts: int
    budget_exhausted: bool = False


def _mutable_tokens(source: str) -> list[jstokens.Token]:
    try:
        return jstokens.tokenize(source)
    except jstokens.TokenizeError:
        return []


def _splice(source: str, start: int, end: int, replacement: str) -> str:
    return source[:start] + replacement + source[end:]


def _op_numeric_boundary(source: str, rng: random.Random) -> str | None:
    nums = [t for t in _mutable_tokens(source) if t.kind == "num"]
    if not nums:
        return None
    tok = rng.choice(nums)
    choices = list(NUMERIC_BOUNDARIES) + [f"-{rng.randrange(10**18, 10**19)}"]
    replacement = rng.choice(choices)
    return _splice(source, tok.start, tok.end, replacement)


def _op_string_noise(source: str, rng: random.Random) -> str | None:
    strs = [t for t in _mutable_tokens(source) if t.kind == "str"]
    if not strs:
        return None
    tok = rng.choice(strs)
    inner_len = max(len(tok.text) - 2, 0)
    pos = tok.start + 1 + (rng.randrange(inner_len + 1) if inner_len else 0)
    noise = rng.choice(STRING_NOISE)
    return _splice(source, pos, pos, noise)


def _op_token_duplicate(source: str, rng: random.Random) -> str | None:
    toks = _mutable_tokens(source)
    if not toks:
        return None
    tok = rng.choice(toks)
    return _splice(source, tok.end, tok.end, " " + tok.text)


def _op_token_delete(source: str, rng: random.Random) -> str | None:
    toks = _mutable_tokens(source)
    if len(toks) < 2:
        return None
    tok = rng.choice(toks)
    result = source[: tok.start] + source[tok.end:]
    return result if result.strip() else None


def _op_operator_swap(source: str, rng: random.Random) -> str | None:
    swappable = [
        t
        for t in _mutable_tokens(source)
        if t.kind == "punct" and t.text in OPERATOR_SWAPS
    ]
    if not swappable:
        return None
    tok = rng.choice(swappable)
    return _splice(source, tok.start, tok.end, OPERATOR_SWAPS[tok.text])


def _op_ident_to_builtin(source: str, rng: random.Random) -> str | None:
    idents = [
        t
        for t in _mutable_tokens(source)
        if t.kind == "ident" and t.text not in jstokens.KEYWORDS
    ]
    if not idents:
        return None
    tok = rng.choice(idents)
    replacement = rng.choice([b for b in BUILTIN_NAMES if b != tok.text] or ["Math"])
    return _splice(source, tok.start, tok.end, replacement)


def _op_line_splice(source: str, rng: random.Random) -> str | None:
    lines = source.splitlines()
    candidates = [i for i, ln in enumerate(lines) if ln.strip()]
    if len(lines) < 2 or not candidates:
        return None
    src_idx = rng.choice(candidates)
    dst_idx = rng.randrange(len(lines) + 1)
    out = lines[:dst_idx] + [lines[src_idx]] + lines[dst_idx:]
    return "\n".join(out)


MUTATION_OPERATORS = {
    "numeric_boundary": _op_numeric_boundary,
    "string_noise": _op_string_noise,
    "token_duplicate": _op_token_duplicate,
    "token_delete": _op_token_delete,
    "operator_swap": _op_operator_swap,
    "ident_to_builtin": _op_ident_to_builtin,
    "line_splice": _op_line_splice,
}

_OPERATOR_ORDER = sorted(MUTATION_OPERATORS)


def apply_operator(name: str, source: str, rng: random.Random) -> str | None:
    """Run one named operator; None when it has no applicable site."""
    return MUTATION_OPERATORS[name](source, rng)


def mutate_once(source: str, rng: random.Random) -> str:
    """One uniformly chosen mutation; possibly invalid, possibly a no-op
    when the chosen operator has nothing to bite on."""
    if not source:
        raise ValueError("source must be non-empty")
    candidate, _ = _mutate_step(source, rng)
    return candidate


def _mutate_step(source: str, rng: random.Random) -> tuple[str, str]:
    name = rng.choice(_OPERATOR_ORDER)
    result = apply_operator(name, source, rng)
    return (result if result is not None else source), name


class ValidityChecker:
    """Interface: returns True when the candidate is well-formed."""

    def is_valid(self, candidate: str) -> bool:  # pragma: no cover - interface
        raise NotImplementedError


class TokenizerChecker(ValidityChecker):
    """Bundled fallback; accepts a superset of the grammar, so prefer an
    engine's parse-only mode when one is configured."""

    def is_valid(self, candidate: str) -> bool:
        return jstokens.check_source(candidate).ok


class EngineParseChecker(ValidityChecker):
    def __init__(self, spec: EngineSpec):
        if spec.parse_only_flags is None:
            raise CheckerUnavailable(
                f"engine {spec.name} does not declare parse_only_flags"
            )
        try:
            resolve_binary(spec)
        except MissingBinary as exc:
            raise CheckerUnavailable(str(exc))
        self.spec = spec

    def is_valid(self, candidate: str) -> bool:
        outcome = run_and_classify(self.spec, candidate, parse_only=True)
        return outcome.category is not OutcomeCategory.SYNTAX_ERROR


def is_valid(candidate: str, checker: ValidityChecker | None = None) -> bool:
    """True iff the candidate passes the validity check (no syntax error)."""
    if not candidate.strip():
        return False
    checker = checker or TokenizerChecker()
    return checker.is_valid(candidate)


class ExternalFuzzer:
    """Adapter for an external mutator: ``cmd <in> <out> <rng_seed>``."""

    def __init__(self, command: list[str], timeout: float = 60.0):
        self.command = list(command)
        self.timeout = timeout

    def __call__(self, source: str, rng: random.Random) -> tuple[str, str]:
        step_seed = rng.getrandbits(63)
        with tempfile.TemporaryDirectory(prefix="entente-fuzz-") as tmp:
            src = Path(tmp) / "in.js"
            dst = Path(tmp) / "out.js"
            src.write_text(source, encoding="utf-8")
            subprocess.run(
                [*self.command, str(src), str(dst), str(step_seed)],
                check=True,
                timeout=self.timeout,
                capture_output=True,
            )
            return dst.read_text(encoding="utf-8"), self.command[0]


def derive_seed(base_seed: int, seed_id: str) -> int:
    """Stable per-seed 64-bit rng seed, identical across platforms."""
    digest = hashlib.sha256(f"{base_seed}:{seed_id}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def generate_valid(
    seed: TestCase,
    n: int = DEFAULT_MUTANTS_PER_SEED,
    rng_seed: int = 0,
    checker: ValidityChecker | None = None,
    mutator=None,
) -> FuzzBatch:
    """Collect n valid, seed-distinct mutants.

    Retries invalid or no-op candidates until the attempt budget
    (ATTEMPT_BUDGET_FACTOR * n) runs out; a short batch is flagged, never an
    error."""
    rng = random.Random(rng_seed)
    checker = checker or TokenizerChecker()
    mutate = mutator or _mutate_step
    budget = ATTEMPT_BUDGET_FACTOR * n
    mutants: list[Mutant] = []
    attempts = 0
    while len(mutants) < n and attempts < budget:
        attempts += 1
        candidate, operator = mutate(seed.source, rng)
        if candidate == seed.source or not candidate:
            continue
        if not is_valid(candidate, checker):
            continue
        mutants.append(
            Mutant(
                seed_id=seed.id,
                generation_index=len(mutants),
                source=candidate,
                operator=operator,
                rng_seed=rng_seed,
            )
        )
    return FuzzBatch(
        seed_id=seed.id,
        rng_seed=rng_seed,
        mutants=mutants,
        attempts=attempts,
        budget_exhausted=len(mutants) < n,
    )


def write_mutants(batch: FuzzBatch, out_dir: str | os.PathLike) -> list[Path]:
    """Persist mutants as out/<seed_id>/<index>.js plus a JSON sidecar."""
    root = Path(out_dir) / batch.seed_id
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for m in batch.mutants:
        js = root / f"{m.generation_index}.js"
        js.write_text(m.source, encoding="utf-8")
        sidecar = {
            "seed_id": m.seed_id,
            "generation_index": m.generation_index,
            "operator": m.operator,
            "rng_seed": m.rng_seed,
            "sha256": hashlib.sha256(m.source.encode()).hexdigest(),
        }
        (root / f"{m.generation_index}.json").write_text(
            json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        written.append(js)
    return written
