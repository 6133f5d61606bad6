"""Describe, invoke and classify JavaScript engine binaries.

Engines are external processes described by an ``EngineSpec``. Running a
test produces a ``RawExecution`` (streams, exit status, resource flags),
which ``classify`` folds into an ``Outcome``. All engine-specific error
phrasing lives in the registry's ordered ``error_patterns``, never in code.
"""

from __future__ import annotations

import concurrent.futures
import enum
import hashlib
import json
import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field

from .errors import (
    ConfigParse,
    DuplicateEngineName,
    MissingBinary,
    SpawnFailure,
)

try:
    import resource as _resource
except ImportError:  # pragma: no cover - non-POSIX
    _resource = None

DEFAULT_TIMEOUT = 30.0
DEFAULT_MEMORY_LIMIT = 2 * 1024 * 1024 * 1024  # 2 GiB

# Frozen contract with the harness prelude: an assertion violation prints
# exactly this prefix followed by the message, then throws.
ASSERT_SENTINEL = "ENTENTE_ASSERT_FAIL:"

PROBE_PROGRAM = "1+1"


class OutcomeCategory(enum.Enum):
    PASS = "pass"
    ASSERT_FAIL = "assert_fail"
    RUNTIME_ERROR = "runtime_error"
    SYNTAX_ERROR = "syntax_error"
    CRASH = "crash"
    TIMEOUT = "timeout"
    OOM = "oom"


_PATTERN_CATEGORIES = {
    OutcomeCategory.RUNTIME_ERROR,
    OutcomeCategory.SYNTAX_ERROR,
    OutcomeCategory.OOM,
}


@dataclass(frozen=True)
class ErrorPattern:
    """One entry of an engine's ordered error-recognition list.

    ``pattern`` is searched (multiline) in stderr+stdout. A ``kind`` named
    group in the regex overrides the declared ``kind``; the message comes
    from a ``message`` group, else group 1, else the whole match.
    """

    category: OutcomeCategory
    kind: str
    pattern: str

    def compiled(self) -> re.Pattern[str]:
        return re.compile(self.pattern, re.MULTILINE)


@dataclass(frozen=True)
class EngineSpec:
    name: str
    binary_path: str
    extra_flags: tuple[str, ...] = ()
    error_patterns: tuple[ErrorPattern, ...] = ()
    parse_only_flags: tuple[str, ...] | None = None
    timeout: float = DEFAULT_TIMEOUT
    memory_limit: int = DEFAULT_MEMORY_LIMIT

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError(f"engine {self.name}: timeout must be positive")
        if self.memory_limit <= 0:
            raise ValueError(f"engine {self.name}: memory_limit must be positive")


@dataclass(frozen=True)
class RawExecution:
    stdout: str
    stderr: str
    exit_code: int | None
    termination_signal: int | None
    wall_time: float
    timed_out: bool = False
    oom: bool = False


@dataclass(frozen=True)
class Outcome:
    category: OutcomeCategory
    engine: str
    exception_kind: str | None = None
    message: str | None = None

    def __post_init__(self) -> None:
        kinded = self.category in (
            OutcomeCategory.RUNTIME_ERROR,
            OutcomeCategory.SYNTAX_ERROR,
        )
        if kinded and not self.exception_kind:
            raise ValueError(f"{self.category.value} outcome requires exception_kind")
        if not kinded and self.exception_kind:
            raise ValueError(
                f"{self.category.value} outcome must not carry exception_kind"
            )

    @property
    def is_pass(self) -> bool:
        return self.category is OutcomeCategory.PASS

    def to_json(self) -> dict:
        return {
            "category": self.category.value,
            "engine": self.engine,
            "exception_kind": self.exception_kind,
            "message": self.message,
        }


def _parse_pattern(entry: dict, where: str) -> ErrorPattern:
    try:
        category = OutcomeCategory(entry["category"])
    except (KeyError, ValueError) as exc:
        raise ConfigParse(where, f"bad pattern category: {exc}")
    if category not in _PATTERN_CATEGORIES:
        raise ConfigParse(
            where, f"pattern category must be one of runtime_error/syntax_error/oom, got {category.value}"
        )
    pattern = entry.get("pattern")
    if not pattern:
        raise ConfigParse(where, "pattern entry missing 'pattern'")
    try:
        compiled = re.compile(pattern)
    except re.error as exc:
        raise ConfigParse(where, f"bad regex: {exc}")
    kind = entry.get("kind", "")
    if category is not OutcomeCategory.OOM and not kind and "kind" not in compiled.groupindex:
        raise ConfigParse(
            where, "error pattern needs a declared kind or a (?P<kind>...) group"
        )
    return ErrorPattern(category=category, kind=kind, pattern=pattern)


def _parse_engine(entry: dict, where: str) -> EngineSpec:
    name = entry.get("name")
    if not name:
        raise ConfigParse(where, "engine entry missing 'name'")
    binary = entry.get("binary")
    if not binary:
        raise ConfigParse(where, f"engine {name!r} missing 'binary'")
    patterns = tuple(
        _parse_pattern(p, f"{where}.error_patterns[{i}]")
        for i, p in enumerate(entry.get("error_patterns", []))
    )
    parse_only = entry.get("parse_only_flags")
    return EngineSpec(
        name=name,
        binary_path=binary,
        extra_flags=tuple(entry.get("flags", [])),
        error_patterns=patterns,
        parse_only_flags=tuple(parse_only) if parse_only is not None else None,
        timeout=float(entry.get("timeout", DEFAULT_TIMEOUT)),
        memory_limit=int(entry.get("memory_limit", DEFAULT_MEMORY_LIMIT)),
    )


def resolve_binary(spec: EngineSpec) -> str:
    """Absolute path of the engine binary, or raise MissingBinary."""
    path = spec.binary_path
    if os.path.sep in path or (os.path.altsep and os.path.altsep in path):
        if os.path.isfile(path) and os.access(path, os.X_OK):
            return os.path.abspath(path)
        raise MissingBinary(spec.name, path)
    found = shutil.which(path)
    if found is None:
        raise MissingBinary(spec.name, path)
    return found


def load_registry(config_path: str | os.PathLike, probe: bool = True) -> list[EngineSpec]:
    """Read the engine registry file (JSON, see configs/registry.example.json).

    Validates that names are unique, binaries exist, and (when ``probe``)
    that each engine runs a trivial ``1+1`` program cleanly.
    """
    path = os.fspath(config_path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigParse(path, "file not found")
    except json.JSONDecodeError as exc:
        raise ConfigParse(f"{path}:{exc.lineno}", exc.msg)

    entries = data.get("engines")
    if not isinstance(entries, list):
        raise ConfigParse(path, "top level must contain an 'engines' list")

    specs: list[EngineSpec] = []
    seen: set[str] = set()
    for i, entry in enumerate(entries):
        spec = _parse_engine(entry, f"{path}#engines[{i}]")
        if spec.name in seen:
            raise DuplicateEngineName(spec.name)
        seen.add(spec.name)
        resolve_binary(spec)
        specs.append(spec)

    if probe:
        for spec in specs:
            raw = execute(spec, PROBE_PROGRAM)
            outcome = classify(spec, raw)
            if not outcome.is_pass:
                raise MissingBinary(
                    spec.name,
                    f"{spec.binary_path} failed probe: {outcome.category.value}",
                )
    return specs


def _limit_memory(limit: int):
    def apply() -> None:  # pragma: no cover - runs in the child
        if _resource is not None:
            try:
                _resource.setrlimit(_resource.RLIMIT_AS, (limit, limit))
            except (ValueError, OSError):
                pass

    return apply


def execute(
    spec: EngineSpec,
    source: str,
    prelude: str | None = None,
    parse_only: bool = False,
) -> RawExecution:
    """Run ``prelude ++ source`` through the engine under resource limits.

    Timeout and memory exhaustion are recorded in the result, never raised;
    only an unstartable process raises SpawnFailure.
    """
    if not source:
        raise ValueError("source must be non-empty")
    binary = resolve_binary(spec)
    flags = list(spec.extra_flags)
    if parse_only:
        if spec.parse_only_flags is None:
            raise ValueError(f"engine {spec.name} has no parse_only_flags")
        flags += list(spec.parse_only_flags)

    text = source if prelude is None else prelude.rstrip("\n") + "\n" + source
    fd, path = tempfile.mkstemp(suffix=".js", prefix="entente-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        cmd = [binary, *flags, path]
        start = time.monotonic()
        try:
            proc = subprocess.Popen(
                cmd,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                preexec_fn=_limit_memory(spec.memory_limit) if _resource else None,
            )
        except OSError as exc:
            raise SpawnFailure(f"{cmd[0]}: {exc}")
        timed_out = False
        try:
            out_b, err_b = proc.communicate(timeout=spec.timeout)
        except subprocess.TimeoutExpired:
            timed_out = True
            proc.kill()
            out_b, err_b = proc.communicate()
        wall = time.monotonic() - start
    finally:
        try:
            os.unlink(path)
        except OSError:
            pass

    stdout = out_b.decode("utf-8", errors="replace")
    stderr = err_b.decode("utf-8", errors="replace")
    if timed_out:
        exit_code, signal = None, None
    elif proc.returncode is not None and proc.returncode < 0:
        exit_code, signal = None, -proc.returncode
    else:
        exit_code, signal = proc.returncode, None
    return RawExecution(
        stdout=stdout,
        stderr=stderr,
        exit_code=exit_code,
        termination_signal=signal,
        wall_time=wall,
        timed_out=timed_out,
        oom=False,
    )


def _find_sentinel(raw: RawExecution) -> str | None:
    for stream in (raw.stdout, raw.stderr):
        for line in stream.splitlines():
            stripped = line.strip()
            if stripped.startswith(ASSERT_SENTINEL):
                return stripped[len(ASSERT_SENTINEL):].strip()
    return None


def _match_patterns(spec: EngineSpec, text: str) -> Outcome | None:
    for pat in spec.error_patterns:
        m = pat.compiled().search(text)
        if m is None:
            continue
        if pat.category is OutcomeCategory.OOM:
            return Outcome(OutcomeCategory.OOM, spec.name)
        groups = m.groupdict()
        kind = groups.get("kind") or pat.kind
        if "message" in groups and groups["message"] is not None:
            message = groups["message"]
        elif m.groups():
            message = next((g for g in m.groups() if g is not None), m.group())
        else:
            message = m.group()
        return Outcome(pat.category, spec.name, exception_kind=kind, message=message.strip())
    return None


def classify(spec: EngineSpec, raw: RawExecution) -> Outcome:
    """Fold a raw execution into an Outcome.

    Precedence: timeout, then oom flag, then crash-by-signal, then the
    assertion sentinel, then the engine's error patterns in declared order,
    then unexplained nonzero exit, then pass.
    """
    if raw.timed_out:
        return Outcome(OutcomeCategory.TIMEOUT, spec.name)
    if raw.oom:
        return Outcome(OutcomeCategory.OOM, spec.name)
    if raw.termination_signal is not None:
        return Outcome(
            OutcomeCategory.CRASH, spec.name, message=f"signal {raw.termination_signal}"
        )
    sentinel = _find_sentinel(raw)
    if sentinel is not None:
        return Outcome(OutcomeCategory.ASSERT_FAIL, spec.name, message=sentinel)
    matched = _match_patterns(spec, raw.stderr + "\n" + raw.stdout)
    if matched is not None:
        return matched
    if raw.exit_code == 0:
        return Outcome(OutcomeCategory.PASS, spec.name)
    lines = [ln for ln in raw.stderr.splitlines() if ln.strip()]
    return Outcome(
        OutcomeCategory.RUNTIME_ERROR,
        spec.name,
        exception_kind="Unknown",
        message=lines[-1].strip() if lines else None,
    )


def run_and_classify(
    spec: EngineSpec,
    source: str,
    prelude: str | None = None,
    parse_only: bool = False,
) -> Outcome:
    return classify(spec, execute(spec, source, prelude=prelude, parse_only=parse_only))


def registry_digest(config_path: str | os.PathLike) -> str:
    with open(config_path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


@dataclass
class Runner:
    """Memoizing parallel execution service over a fixed registry.

    Outcomes are cached per (engine, test id); consumers must therefore only
    reuse a Runner while sources are immutable, which holds for corpora.
    """

    registry: list[EngineSpec]
    prelude: str | None = None
    jobs: int | None = None
    _cache: dict[tuple[str, str], Outcome] = field(default_factory=dict)

    def engine(self, name: str) -> EngineSpec:
        for spec in self.registry:
            if spec.name == name:
                return spec
        raise KeyError(f"no engine named {name!r} in registry")

    def outcome(self, spec: EngineSpec, test) -> Outcome:
        key = (spec.name, test.id)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        prelude = self.prelude if getattr(test, "needs_prelude", False) else None
        result = run_and_classify(spec, test.source, prelude=prelude)
        self._cache[key] = result
        return result

    def outcomes(self, tests, engines=None) -> dict[tuple[str, str], Outcome]:
        """Run every (test, engine) pair, in parallel, cache-aware.

        Returns a map keyed by (test id, engine name)."""
        engines = list(engines) if engines is not None else list(self.registry)
        pairs = [
            (t, e)
            for t in tests
            for e in engines
            if (e.name, t.id) not in self._cache
        ]
        workers = self.jobs or os.cpu_count() or 2
        if pairs:
            with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(self.outcome, e, t): (t.id, e.name) for t, e in pairs
                }
                for fut in concurrent.futures.as_completed(futures):
                    fut.result()
        return {
            (t.id, e.name): self._cache[(e.name, t.id)]
            for t in tests
            for e in engines
        }
