"""Exception types shared across the pipeline."""

from __future__ import annotations


class EntenteError(Exception):
    """Base class for all operational errors raised by this package."""


class ConfigParse(EntenteError):
    def __init__(self, location: str, detail: str = ""):
        self.location = location
        self.detail = detail
        super().__init__(f"bad configuration at {location}: {detail}" if detail else f"bad configuration at {location}")


class DuplicateEngineName(EntenteError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"engine name declared twice in registry: {name!r}")


class MissingBinary(EntenteError):
    def __init__(self, name: str, path: str = ""):
        self.name = name
        self.path = path
        super().__init__(f"engine {name!r}: binary not found" + (f": {path}" if path else ""))


class SpawnFailure(EntenteError):
    def __init__(self, detail: str):
        self.detail = detail
        super().__init__(f"failed to spawn engine process: {detail}")


class MissingDirectory(EntenteError):
    def __init__(self, suite: str, path: str):
        self.suite = suite
        self.path = path
        super().__init__(f"suite {suite!r}: directory does not exist: {path}")


class UnknownEntry(EntenteError):
    def __init__(self, test_id: str, engine: str):
        self.test_id = test_id
        self.engine = engine
        super().__init__(f"label references no failure for ({test_id!r}, {engine!r})")


class CheckerUnavailable(EntenteError):
    pass


class PriorityMismatch(EntenteError):
    pass


class PredicateFlaky(EntenteError):
    pass


class IoFailure(EntenteError):
    def __init__(self, path: str, detail: str = ""):
        self.path = path
        super().__init__(f"i/o failure at {path}" + (f": {detail}" if detail else ""))


class EmptySuite(EntenteError):
    def __init__(self, what: str):
        super().__init__(f"suite contains no test files: {what}")


class NetworkFailure(EntenteError):
    pass


class AuthFailure(EntenteError):
    pass


class RateLimited(EntenteError):
    def __init__(self, retry_after: float | None = None):
        self.retry_after = retry_after
        super().__init__(
            "rate limited by tracker"
            + (f", retry after {retry_after:g}s" if retry_after is not None else "")
        )


class ExternalScorerFailure(EntenteError):
    pass
