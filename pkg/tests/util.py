"""Builders for hermetic test fixtures: mock registries, suites, manifests."""

from __future__ import annotations

import json
import sys
from pathlib import Path

MOCK_ERROR_PATTERNS = [
    {
        "category": "syntax_error",
        "kind": "SyntaxError",
        "pattern": "^SyntaxError: (?P<message>.*)$",
    },
    {
        "category": "runtime_error",
        "kind": "",
        "pattern": "^(?P<kind>[A-Z][A-Za-z0-9]*Error): (?P<message>.*)$",
    },
    {
        "category": "oom",
        "pattern": "heap out of memory",
    },
]


def mock_engine_entry(name: str, timeout: float = 10.0) -> dict:
    return {
        "name": name,
        "binary": sys.executable,
        "flags": ["-m", "entente.mockengine", "--name", name],
        "parse_only_flags": ["--parse-only"],
        "timeout": timeout,
        "memory_limit": 2 * 1024 * 1024 * 1024,
        "error_patterns": MOCK_ERROR_PATTERNS,
    }


def write_registry(path: Path, names: list[str], timeout: float = 10.0) -> Path:
    payload = {"engines": [mock_engine_entry(n, timeout) for n in names]}
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path


def write_suite(directory: Path, files: dict[str, str]) -> Path:
    for rel, source in files.items():
        dest = directory / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(source, encoding="utf-8")
    return directory


def write_manifest(path: Path, suites: list[dict]) -> Path:
    path.write_text(json.dumps({"suites": suites}, indent=2), encoding="utf-8")
    return path
