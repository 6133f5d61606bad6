from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from util import write_registry  # noqa: E402

from entente.engines import Runner, load_registry  # noqa: E402

JOBS = 8


@pytest.fixture(scope="session")
def mock_registry_path(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("registry")
    return write_registry(root / "registry.json", ["e1", "e2", "e3", "e4"])


@pytest.fixture(scope="session")
def mock_registry(mock_registry_path):
    return load_registry(mock_registry_path, probe=False)


@pytest.fixture()
def runner(mock_registry) -> Runner:
    return Runner(registry=mock_registry, jobs=JOBS)


@pytest.fixture(scope="session")
def prelude_source() -> str:
    return (
        Path(__file__).resolve().parents[1] / "src" / "entente" / "data" / "prelude.js"
    ).read_text(encoding="utf-8")
