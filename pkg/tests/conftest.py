"""Test configuration and fixtures."""

import shutil
from pathlib import Path

import pytest

from app.core.budget import start_budget
from app.core.config import BUNDLED_FIXTURES
from app.services.bases import compute_bases
from app.services.kspace import GradedContext
from app.services.rootsys import build, vector


@pytest.fixture(autouse=True)
def fresh_budget():
    """Give every test an unlimited time budget."""
    start_budget(0.0)
    yield


@pytest.fixture
def a2_context():
    """A2 at its regular character, e = 1."""
    rs = build("A2")
    return GradedContext(rs.full, rs.two_rho_check, "one")


@pytest.fixture
def c2_context():
    """C2 at chi = (1,1), e = 1."""
    return GradedContext(build("C2").full, vector((1, 1)), "one")


@pytest.fixture
def sp4_family():
    """Bases of C2 at chi = (1,1)."""
    ctx = GradedContext(build("C2").full, vector((1, 1)))
    return compute_bases(ctx)


@pytest.fixture
def gl4_family():
    """Bases of A3 at chi = (2,0,0,-2)."""
    ctx = GradedContext(build("A3").full, vector((2, 0, 0, -2)))
    return compute_bases(ctx)


@pytest.fixture
def corpus_copy(tmp_path) -> Path:
    """A writable copy of the small fixtures of the bundled corpus."""
    target = tmp_path / "corpus"
    target.mkdir()
    for name in ("form_a2.json", "form_c2.json", "sp4.json", "gl4.json"):
        shutil.copy(Path(BUNDLED_FIXTURES) / name, target / name)
    return target
