import json
from pathlib import Path

import pytest

from trapkink.model import SimParams

DATA = Path(__file__).parent / "data"

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture(scope="session")
def p015():
    return SimParams(omega=0.15)


@pytest.fixture(scope="session")
def coarse():
    """Small, coarse trapped domain for fast PDE checks."""
    return SimParams(omega=0.3, dx=0.05, x_max=15.0, t_max=40.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
