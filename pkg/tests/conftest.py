from pathlib import Path

import numpy as np
import pytest

from lcs import catalog
from lcs.dynamics import Box, SystemSpec
from lcs.group import realize

SPECS = Path(__file__).resolve().parent.parent / "specs"

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, msg = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {msg}")


def scalar_system(a: float) -> SystemSpec:
    alg = catalog.abelian(1)
    return SystemSpec(alg, [[a]], [[1.0]], Box([-1.0], [1.0]), realize(alg), f"x' = {a}x + u")


def double_integrator() -> SystemSpec:
    alg = catalog.abelian(2)
    return SystemSpec(alg, [[0.0, 1.0], [0.0, 0.0]], [[0.0, 1.0]], Box([-1.0], [1.0]), realize(alg))


def heis_diagonal() -> SystemSpec:
    alg = catalog.heis3()
    return SystemSpec(alg, np.diag([1.0, -1.0, 0.0]), np.eye(3)[:2], Box([-1, -1], [1, 1]), realize(alg))


def heis_expanding() -> SystemSpec:
    alg = catalog.heis3()
    D = np.array([[1.0, 0, 0], [0, 1, 0], [1, 0, 2]])
    return SystemSpec(alg, D, np.eye(3)[:2], Box([-1, -1], [1, 1]), realize(alg))


def sl2_system() -> SystemSpec:
    alg = catalog.sl2()
    D = alg.ad([1.0, 0, 0])
    return SystemSpec(alg, D, [[1.0, 0, 0], [0, 1, 1]], Box([-1, -1], [1, 1]), realize(alg, drift=D))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
