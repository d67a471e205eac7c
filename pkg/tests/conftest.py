import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dobrushin.criterion import ContractionParams
from dobrushin.graph import build_graph
from dobrushin.spin_model import FiniteSpinModel, estimate_kappa

SPECS = Path(__file__).resolve().parent.parent / "specs"

BETA = 0.1
K_WORKED = 600.0
C_EDGE = 0.1

_acceptance_lines: list[str] = []


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}"
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(set(_acceptance_lines), key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def path_graph(n, prefix="v"):
    return build_graph([(f"{prefix}{i}", f"{prefix}{i + 1}") for i in range(1, n)])


@pytest.fixture(scope="session")
def p6():
    return path_graph(6)


@pytest.fixture(scope="session")
def worked_model(p6):
    return FiniteSpinModel.ising(p6, BETA)


@pytest.fixture(scope="session")
def worked_params(p6, worked_model):
    return ContractionParams.from_graph(p6, estimate_kappa(worked_model, p6, K_WORKED), C_EDGE)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def spin_values():
    return np.array([-1.0, 1.0])
