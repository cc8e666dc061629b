import json
from pathlib import Path

import numpy as np
import pytest

from monocrit import (
    MonodromyConfig,
    Objective,
    build_critical_system,
    collect_fiber,
    find_seed,
    parse_problem,
    randomize_square,
)

DATA = Path(__file__).parent / "data"

ELLIPSE_U = np.array([0.75, -0.29])
HANKEL_U = np.array([2 / 5, -2 / 7, 5 / 6, 3 / 7])
HANKEL_COEFFS = np.array([[2, 3, 5], [7, 11, 13]]) / 100
ML_U = np.array([15.0, 11, 7, 17, 3, 9, 5, 12, 4])


def load_problem(name: str):
    return parse_problem((DATA / name).read_text())


def critical_system(name: str, coeffs=None, rng=0):
    problem = load_problem(name)
    model = randomize_square(problem.system, problem.codim, coeffs=coeffs, rng=rng)
    return build_critical_system(model, Objective(problem.objective, model.dimension))


def line_system(objective: str = "likelihood"):
    problem = parse_problem(f"vars: x1 x2\nobjective: {objective}\nmodel:\nx1 + x2 - 1\n")
    model = randomize_square(problem.system)
    return build_critical_system(model, Objective(objective, 2))


def circle_system():
    problem = parse_problem("vars: x1 x2\nobjective: euclidean\nmodel:\nx1^2 + x2^2 - 1\n")
    model = randomize_square(problem.system)
    return build_critical_system(model, Objective("euclidean", 2))


def fiber(cs, u, seed=0, **kw):
    sd = find_seed(cs, u, rng=seed)
    return collect_fiber(cs, sd, MonodromyConfig(rng_seed=seed, **kw))


@pytest.fixture(scope="session")
def oracles():
    return json.loads((DATA / "oracles.json").read_text())


@pytest.fixture(scope="session")
def ellipse_cs():
    return critical_system("ellipse.txt")


@pytest.fixture(scope="session")
def ellipse_fiber(ellipse_cs):
    return fiber(ellipse_cs, ELLIPSE_U, seed=3)


@pytest.fixture(scope="session")
def hankel_cs():
    return critical_system("hankel_minors.txt", coeffs=HANKEL_COEFFS)


@pytest.fixture(scope="session")
def hankel_fiber(hankel_cs):
    return fiber(hankel_cs, HANKEL_U, seed=3)


@pytest.fixture(scope="session")
def ml_cs():
    return critical_system("ml_3x3_rank2.txt")


@pytest.fixture(scope="session")
def ml_fiber(ml_cs):
    return fiber(ml_cs, ML_U, seed=3)


def as_complex(pairs):
    return np.array([complex(a, b) for a, b in pairs])


ELLIPSE_GAMMA = 0.0177494619790914 + 0.60014762266504j


def ellipse_trace_setup():
    from monocrit.tracetest import TraceSetup

    return TraceSetup(
        ELLIPSE_U, [[0.3, -0.1]], [0.2, 0.3], 0.5, [1.0, 0.7], (0.0, 0.1 * ELLIPSE_GAMMA, 0.2 * ELLIPSE_GAMMA)
    )


PARABOLA_CURVE = "vars: x1 x2\nparams: t\nmodel:\nx2 - x1^2\n2*x1 + 4*x2 - 1 + t\n"


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split("criterion ", 1)[1]):
            terminalreporter.write_line(line)
