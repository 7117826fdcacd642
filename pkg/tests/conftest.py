import numpy as np
import pytest

from mixedfem.mesh import build_uniform_square, perturb_interior


@pytest.fixture(scope="session")
def mesh2():
    return build_uniform_square(2)


@pytest.fixture(scope="session")
def mesh4():
    return build_uniform_square(4)


@pytest.fixture(scope="session")
def perturbed4():
    return perturb_interior(build_uniform_square(4), 0.25, seed=1)


def random_points(n, seed=0):
    """Reference-triangle points drawn uniformly."""
    rng = np.random.default_rng(seed)
    p = rng.random((n, 2))
    flip = p.sum(axis=1) > 1
    p[flip] = 1 - p[flip]
    return p


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


def record_criterion(number, title, passed, detail=""):
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
