import numpy as np
import pytest
from hypothesis import settings

from rsmooth.manifold import Stiefel
from rsmooth.problem import cm_generate, cm_problem, spca_generate, spca_problem

settings.register_profile("default", max_examples=50, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def spca_toy():
    """The SPCA toy used throughout: m=500, n=50, r=5, lam=0.4."""
    return spca_generate(500, 50, 5, 0.4, seed=0)


@pytest.fixture(scope="session")
def spca_toy_problem(spca_toy):
    return spca_problem(spca_toy)


@pytest.fixture(scope="session")
def cm_small():
    return cm_problem(cm_generate(32, 2, 0.1))


@pytest.fixture
def x1_toy():
    return Stiefel(50, 5).random_point(np.random.default_rng(1))


@pytest.fixture
def report(request):
    """Record one ``criterion n: PASS/FAIL`` line; returns ``ok`` for asserting."""
    lines = request.config.__dict__.setdefault("acceptance_lines", [])

    def _report(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.__dict__.get("acceptance_lines")
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
