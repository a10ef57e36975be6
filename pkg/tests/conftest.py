import functools

import numpy as np
import pytest
from scipy.linalg import expm

from cvkrotov.gaussian import symplectic_form


def random_symplectic(n_modes, rng, scale=0.3):
    """exp(sigma K) with K random symmetric."""
    k = rng.normal(scale=scale, size=(2 * n_modes, 2 * n_modes))
    k = 0.5 * (k + k.T)
    return expm(symplectic_form(n_modes) @ k)


def random_symmetric(dim, rng):
    a = rng.normal(size=(dim, dim))
    return 0.5 * (a + a.T)


# "[ACCEPT n] PASS|FAIL ..." lines, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20241016)


@functools.lru_cache(maxsize=None)
def run_preset(name):
    from cvkrotov.krotov import optimize
    from cvkrotov.optomech import preset

    p = preset(name)
    res = optimize(
        p.generator, p.grid, np.eye(4), p.target, p.initial_guess(), shape=p.shape, config=p.krotov
    )
    return p, res


@pytest.fixture(scope="session")
def fig2_run():
    return run_preset("fig2")


@pytest.fixture(scope="session")
def fig2_spectral_run():
    return run_preset("fig2_spectral")
