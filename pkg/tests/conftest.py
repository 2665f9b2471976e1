import numpy as np
import pytest

from krylov_qfi import build_weighted_space, random_density_matrix

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def random_hermitian(dim, rng):
    G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (G + G.conj().T)


def random_system(dim, seed):
    """A random full-rank state, its weighted space and a random Hamiltonian."""
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(dim, int(rng.integers(2**63)))
    H = random_hermitian(dim, rng)
    return rho, build_weighted_space(rho), H


@pytest.fixture
def qubit():
    from krylov_qfi import validate_density_matrix

    rho = validate_density_matrix(np.diag([0.75, 0.25]))
    return rho, build_weighted_space(rho)


# acceptance lines are collected here and echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
