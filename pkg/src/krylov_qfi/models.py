"""Model builders: mixed-field Ising chain and Hilbert-Schmidt random states."""

import os
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .exceptions import DimensionTooLargeError, RankDeficientError
from .operator_space import EPS_RANK, validate_density_matrix

DEFAULT_MAX_HILBERT_DIM = 2**7

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])
SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]])
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def max_hilbert_dim():
    """Cap on ``2^L``; overridable through ``QFI_MAX_HILBERT_DIM``."""
    raw = os.environ.get("QFI_MAX_HILBERT_DIM")
    return int(raw) if raw else DEFAULT_MAX_HILBERT_DIM


@dataclass(frozen=True)
class IsingParams:
    length: int
    J: float = 1.0
    g: float = -1.05
    h: float = 0.5

    def __post_init__(self):
        if int(self.length) != self.length or self.length < 2:
            raise ValueError(f"chain length must be an integer >= 2, got {self.length}")

    @property
    def dim(self):
        return 2**self.length


def site_operator(op, site, length):
    """``op`` acting on ``site`` (0-based) of a chain, identity elsewhere."""
    eye = np.eye(2)
    return reduce(np.kron, [op if j == site else eye for j in range(length)])


def ising_hamiltonian(params, max_dim=None):
    """Open-chain ``H = -J sum Z_i Z_{i+1} - sum (g X_i + h Z_i)`` as a dense matrix."""
    cap = max_hilbert_dim() if max_dim is None else max_dim
    L = params.length
    if 2**L > cap:
        raise DimensionTooLargeError(f"2^{L} = {2**L} exceeds the Hilbert-dimension cap {cap}")
    Z = [site_operator(SIGMA_Z, i, L) for i in range(L)]
    X = [site_operator(SIGMA_X, i, L) for i in range(L)]
    H = np.zeros((2**L, 2**L))
    for i in range(L - 1):
        H -= params.J * Z[i] @ Z[i + 1]
    for i in range(L):
        H -= params.g * X[i] + params.h * Z[i]
    return H


def _splitmix64(z):
    mask = (1 << 64) - 1
    z = (z + 0x9E3779B97F4A7C15) & mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def mix_seed(seed, index):
    """Per-member seed: SplitMix64 of ``mix(seed) XOR index``.

    Mixing the base seed first keeps ensembles with nearby base seeds
    disjoint (a bare ``seed XOR index`` makes seeds 0..3 share members).
    """
    mask = (1 << 64) - 1
    return _splitmix64(_splitmix64(int(seed) & mask) ^ (int(index) & mask))


def random_density_matrix(dim, rng_seed, eps_rank=EPS_RANK):
    """Hilbert-Schmidt random state ``G G^dag / Tr(G G^dag)``, ``G`` complex Ginibre.

    A draw that fails the rank check is redrawn once from the same stream.
    """
    if dim < 2:
        raise ValueError("dimension must be >= 2")
    rng = np.random.default_rng(int(rng_seed) & ((1 << 64) - 1))
    for attempt in range(2):
        G = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        W = G @ G.conj().T
        W = 0.5 * (W + W.conj().T)
        try:
            return validate_density_matrix(W / np.trace(W).real, eps_rank=eps_rank)
        except RankDeficientError:
            if attempt == 1:
                raise
