"""Density-matrix-weighted geometry of operator (Liouville) space.

Everything downstream works in the eigenbasis of the density matrix.  There
the superoperator ``K(Q) = (rho Q + Q rho) / 2`` is diagonal,
``K(E_ab) = w_ab E_ab`` with ``w_ab = (rho_a + rho_b) / 2``, and the weighted
inner product ``<A, B> = Tr[rho (A^dag B + B A^dag)] / 2`` becomes
``sum_ab w_ab conj(A_ab) B_ab``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_same_dim, check_square, hermitian_part
from .exceptions import (
    DimensionMismatchError,
    NonTracelessDerivativeError,
    NotPositiveError,
    NotTracePreservingError,
    NotUnitTraceError,
    RankDeficientError,
    ZeroSeedError,
)

EPS_RANK = 1e-12
TRACE_TOL = 1e-12
ZERO_SEED_TOL = 1e-14


def _readonly(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DensityMatrix:
    """Validated full-rank density matrix with its cached eigendecomposition.

    ``eigenvalues`` are sorted in descending order and ``eigenvectors`` holds
    the matching columns ``|a>``.  Build instances with
    :func:`validate_density_matrix`.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.matrix.shape[0]

    def to_eigenbasis(self, op):
        """Matrix elements ``<a|op|b>``."""
        U = self.eigenvectors
        return U.conj().T @ op @ U

    def from_eigenbasis(self, op_ab):
        U = self.eigenvectors
        return U @ op_ab @ U.conj().T


@dataclass(frozen=True)
class LiouvilleVector:
    """An operator viewed as a vector of the weighted space.

    ``matrix`` is stored in the eigenbasis of the density matrix of the space
    it belongs to.
    """

    matrix: np.ndarray
    hermitian: bool = field(default=None)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError(f"operator must be square, got {m.shape}")
        object.__setattr__(self, "matrix", _readonly(m))
        if self.hermitian is None:
            scale = max(np.max(np.abs(m)), 1e-300)
            herm = np.max(np.abs(m - m.conj().T)) <= 1e-12 * scale
            object.__setattr__(self, "hermitian", bool(herm))

    @property
    def dim(self):
        return self.matrix.shape[0]


@dataclass(frozen=True)
class WeightedSpace:
    """A density matrix paired with its Liouville weights ``w_ab``."""

    rho: DensityMatrix
    weights: np.ndarray

    @property
    def dim(self):
        return self.rho.dim

    def vector(self, op_ab):
        """Wrap an eigenbasis matrix as a :class:`LiouvilleVector`."""
        return LiouvilleVector(op_ab)

    def lift(self, op):
        """Rotate a computational-basis operator into the eigenbasis."""
        op = check_square(op, "operator")
        check_same_dim(self.dim, op, names=["operator"])
        return LiouvilleVector(self.rho.to_eigenbasis(op))


def _sorted_eigh(matrix):
    vals, vecs = np.linalg.eigh(matrix)
    # fix the phase: largest-modulus component of each column real positive
    idx = np.argmax(np.abs(vecs), axis=0)
    phases = vecs[idx, np.arange(vecs.shape[1])]
    vecs = vecs * (np.abs(phases) / phases)[None, :]
    # descending eigenvalues; ties broken by lexicographic eigenvector order
    keys = [tuple(np.round(np.abs(vecs[:, j]), 12)) for j in range(vecs.shape[1])]
    order = sorted(range(len(vals)), key=lambda j: (-np.round(vals[j], 14), keys[j]))
    return vals[order], vecs[:, order]


def validate_density_matrix(raw, eps_rank=EPS_RANK):
    """Validate a raw matrix as a full-rank density matrix.

    The input is symmetrized, checked for unit trace and positivity, and
    diagonalized once.  A smallest eigenvalue below ``eps_rank`` raises
    :class:`RankDeficientError` rather than being regularized.
    """
    M = hermitian_part(raw, "density matrix")
    tr = np.trace(M)
    if abs(tr - 1.0) > TRACE_TOL:
        raise NotUnitTraceError(f"trace is {tr.real:.15g}, expected 1 within {TRACE_TOL:g}")
    vals, vecs = _sorted_eigh(M)
    lowest = vals[-1]
    if lowest < -eps_rank:
        raise NotPositiveError(f"negative eigenvalue {lowest:.3e}")
    if lowest < eps_rank:
        raise RankDeficientError(
            f"smallest eigenvalue {lowest:.3e} is below eps_rank={eps_rank:g}; "
            "the weighted-space QFI formulas require a full-rank state"
        )
    return DensityMatrix(matrix=_readonly(M), eigenvalues=_readonly(vals), eigenvectors=_readonly(vecs))


def build_weighted_space(rho):
    p = rho.eigenvalues
    w = 0.5 * (p[:, None] + p[None, :])
    return WeightedSpace(rho=rho, weights=_readonly(w))


def group_values(values, rtol=1e-12):
    """Group nearly equal values.

    Returns ``(unique, labels)`` with ``unique`` ascending and
    ``values[i]`` belonging to group ``labels[i]``.  Consecutive sorted values
    closer than ``rtol`` (relative) share a group.
    """
    values = np.asarray(values, dtype=float).ravel()
    order = np.argsort(values, kind="stable")
    s = values[order]
    new = np.empty(s.size, dtype=bool)
    new[:1] = True
    new[1:] = np.diff(s) > rtol * np.abs(s[1:])
    labels_sorted = np.cumsum(new) - 1
    labels = np.empty(values.size, dtype=np.int64)
    labels[order] = labels_sorted
    sums = np.bincount(labels, weights=values)
    counts = np.bincount(labels)
    return sums / counts, labels


def _as_matrix(ctx, vec, name):
    m = vec.matrix if isinstance(vec, LiouvilleVector) else np.asarray(vec)
    if m.shape != (ctx.dim, ctx.dim):
        raise DimensionMismatchError(f"{name} has shape {m.shape}, space has dim {ctx.dim}")
    return m


def inner_product(ctx, A, B):
    """Weighted inner product ``sum_ab w_ab conj(A_ab) B_ab`` of eigenbasis operators."""
    a = _as_matrix(ctx, A, "A")
    b = _as_matrix(ctx, B, "B")
    return complex(np.sum(ctx.weights * a.conj() * b))


def weighted_norm(ctx, A):
    a = _as_matrix(ctx, A, "A")
    return float(np.sqrt(np.sum(ctx.weights * (a.real**2 + a.imag**2))))


def apply_K(ctx, Q):
    """Apply ``K(Q) = {rho, Q} / 2``; entrywise ``w_ab Q_ab`` in the eigenbasis."""
    q = _as_matrix(ctx, Q, "Q")
    herm = Q.hermitian if isinstance(Q, LiouvilleVector) else None
    return LiouvilleVector(ctx.weights * q, hermitian=herm)


def unitary_seed(ctx, H):
    """Seed ``O0 = i[rho, H]`` in the eigenbasis, with its weighted norm.

    Raises :class:`ZeroSeedError` when ``[rho, H]`` vanishes (zero QFI).
    """
    H = hermitian_part(H, "Hamiltonian")
    check_same_dim(ctx.dim, H, names=["Hamiltonian"])
    p = ctx.rho.eigenvalues
    H_ab = ctx.rho.to_eigenbasis(H)
    O0 = 1j * (p[:, None] - p[None, :]) * H_ab
    O0 = 0.5 * (O0 + O0.conj().T)
    norm = weighted_norm(ctx, O0)
    if norm < ZERO_SEED_TOL:
        raise ZeroSeedError(f"|i[rho,H]|_rho = {norm:.3e}: rho and H commute, QFI is 0")
    return LiouvilleVector(O0, hermitian=True), norm


def kraus_seed(rho0, kraus, dkraus, eps_rank=EPS_RANK):
    """Seed ``d rho_theta / d theta`` for a parametrized Kraus channel.

    Parameters
    ----------
    rho0 : DensityMatrix
        Input state.
    kraus, dkraus : sequence of (N, N) arrays
        Kraus operators ``K_k(theta)`` and their derivatives ``K_k'(theta)``.

    Returns
    -------
    rho_theta : DensityMatrix
        Output state ``sum_k K_k rho0 K_k^dag``.
    O0 : LiouvilleVector
        The derivative, in the eigenbasis of ``rho_theta``.
    norm : float
        Weighted norm of ``O0`` in the ``rho_theta`` space.
    """
    kraus = [check_square(k, "Kraus operator") for k in kraus]
    dkraus = [check_square(k, "Kraus derivative") for k in dkraus]
    if len(kraus) != len(dkraus) or not kraus:
        raise DimensionMismatchError("kraus and dkraus must be non-empty and of equal length")
    N = rho0.dim
    check_same_dim(N, *kraus, *dkraus)

    completeness = sum(k.conj().T @ k for k in kraus)
    defect = np.max(np.abs(completeness - np.eye(N)))
    if defect > 1e-10:
        raise NotTracePreservingError(f"max|sum K^dag K - I| = {defect:.3e}")

    r0 = rho0.matrix
    rho_theta = sum(k @ r0 @ k.conj().T for k in kraus)
    rho_theta = validate_density_matrix(rho_theta, eps_rank=eps_rank)

    O0 = sum(dk @ r0 @ k.conj().T + k @ r0 @ dk.conj().T for k, dk in zip(kraus, dkraus))
    O0 = 0.5 * (O0 + O0.conj().T)
    tr = np.trace(O0)
    if abs(tr) > 1e-10:
        raise NonTracelessDerivativeError(f"Tr(d rho/d theta) = {tr:.3e}, expected 0")

    ctx = build_weighted_space(rho_theta)
    O0_ab = rho_theta.to_eigenbasis(O0)
    O0_ab = 0.5 * (O0_ab + O0_ab.conj().T)
    norm = weighted_norm(ctx, O0_ab)
    if norm < ZERO_SEED_TOL:
        raise ZeroSeedError(f"|d rho/d theta|_rho = {norm:.3e}: channel does not depend on theta")
    return rho_theta, LiouvilleVector(O0_ab, hermitian=True), norm
