"""Spectral measure of ``K`` seen from the normalized seed.

``K`` is diagonal on ``E_ab`` with eigenvalue ``w_ab``, and the normalized
eigenoperators are ``E_ab / sqrt(w_ab)``.  The measure of a normalized seed
``v0`` therefore has an atom at each distinct ``w_ab`` with mass
``w_ab |v0_ab|^2``.  Its moments drive the Hankel/Cholesky route to the
Jacobi matrix, and its Gauss quadrature of ``1/lambda^2`` reproduces the
Galerkin truncated QFI.
"""

from dataclasses import dataclass

import mpmath
import numpy as np
from scipy.linalg import eigh_tridiagonal, solve_triangular

from .exceptions import (
    HankelIllConditionedError,
    InsufficientAtomsError,
    NodeAtZeroError,
    NormalizationFailureError,
)
from .lanczos import TridiagonalMatrix
from .operator_space import LiouvilleVector, group_values

MERGE_RTOL = 1e-12
DROP_WEIGHT = 1e-16
N_HANKEL_MAX = 12


@dataclass(frozen=True)
class SpectralMeasure:
    """Finite atomic probability measure, atoms sorted ascending in lambda."""

    lambdas: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float).ravel()
        mu = np.asarray(self.weights, dtype=float).ravel()
        if lam.shape != mu.shape:
            raise ValueError("lambdas and weights must have the same length")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", mu)

    @classmethod
    def from_atoms(cls, lambdas, weights, merge_rtol=MERGE_RTOL, drop=DROP_WEIGHT):
        """Sort, merge nearly equal locations, drop tiny atoms and renormalize."""
        lam = np.asarray(lambdas, dtype=float).ravel()
        mu = np.asarray(weights, dtype=float).ravel()
        centers, labels = group_values(lam, merge_rtol)
        merged = np.bincount(labels, weights=mu, minlength=centers.size)
        keep = merged > drop
        if not np.any(keep):
            raise NormalizationFailureError("measure has no atoms above the drop threshold")
        return cls(centers[keep], merged[keep] / merged[keep].sum())

    @property
    def atoms(self):
        return list(zip(self.lambdas.tolist(), self.weights.tolist()))

    @property
    def size(self):
        return self.lambdas.size

    def integrate(self, f):
        return float(np.sum(self.weights * f(self.lambdas)))


@dataclass(frozen=True)
class HankelMoments:
    mu: np.ndarray
    M: np.ndarray
    cond_estimate: float


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class Gapped:
    lambda_min: float
    lambda_max: float
    gamma: float
    kind: str = "gapped"


@dataclass(frozen=True)
class HardEdge:
    alpha_hat: float
    fit_window: tuple
    fit_residual: float
    kind: str = "hard-edge"


def spectral_measure(ctx, v0):
    """Atomic spectral measure of ``K`` with respect to a normalized seed."""
    m = v0.matrix if isinstance(v0, LiouvilleVector) else np.asarray(v0)
    w = ctx.weights.ravel()
    mass = w * np.abs(m.ravel()) ** 2
    total = mass.sum()
    if abs(total - 1.0) > 1e-8:
        raise NormalizationFailureError(
            f"seed has weighted norm^2 {total:.12g}; a normalized v0 is required"
        )
    return SpectralMeasure.from_atoms(w, mass)


def moments(measure, k_max, precision=None):
    """Power moments ``mu_k = sum_j mu_j lambda_j^k`` for ``k = 0 .. k_max``.

    With ``precision`` (decimal digits) the sums are accumulated in mpmath
    and returned as a list of ``mpf``, for use with the extended-precision
    Hankel route.
    """
    k_max = int(k_max)
    if precision is None:
        k = np.arange(k_max + 1)
        return (measure.lambdas[None, :] ** k[:, None]) @ measure.weights
    with mpmath.workdps(precision):
        lam = [mpmath.mpf(float(x)) for x in measure.lambdas]
        out = [mpmath.fsum(measure.weights.tolist())]
        powers = [mpmath.mpf(float(w)) for w in measure.weights]
        for _ in range(k_max):
            powers = [p * x for p, x in zip(powers, lam)]
            out.append(mpmath.fsum(powers))
    return out


def hankel_moments(mu, n):
    mu = np.asarray([float(m) for m in mu])
    if mu.size < 2 * n - 1:
        raise ValueError(f"need {2 * n - 1} moments for an {n}x{n} Hankel matrix, got {mu.size}")
    idx = np.add.outer(np.arange(n), np.arange(n))
    M = mu[idx]
    return HankelMoments(mu=mu[: 2 * n - 1], M=M, cond_estimate=float(np.linalg.cond(M)))


def _hankel_cholesky(mu, n):
    """Upper Cholesky factor of M_n, refusing numerically indefinite input."""
    H = hankel_moments(mu, n)
    M = H.M
    R = np.zeros((n, n))
    floor = 1e-13 * mu[0]
    for j in range(n):
        s = M[j, j] - R[:j, j] @ R[:j, j]
        if not s > floor:
            raise HankelIllConditionedError(
                f"Hankel pivot {j} is {s:.3e} (<= {floor:.1e}); cond(M_{n}) ~ {H.cond_estimate:.2e}",
                cond_estimate=H.cond_estimate,
            )
        R[j, j] = np.sqrt(s)
        R[j, j + 1 :] = (M[j, j + 1 :] - R[:j, j] @ R[:j, j + 1 :]) / R[j, j]
    return R


def _hankel_cholesky_mp(mu, n):
    """Extended Cholesky of the ``n x (n+1)`` Hankel block, in mpmath.

    The pivot floor is ``500 eps`` relative to ``mu_0`` at the working
    precision (``1e-13`` is the same rule in double precision).
    """
    floor = 500 * mpmath.eps * mu[0]
    R = [[mpmath.mpf(0)] * (n + 1) for _ in range(n)]
    for j in range(n):
        s = mu[2 * j] - mpmath.fsum(R[i][j] ** 2 for i in range(j))
        if not s > floor:
            cond = float(np.linalg.cond(hankel_moments(mu, n).M))
            raise HankelIllConditionedError(
                f"Hankel pivot {j} is {mpmath.nstr(s, 3)} at {mpmath.mp.dps} digits",
                cond_estimate=cond,
            )
        R[j][j] = mpmath.sqrt(s)
        for c in range(j + 1, n + 1):
            R[j][c] = (mu[j + c] - mpmath.fsum(R[i][j] * R[i][c] for i in range(j))) / R[j][j]
    return R


def lanczos_from_moments(mu, n, n_max=N_HANKEL_MAX, precision=None):
    """Jacobi matrix of size ``n`` from power moments via Hankel Cholesky.

    With ``M_n = R^T R`` and ``r`` the extra column ``R^{-T} M_n[:, n]``, the
    recurrence coefficients are ``a_k = r_{k,k+1}/r_{k,k} - r_{k-1,k}/r_{k-1,k-1}``
    and ``b_{k+1} = r_{k+1,k+1}/r_{k,k}``.  Needs ``mu_0 .. mu_{2n-1}``.

    The moment-to-Jacobi map has a condition number of order ``cond(M_n)``,
    so in double precision the last levels of a strongly clustered measure
    lose several digits.  ``precision`` (decimal digits) runs the
    factorization in mpmath; pass moments from ``moments(..., precision=)``
    to benefit fully.
    """
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > n_max:
        raise HankelIllConditionedError(
            f"Hankel route is capped at n={n_max} (requested {n})"
        )
    if len(mu) < 2 * n:
        raise ValueError(f"need moments mu_0..mu_{2 * n - 1}, got {len(mu)}")
    if precision is None:
        mu = np.asarray(mu, dtype=float)
        R = _hankel_cholesky(mu, n)
        extra = solve_triangular(R, mu[n : 2 * n], trans="T")
        Rx = np.zeros((n, n + 1))
        Rx[:, :n] = R
        Rx[:, n] = extra
    else:
        with mpmath.workdps(precision):
            R = _hankel_cholesky_mp([mpmath.mpf(m) for m in mu[: 2 * n]], n)
            ratio = np.array([float(R[k][k + 1] / R[k][k]) for k in range(n)])
            bs = np.array([float(R[k + 1][k + 1] / R[k][k]) for k in range(n - 1)])
            diffs = np.array([float(R[k][k + 1] / R[k][k] - R[k - 1][k] / R[k - 1][k - 1]) for k in range(1, n)])
        a = np.concatenate([ratio[:1], diffs])
        return TridiagonalMatrix(a, bs)
    d = np.diag(Rx[:, :n])
    ratio = np.array([Rx[k, k + 1] / d[k] for k in range(n)])
    a = ratio.copy()
    a[1:] -= ratio[:-1]
    b = d[1:] / d[:-1]
    return TridiagonalMatrix(a, b)


def gauss_quadrature(T):
    """Nodes and weights of the Gauss rule encoded by a Jacobi matrix."""
    if T.n == 1:
        return QuadratureRule(nodes=T.a.copy(), weights=np.ones(1))
    nodes, vecs = eigh_tridiagonal(T.a, T.b)
    weights = vecs[0] ** 2
    return QuadratureRule(nodes=nodes, weights=weights / weights.sum())


def qfi_by_quadrature(rule, seed_norm):
    """Gauss quadrature of ``|O0|^2 / lambda^2``."""
    if np.min(rule.nodes) < 1e-14:
        raise NodeAtZeroError(f"quadrature node {np.min(rule.nodes):.3e} sits on the pole at 0")
    return float(seed_norm**2 * np.sum(rule.weights / rule.nodes**2))


def galerkin_hankel_form(mu, n):
    """``e0^T T_n^{-2} e0`` from moments: ``W^T M1^{-1} M M1^{-1} W``.

    ``M`` is the Hankel matrix of ``mu_0 .. mu_{2n-2}``, ``M1`` its shift
    (``mu_1 .. mu_{2n-1}``) and ``W = (mu_0 .. mu_{n-1})``.
    """
    mu = np.asarray(mu, dtype=float)
    idx = np.add.outer(np.arange(n), np.arange(n))
    M, M1, W = mu[idx], mu[idx + 1], mu[:n]
    c = np.linalg.solve(M1, W)
    return float(c @ M @ c)


def projection_hankel_form(mu, inverse_moment, n):
    """``sum_{k<n} (int P_k / lambda)^2`` from moments: ``G^T M^{-1} G``.

    ``G = (mu_{-1}, mu_0, .., mu_{n-2})`` needs the first inverse moment.
    """
    mu = np.asarray(mu, dtype=float)
    idx = np.add.outer(np.arange(n), np.arange(n))
    M = mu[idx]
    G = np.concatenate([[inverse_moment], mu[: n - 1]])
    return float(G @ np.linalg.solve(M, G))


def gapped_rate(ratio):
    """Closed-form exponential rate for a support ``[lambda_min, lambda_max]``.

    ``ln[(1 + s) / (1 - s)]`` with ``s = sqrt(1 - ratio^2)``; infinite for a
    degenerate support (``ratio == 1``).
    """
    ratio = float(ratio)
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    s = np.sqrt(max(1.0 - ratio * ratio, 0.0))
    if s == 0.0:
        return float("inf")
    return float(np.log((1.0 + s) / (1.0 - s)))


def chebyshev_rate(ratio):
    """Bernstein-ellipse rate ``ln[(sqrt(k) + 1) / (sqrt(k) - 1)]``, ``k = 1/ratio``.

    Asymptotic decay rate of ``|l_k|`` for ``1/lambda`` on ``[lambda_min,
    lambda_max]``; the relative QFI error decays at twice this rate.
    """
    ratio = float(ratio)
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    if ratio == 1.0:
        return float("inf")
    rk = np.sqrt(1.0 / ratio)
    return float(np.log((rk + 1.0) / (rk - 1.0)))


def default_gap_threshold(measure):
    """Smallest resolvable gap: ``max(1e-3 lambda_max, mean atom spacing)``.

    A gap narrower than the typical spacing between atoms cannot be told
    apart from support reaching zero at this resolution.
    """
    lam = measure.lambdas
    spacing = (lam[-1] - lam[0]) / (lam.size - 1) if lam.size > 1 else 0.0
    return max(1e-3 * lam[-1], spacing)


def classify_measure(measure, gap_threshold=None, fit_decades=1.5, min_atoms=10):
    """Classify a measure as gapped (exponential) or hard-edge (algebraic).

    ``gap_threshold`` is absolute; None selects :func:`default_gap_threshold`.
    Hard-edge measures get ``alpha_hat`` from the log-log slope of the
    cumulative distribution over the lowest ``fit_decades`` of lambda, using
    ``mu([0, lambda]) ~ lambda^(alpha + 1)``.
    """
    lam, mu = measure.lambdas, measure.weights
    lmin, lmax = float(lam[0]), float(lam[-1])
    threshold = default_gap_threshold(measure) if gap_threshold is None else float(gap_threshold)
    if lam.size == 1 or lmin >= threshold:
        return Gapped(lmin, lmax, gapped_rate(lmin / lmax))
    if lam.size < min_atoms:
        raise InsufficientAtomsError(
            f"hard-edge fit needs at least {min_atoms} atoms, measure has {lam.size}"
        )
    upper = lmin * 10.0**fit_decades
    sel = lam <= upper
    if sel.sum() < 3:
        sel = np.zeros(lam.size, dtype=bool)
        sel[:3] = True
    x = np.log(lam[sel])
    y = np.log(np.cumsum(mu)[sel])
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    return HardEdge(
        alpha_hat=float(slope - 1.0),
        fit_window=(float(lam[sel][0]), float(lam[sel][-1])),
        fit_residual=float(np.sqrt(np.mean(resid**2))),
    )
