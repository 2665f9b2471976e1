"""Synthetic atomic measures and measure-space (Stieltjes) Lanczos.

These let the two convergence regimes be probed without a physical model:
a discretized arcsine law on ``[lambda_min, lambda_max]`` (gapped) and a
``lambda^alpha`` density on a geometric mesh reaching down to a tiny cutoff
(hard edge).  All quantities use a unit seed norm.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    BadAlphaError,
    BadIntervalError,
    BreakdownError,
    NonPositiveSeriesError,
    WindowTooShortError,
)
from .lanczos import TridiagonalMatrix
from .spectral import SpectralMeasure

HARD_EDGE_CUTOFF = 1e-8


@dataclass(frozen=True)
class DecayFit:
    model: str  # "exponential" or "algebraic"
    value: float  # rate (exponential) or exponent (algebraic)
    window: tuple
    residual: float


def make_hard_edge_measure(alpha, atoms, lam_max=1.0, cutoff=HARD_EDGE_CUTOFF):
    """Discretize ``d mu ~ lambda^alpha d lambda`` on ``(0, lam_max]``.

    Atoms sit on a geometric mesh from ``cutoff * lam_max`` to ``lam_max``;
    each carries ``lambda^alpha`` times the width of its log-centred cell.
    The lowest atom also absorbs the mass between 0 and its cell, so the
    cumulative distribution at the upper cell edges is an exact power
    ``lambda^(alpha+1)``.
    """
    if not alpha > -1:
        raise BadAlphaError(f"alpha must exceed -1, got {alpha}")
    atoms = int(atoms)
    if atoms < 100:
        raise ValueError(f"hard-edge measures need at least 100 atoms, got {atoms}")
    if not 0 < cutoff < 1:
        raise ValueError("cutoff must lie in (0, 1)")
    log_ratio = -np.log(cutoff) / (atoms - 1)
    lam = lam_max * np.exp(-log_ratio * np.arange(atoms - 1, -1, -1))
    half = np.exp(0.5 * log_ratio)
    width = lam * (half - 1.0 / half)
    # exact cell integrals are lam^alpha * width times one common factor
    factor = (half ** (alpha + 1) - half ** -(alpha + 1)) / ((alpha + 1) * (half - 1.0 / half))
    mu = lam**alpha * width
    mu[0] = (lam[0] * half) ** (alpha + 1) / ((alpha + 1) * factor)
    return SpectralMeasure(lam, mu / mu.sum())


def make_gapped_measure(lam_min, lam_max, atoms):
    """Discrete arcsine measure on Chebyshev-Lobatto points of ``[lam_min, lam_max]``.

    Endpoints are atoms; interior weights are equal and the two end weights
    are halved (the Gauss-Chebyshev-Lobatto rule).
    """
    if not (0 < lam_min < lam_max):
        raise BadIntervalError(f"need 0 < lam_min < lam_max, got [{lam_min}, {lam_max}]")
    atoms = int(atoms)
    if atoms < 2:
        raise ValueError("need at least 2 atoms")
    x = -np.cos(np.pi * np.arange(atoms) / (atoms - 1))
    lam = 0.5 * (lam_min + lam_max) + 0.5 * (lam_max - lam_min) * x
    lam[0], lam[-1] = lam_min, lam_max
    mu = np.ones(atoms)
    mu[0] = mu[-1] = 0.5
    return SpectralMeasure(lam, mu / mu.sum())


def stieltjes_lanczos(measure, n_max):
    """Orthonormal polynomials of an atomic measure by the Stieltjes procedure.

    Returns the Jacobi matrix of size ``n_max`` and the ``(n_max, M)`` table
    ``P[k, j] = P_k(lambda_j)``.  Each new polynomial is reorthogonalized
    once against all previous ones.
    """
    lam, mu = measure.lambdas, measure.weights
    n_max = int(n_max)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > lam.size:
        raise BreakdownError(f"{n_max} levels requested but the measure has {lam.size} atoms")
    P = np.zeros((n_max, lam.size))
    P[0] = 1.0
    a = np.zeros(n_max)
    b = np.zeros(max(n_max - 1, 0))
    for k in range(n_max):
        a[k] = np.sum(mu * lam * P[k] ** 2)
        if k == n_max - 1:
            break
        r = (lam - a[k]) * P[k]
        if k > 0:
            r -= b[k - 1] * P[k - 1]
        r -= ((P[: k + 1] * mu) @ r) @ P[: k + 1]
        nrm = np.sqrt(np.sum(mu * r * r))
        if nrm < 1e-13 * max(a[0], np.max(b[:k], initial=0.0)):
            raise BreakdownError(f"measure supports only {k + 1} orthogonal polynomials")
        b[k] = nrm
        P[k + 1] = r / nrm
    return TridiagonalMatrix(a, b), P


def inverse_second_moment(measure):
    return float(np.sum(measure.weights / measure.lambdas**2))


def coefficient_tail(measure, n_max):
    """Expansion coefficients of ``1/lambda`` and the relative truncation error.

    ``l_k = sum_j mu_j P_k(lambda_j) / lambda_j`` and
    ``rel_error(n) = 1 - sum_{k<n} l_k^2 / F`` for ``n = 1 .. n_max`` with
    ``F = sum_j mu_j / lambda_j^2``.  The error is accumulated as a tail sum
    (plus whatever lies beyond ``n_max``) so it stays accurate far below
    machine epsilon relative to ``F``.
    """
    _, P = stieltjes_lanczos(measure, n_max)
    F = inverse_second_moment(measure)
    ell = P @ (measure.weights / measure.lambdas)
    sq = ell**2 / F
    beyond = 1.0 - sq.sum()
    # what remains past n_max is only meaningful above round-off
    if beyond < 64 * np.finfo(float).eps * max(n_max, 1):
        beyond = 0.0
    tail = np.cumsum(sq[::-1])[::-1] + beyond
    rel_error = np.append(tail[1:], beyond)
    return ell, rel_error


def fit_decay(series, model, window, n=None):
    """Least-squares decay fit of a positive series on ``window = (n_lo, n_hi)``.

    ``series[i]`` belongs to level ``n[i]`` (default ``n = 1, 2, ...``).  The
    exponential model regresses ``log(series)`` on ``n``; the algebraic model
    regresses it on ``log(n)``.  The returned value is the negated slope.
    """
    series = np.asarray(series, dtype=float)
    n = np.arange(1, series.size + 1) if n is None else np.asarray(n, dtype=float)
    lo, hi = window
    sel = (n >= lo) & (n <= hi)
    if sel.sum() < 5:
        raise WindowTooShortError(f"window {window} holds {sel.sum()} points, need at least 5")
    y = series[sel]
    if np.any(y <= 0):
        raise NonPositiveSeriesError(f"series has non-positive values in window {window}")
    if model == "exponential":
        x = n[sel]
    elif model == "algebraic":
        x = np.log(n[sel])
    else:
        raise ValueError(f"model must be 'exponential' or 'algebraic', got {model!r}")
    ly = np.log(y)
    slope, icept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + icept)
    return DecayFit(
        model=model,
        value=float(-slope),
        window=(int(n[sel][0]), int(n[sel][-1])),
        residual=float(np.sqrt(np.mean(resid**2))),
    )
