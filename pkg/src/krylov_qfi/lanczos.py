"""Hermitian Lanczos recursion for the weighted superoperator ``K``.

In the density-matrix eigenbasis ``K`` acts entrywise, so a Liouville vector
is handled as a flat array of ``N*N`` complex components with metric
``w_ab``.  The recursion builds the Jacobi (tridiagonal) matrix ``T_n``, the
orthonormal Krylov basis, and detects the breakdown index ``d0``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import (
    NonConvergedOrthogonalityError,
    SingularTridiagonalError,
    ZeroSeedError,
)
from .operator_space import LiouvilleVector, group_values

ORTHO_LIMIT = 1e-8


@dataclass(frozen=True)
class TridiagonalMatrix:
    """Symmetric tridiagonal matrix: diagonal ``a`` and off-diagonal ``b``.

    ``b[k-1]`` couples levels ``k-1`` and ``k``, i.e. it is the Lanczos
    coefficient ``b_k`` for ``k = 1 .. n-1``.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        if b.size != max(a.size - 1, 0):
            raise ValueError(f"off-diagonal must have length {a.size - 1}, got {b.size}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.size

    def leading(self, m):
        """The leading ``m x m`` block."""
        return TridiagonalMatrix(self.a[:m], self.b[: max(m - 1, 0)])

    def dense(self):
        return np.diag(self.a) + np.diag(self.b, 1) + np.diag(self.b, -1)


@dataclass(frozen=True)
class KrylovResult:
    tridiag: TridiagonalMatrix
    seed_norm: float
    d0: int | None = None
    basis: np.ndarray | None = None  # shape (n, N, N), eigenbasis components
    orthogonality_defect: float = float("nan")
    residual_norm: float = 0.0  # b_n in K V = V T + b_n v_n e_{n-1}^T
    residual: np.ndarray | None = None  # b_n v_n, only with a stored basis

    @property
    def n(self):
        return self.tridiag.n

    @property
    def saturated(self):
        return self.d0 is not None


def _seed_span_projector(weights, v0, rtol=1e-12):
    """Projector onto span{P_j v0}, P_j the spectral projectors of K.

    The exact Krylov space lies in this span.  Projecting each residual onto
    it removes round-off that would otherwise seed spurious directions inside
    degenerate eigenspaces of K (E_ab and E_ba share w_ab).
    """
    _, labels = group_values(weights, rtol)
    n_groups = labels.max() + 1
    wv = weights * v0.conj()
    den = np.bincount(labels, weights=weights * (v0.real**2 + v0.imag**2), minlength=n_groups)
    inv_den = np.divide(1.0, den, out=np.zeros_like(den), where=den > 0)

    def project(x):
        prod = wv * x
        num = np.bincount(labels, weights=prod.real, minlength=n_groups) + 1j * np.bincount(
            labels, weights=prod.imag, minlength=n_groups
        )
        return (num * inv_den)[labels] * v0

    return project


def run_lanczos(
    ctx,
    seed,
    max_n,
    store_basis=False,
    breakdown_rtol=1e-10,
    reorth="full",
    seed_span=True,
):
    """Run Lanczos on ``K`` from ``seed`` until breakdown or ``max_n`` levels.

    Parameters
    ----------
    ctx : WeightedSpace
    seed : LiouvilleVector or ndarray
        Unnormalized seed in the eigenbasis of ``ctx.rho``.
    max_n : int
        Maximum number of Krylov levels.
    store_basis : bool
        Keep the orthonormal vectors ``v_0 .. v_{n-1}`` in the result.
    breakdown_rtol : float
        Breakdown when ``b_{k+1} < breakdown_rtol * max(b_1..b_k, a_0)``.
    reorth : {"full", "none"}
        Full (two-pass classical Gram-Schmidt) reorthogonalization or none.
    seed_span : bool
        Restrict residuals to the span of the seed's spectral components.
    """
    if reorth not in ("full", "none"):
        raise ValueError(f"reorth must be 'full' or 'none', got {reorth!r}")
    max_n = int(max_n)
    if max_n < 1:
        raise ValueError("max_n must be >= 1")

    mat = seed.matrix if isinstance(seed, LiouvilleVector) else np.asarray(seed, dtype=complex)
    N = ctx.dim
    if mat.shape != (N, N):
        raise ValueError(f"seed has shape {mat.shape}, space has dim {N}")
    hermitian = seed.hermitian if isinstance(seed, LiouvilleVector) else LiouvilleVector(mat).hermitian

    w = ctx.weights.ravel()
    x = np.array(mat, dtype=np.complex128).ravel()
    seed_norm = float(np.sqrt(np.sum(w * (x.real**2 + x.imag**2))))
    if seed_norm <= 1e-14:
        raise ZeroSeedError(f"seed norm {seed_norm:.3e} is zero")
    v = x / seed_norm

    project = _seed_span_projector(w, v) if seed_span else None
    keep_all = reorth == "full" or store_basis
    V = np.empty((max_n, w.size), dtype=np.complex128) if keep_all else None

    def wdot(rows, vec):
        return (rows.conj() * w) @ vec

    a, b = [], []
    v_prev = None
    d0 = None
    r = None
    b_next = 0.0
    for k in range(max_n):
        if keep_all:
            V[k] = v
        Kv = w * v
        a_k = float(np.real(np.vdot(v, w * Kv)))
        a.append(a_k)
        r = Kv - a_k * v
        if k > 0:
            r = r - b[-1] * v_prev
        if project is not None:
            r = project(r)
        if reorth == "full":
            for _ in range(2):
                r = r - wdot(V[: k + 1], r) @ V[: k + 1]
        if hermitian:
            rm = r.reshape(N, N)
            r = (0.5 * (rm + rm.conj().T)).ravel()
        b_next = float(np.sqrt(np.sum(w * (r.real**2 + r.imag**2))))
        scale = max(max(b, default=0.0), a[0])
        if b_next < breakdown_rtol * scale:
            d0 = k + 1
            break
        if k + 1 == max_n:
            break
        b.append(b_next)
        v_prev, v = v, r / b_next

    n = len(a)
    defect = float("nan")
    if keep_all:
        Vn = V[:n]
        gram = wdot(Vn, Vn.T)
        defect = float(np.max(np.abs(gram - np.eye(n))))
        if reorth == "full" and defect > ORTHO_LIMIT:
            raise NonConvergedOrthogonalityError(
                f"orthogonality defect {defect:.3e} exceeds {ORTHO_LIMIT:g} despite full reorthogonalization"
            )
    return KrylovResult(
        tridiag=TridiagonalMatrix(np.array(a), np.array(b)),
        seed_norm=seed_norm,
        d0=d0,
        basis=V[:n].reshape(n, N, N).copy() if store_basis else None,
        orthogonality_defect=defect,
        residual_norm=0.0 if d0 is not None else b_next,
        residual=(r.reshape(N, N).copy() if store_basis and d0 is None else None),
    )


def tridiag_solve_e0(T):
    """Solve ``T z = e_0`` by tridiagonal LU (Thomas algorithm).

    Raises :class:`SingularTridiagonalError` when a pivot falls below
    ``1e-14 * max|T|``.
    """
    a, b = T.a, T.b
    n = a.size
    tmax = max(np.max(np.abs(a)), np.max(np.abs(b)) if b.size else 0.0)
    tol = 1e-14 * tmax
    piv = np.empty(n)
    y = np.zeros(n)
    piv[0] = a[0]
    y[0] = 1.0
    if abs(piv[0]) <= tol:
        raise SingularTridiagonalError("zero pivot at index 0", index=0)
    for i in range(1, n):
        m = b[i - 1] / piv[i - 1]
        piv[i] = a[i] - m * b[i - 1]
        if abs(piv[i]) <= tol:
            raise SingularTridiagonalError(f"zero pivot at index {i}", index=i)
        y[i] = -m * y[i - 1]
    z = np.empty(n)
    z[-1] = y[-1] / piv[-1]
    for i in range(n - 2, -1, -1):
        z[i] = (y[i] - b[i] * z[i + 1]) / piv[i]
    return z


def fn_series(T, seed_norm):
    """Galerkin truncated QFI ``F^(m) = |O0|^2 |T_m^{-1} e_0|^2`` for ``m = 1..n``."""
    out = np.empty(T.n)
    for m in range(1, T.n + 1):
        try:
            z = tridiag_solve_e0(T.leading(m))
        except SingularTridiagonalError as exc:
            raise SingularTridiagonalError(f"leading block m={m} is singular: {exc}", index=m) from exc
        out[m - 1] = seed_norm**2 * float(z @ z)
    return out
