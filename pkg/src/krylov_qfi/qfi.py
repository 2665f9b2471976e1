"""Exact and Krylov-truncated quantum Fisher information.

Two truncated sequences appear here and they are *not* the same thing:

``f_series`` (projection)
    ``F^(n) = sum_{k<n} l_k^2``, the squared weighted norm of the orthogonal
    projection of the SLD onto the first ``n`` Krylov levels.  The tail
    identity ``1 - F^(n)/F = sum_{k>=n} p_k`` and the bound
    ``1 - F^(n)/F <= D/n`` hold for this sequence exactly.

``f_galerkin``
    ``|O0|^2 e0^T T_n^{-2} e0``, the norm of the Galerkin solution of the
    projected linear system, equal to the n-point Gauss quadrature of
    ``1/lambda^2``.  It is also a monotone lower bound that reaches ``F`` at
    ``n = d0``, but it converges more slowly than the projection.
"""

from dataclasses import dataclass, replace

import numpy as np

from ._validation import check_same_dim, hermitian_part
from .exceptions import IdentityViolationError, IncompleteKrylovError, ZeroVectorError
from .lanczos import fn_series, run_lanczos, tridiag_solve_e0
from .operator_space import LiouvilleVector, inner_product, unitary_seed

TAIL_TOL = 1e-9


@dataclass(frozen=True)
class QfiReport:
    f_exact: float
    f_series: np.ndarray
    ell: np.ndarray
    p: np.ndarray
    depth: float
    rel_error: np.ndarray
    tail: np.ndarray
    bound_margin: np.ndarray
    f_galerkin: np.ndarray | None = None
    d0: int | None = None
    kind: str = "qfi"

    @property
    def n(self):
        return self.f_series.size

    def to_dict(self):
        def arr(x):
            return None if x is None else [float(v) for v in x]

        return {
            "kind": self.kind,
            "f_exact": float(self.f_exact),
            "d0": self.d0,
            "depth": float(self.depth),
            "f_series": arr(self.f_series),
            "f_galerkin": arr(self.f_galerkin),
            "ell": arr(self.ell),
            "p": arr(self.p),
            "rel_error": arr(self.rel_error),
            "tail": arr(self.tail),
            "bound_margin": arr(self.bound_margin),
        }

    @classmethod
    def from_dict(cls, d):
        def arr(x):
            return None if x is None else np.asarray(x, dtype=float)

        return cls(
            f_exact=d["f_exact"],
            f_series=arr(d["f_series"]),
            ell=arr(d["ell"]),
            p=arr(d["p"]),
            depth=d["depth"],
            rel_error=arr(d["rel_error"]),
            tail=arr(d["tail"]),
            bound_margin=arr(d["bound_margin"]),
            f_galerkin=arr(d["f_galerkin"]),
            d0=d["d0"],
            kind=d["kind"],
        )


def _eigenbasis_hamiltonian(ctx, H):
    H = hermitian_part(H, "Hamiltonian")
    check_same_dim(ctx.dim, H, names=["Hamiltonian"])
    return ctx.rho.to_eigenbasis(H)


def exact_qfi(ctx, H):
    """Closed-form QFI ``sum_ab (rho_a - rho_b)^2 |H_ab|^2 / w_ab``."""
    p = ctx.rho.eigenvalues
    H_ab = _eigenbasis_hamiltonian(ctx, H)
    delta = p[:, None] - p[None, :]
    return float(np.sum(delta**2 * np.abs(H_ab) ** 2 / ctx.weights))


def exact_sld(ctx, H):
    """SLD ``L_ab = i (rho_a - rho_b) H_ab / w_ab`` in the eigenbasis."""
    p = ctx.rho.eigenvalues
    H_ab = _eigenbasis_hamiltonian(ctx, H)
    L = 1j * (p[:, None] - p[None, :]) * H_ab / ctx.weights
    return LiouvilleVector(0.5 * (L + L.conj().T), hermitian=True)


def resolvent_solution(ctx, seed):
    """``K^{-1} O0`` for an arbitrary eigenbasis seed (entrywise division)."""
    m = seed.matrix if isinstance(seed, LiouvilleVector) else np.asarray(seed)
    return LiouvilleVector(m / ctx.weights)


def resolvent_moment(ctx, seed):
    """``<K^{-1} O0, K^{-1} O0> = sum_ab |O0_ab|^2 / w_ab``.

    This is the QFI whenever ``O0`` is the derivative of the state; for an
    arbitrary Hermitian seed it is only a resolvent moment.
    """
    m = seed.matrix if isinstance(seed, LiouvilleVector) else np.asarray(seed)
    return float(np.sum((m.real**2 + m.imag**2) / ctx.weights))


def krylov_coefficients(kres):
    """SLD coefficients ``l_k = |O0| (T_{d0}^{-1} e_0)_k`` in the Krylov basis.

    Requires a run that reached breakdown; otherwise the Galerkin solution of
    the truncated system is not the SLD and :class:`IncompleteKrylovError` is
    raised (use :func:`projected_coefficients` instead).
    """
    if kres.d0 is None:
        raise IncompleteKrylovError(
            f"Lanczos stopped at n={kres.n} without breakdown; coefficients would be approximate"
        )
    return kres.seed_norm * tridiag_solve_e0(kres.tridiag)


def projected_coefficients(ctx, kres, L):
    """``l_k = <v_k, L>`` from a stored basis and a known SLD ``L``."""
    if kres.basis is None:
        raise ValueError("projected_coefficients needs a KrylovResult with a stored basis")
    Lm = L.matrix if isinstance(L, LiouvilleVector) else np.asarray(L)
    vals = np.array([inner_product(ctx, v, Lm) for v in kres.basis])
    return vals.real


def krylov_distribution(ell):
    """Normalized weights ``p_k = l_k^2 / sum l^2`` and mean depth ``D = sum k p_k``."""
    ell = np.asarray(ell)
    sq = np.abs(ell) ** 2
    total = sq.sum()
    if not total > 0:
        raise ZeroVectorError("all Krylov coefficients vanish")
    p = sq / total
    depth = float(np.arange(p.size) @ p)
    return p, depth


def projection_series(ell):
    """``F^(n) = sum_{k<n} l_k^2`` for ``n = 1 .. len(ell)``."""
    return np.cumsum(np.abs(np.asarray(ell)) ** 2)


def error_report(f_series, ell, f_exact, f_galerkin=None, d0=None, kind="qfi", complete=True):
    """Assemble a :class:`QfiReport` and check the exact tail identity.

    ``rel_error(n) = 1 - F^(n)/F`` must equal the tail weight
    ``sum_{k>=n} p_k`` to 1e-9; a violation raises
    :class:`IdentityViolationError` (a sign of upstream orthogonality loss).
    The margin ``D/n - rel_error(n)`` of the depth bound is recorded, not
    enforced.  With ``complete=False`` (``ell`` does not span the whole
    Krylov space) the distribution, depth and tail are unknown and left NaN.
    """
    if not f_exact > 0:
        raise ValueError(f"f_exact must be positive, got {f_exact}")
    f_series = np.asarray(f_series, dtype=float)
    ell = np.asarray(ell, dtype=float)
    n = np.arange(1, f_series.size + 1)
    rel_error = 1.0 - f_series / f_exact

    if complete:
        p, depth = krylov_distribution(ell)
        sq = ell**2 / f_exact
        tail_all = np.cumsum(sq[::-1])[::-1]
        tail = np.append(tail_all, 0.0)[n]
        worst = float(np.max(np.abs(rel_error - tail))) if n.size else 0.0
        if worst > TAIL_TOL:
            raise IdentityViolationError(
                f"1 - F^(n)/F deviates from the Krylov tail weight by {worst:.3e} (> {TAIL_TOL:g})"
            )
        bound_margin = depth / n - rel_error
    else:
        p = np.full(ell.size, np.nan)
        depth = float("nan")
        tail = np.full(n.size, np.nan)
        bound_margin = np.full(n.size, np.nan)

    return QfiReport(
        f_exact=float(f_exact),
        f_series=f_series,
        ell=ell,
        p=p,
        depth=depth,
        rel_error=rel_error,
        tail=tail,
        bound_margin=bound_margin,
        f_galerkin=None if f_galerkin is None else np.asarray(f_galerkin, dtype=float),
        d0=d0,
        kind=kind,
    )


def seed_report(ctx, seed, max_n=None, kind="qfi", f_exact=None, **lanczos_opts):
    """Full Krylov analysis for a seed ``O0`` in the space ``ctx``.

    Runs Lanczos (to breakdown when ``max_n`` is None), extracts the SLD
    coefficients and assembles the report.  ``f_exact`` defaults to the
    resolvent moment of the seed.
    """
    if max_n is None:
        max_n = ctx.dim * ctx.dim
    if f_exact is None:
        f_exact = resolvent_moment(ctx, seed)
    store = lanczos_opts.pop("store_basis", False)
    # the basis is needed for projected coefficients when Lanczos does not saturate
    kres = run_lanczos(ctx, seed, max_n, store_basis=True, **lanczos_opts)
    f_gal = fn_series(kres.tridiag, kres.seed_norm)
    if kres.saturated:
        ell = krylov_coefficients(kres)
        complete = True
    else:
        ell = projected_coefficients(ctx, kres, resolvent_solution(ctx, seed))
        complete = False
    report = error_report(
        projection_series(ell), ell, f_exact, f_galerkin=f_gal, d0=kres.d0, kind=kind, complete=complete
    )
    if not store:
        kres = replace(kres, basis=None, residual=None)
    return report, kres


def unitary_report(ctx, H, max_n=None, **lanczos_opts):
    """:func:`seed_report` for the unitary seed ``i[rho, H]`` against the closed-form QFI."""
    seed, _ = unitary_seed(ctx, H)
    return seed_report(ctx, seed, max_n=max_n, kind="qfi", f_exact=exact_qfi(ctx, H), **lanczos_opts)
