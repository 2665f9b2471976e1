"""scikit-learn style front end.

:class:`KrylovQFI` wraps the functional pipeline (validate -> seed ->
Lanczos -> coefficients -> report) behind ``fit``/``predict`` so it can be
configured with ``get_params``/``set_params`` and cloned like any other
estimator.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .operator_space import (
    DensityMatrix,
    build_weighted_space,
    kraus_seed,
    unitary_seed,
    validate_density_matrix,
)
from .qfi import exact_qfi, seed_report
from .spectral import classify_measure, spectral_measure


class KrylovQFI(BaseEstimator):
    """Krylov-truncated quantum Fisher information of a state.

    Parameters
    ----------
    max_n : int or None
        Maximum number of Krylov levels; None runs to breakdown.
    breakdown_rtol : float
        Relative threshold on ``b_k`` that signals breakdown.
    reorth : {"full", "none"}
        Reorthogonalization of the Lanczos vectors.
    seed_span : bool
        Restrict Lanczos residuals to the seed's spectral span.
    eps_rank : float
        Smallest admissible eigenvalue of the density matrix.

    Attributes
    ----------
    qfi_ : float
        Exact QFI (closed form for unitary encodings).
    report_ : QfiReport
    lanczos_ : KrylovResult
    measure_ : SpectralMeasure
    regime_ : Gapped or HardEdge
    coef_ : ndarray
        SLD coefficients in the Krylov basis.
    d0_ : int or None
        Breakdown index (None when ``max_n`` stopped the recursion first).
    """

    def __init__(self, max_n=None, breakdown_rtol=1e-10, reorth="full", seed_span=True, eps_rank=1e-12):
        self.max_n = max_n
        self.breakdown_rtol = breakdown_rtol
        self.reorth = reorth
        self.seed_span = seed_span
        self.eps_rank = eps_rank

    def _state(self, rho):
        if isinstance(rho, DensityMatrix):
            return rho
        return validate_density_matrix(rho, eps_rank=self.eps_rank)

    def fit(self, rho, hamiltonian=None, kraus=None, dkraus=None):
        """Analyse ``rho`` under ``exp(-i theta H)`` or under a Kraus channel.

        Pass either ``hamiltonian`` or both ``kraus`` and ``dkraus``; in the
        channel case ``rho`` is the input state and the analysis runs on the
        output state.
        """
        if (hamiltonian is None) == (kraus is None):
            raise ValueError("pass exactly one of hamiltonian or kraus/dkraus")
        state = self._state(rho)
        if hamiltonian is not None:
            ctx = build_weighted_space(state)
            seed, norm = unitary_seed(ctx, hamiltonian)
            f_exact = exact_qfi(ctx, hamiltonian)
        else:
            if dkraus is None:
                raise ValueError("kraus requires dkraus")
            state, seed, norm = kraus_seed(state, kraus, dkraus, eps_rank=self.eps_rank)
            ctx = build_weighted_space(state)
            f_exact = None

        report, kres = seed_report(
            ctx,
            seed,
            max_n=self.max_n,
            f_exact=f_exact,
            breakdown_rtol=self.breakdown_rtol,
            reorth=self.reorth,
            seed_span=self.seed_span,
        )
        self.density_matrix_ = state
        self.space_ = ctx
        self.seed_norm_ = norm
        self.lanczos_ = kres
        self.report_ = report
        self.qfi_ = report.f_exact
        self.coef_ = report.ell
        self.d0_ = kres.d0
        self.depth_ = report.depth
        self.measure_ = spectral_measure(ctx, seed.matrix / norm)
        try:
            self.regime_ = classify_measure(self.measure_)
        except Exception:
            self.regime_ = None
        return self

    def predict(self, n, method="projection"):
        """Truncated QFI at Krylov depth(s) ``n``.

        ``method="projection"`` gives ``sum_{k<n} l_k^2``; ``"galerkin"``
        gives ``|O0|^2 e0^T T_n^{-2} e0``.  Depths past a saturated Krylov
        space return the exact value.
        """
        check_is_fitted(self, "report_")
        if method == "projection":
            series = self.report_.f_series
        elif method == "galerkin":
            series = self.report_.f_galerkin
        else:
            raise ValueError(f"method must be 'projection' or 'galerkin', got {method!r}")
        n = np.atleast_1d(np.asarray(n, dtype=int))
        if np.any(n < 1):
            raise ValueError("Krylov depth must be >= 1")
        if self.d0_ is None and np.any(n > series.size):
            raise ValueError(f"only {series.size} levels were computed (no breakdown)")
        out = series[np.minimum(n, series.size) - 1]
        return out if out.size > 1 else float(out[0])

    def relative_error(self, n, method="projection"):
        return 1.0 - np.asarray(self.predict(n, method)) / self.qfi_
