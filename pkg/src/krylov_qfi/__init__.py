"""Krylov-subspace quantum Fisher information and spectral convergence analysis."""

__version__ = "0.1.0"

from .estimators import KrylovQFI
from .exceptions import KrylovQFIError
from .lanczos import KrylovResult, TridiagonalMatrix, fn_series, run_lanczos, tridiag_solve_e0
from .models import IsingParams, ising_hamiltonian, random_density_matrix
from .operator_space import (
    DensityMatrix,
    LiouvilleVector,
    WeightedSpace,
    apply_K,
    build_weighted_space,
    inner_product,
    kraus_seed,
    unitary_seed,
    validate_density_matrix,
)
from .qfi import (
    QfiReport,
    error_report,
    exact_qfi,
    exact_sld,
    krylov_coefficients,
    krylov_distribution,
    seed_report,
    unitary_report,
)
from .spectral import (
    SpectralMeasure,
    classify_measure,
    gauss_quadrature,
    lanczos_from_moments,
    moments,
    qfi_by_quadrature,
    spectral_measure,
)

