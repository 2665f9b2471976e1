"""Input validation helpers shared by the functional API and the estimators."""

import numpy as np

from .exceptions import DimensionMismatchError, NotHermitianError

# asymmetry above this (relative to max|M|) is an error, below it a silent fix
HERMITIAN_RTOL = 1e-8


def check_square(matrix, name="matrix"):
    """Return ``matrix`` as a complex 2-d square array."""
    arr = np.asarray(matrix)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise DimensionMismatchError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr.astype(np.complex128, copy=True)


def hermitian_part(matrix, name="matrix", rtol=HERMITIAN_RTOL):
    """Symmetrize ``matrix`` after checking its anti-Hermitian part is round-off."""
    arr = check_square(matrix, name)
    scale = np.max(np.abs(arr))
    asym = np.max(np.abs(arr - arr.conj().T))
    if scale > 0 and asym > rtol * scale:
        raise NotHermitianError(
            f"{name} is not Hermitian: max|M - M^dag| = {asym:.3e} "
            f"exceeds {rtol:g} * max|M| = {rtol * scale:.3e}"
        )
    return 0.5 * (arr + arr.conj().T)


def check_same_dim(dim, *arrays, names=None):
    for i, arr in enumerate(arrays):
        if arr.shape != (dim, dim):
            label = names[i] if names else f"argument {i}"
            raise DimensionMismatchError(
                f"{label} has shape {arr.shape}, expected ({dim}, {dim})"
            )


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or int(value) != value or value < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)
