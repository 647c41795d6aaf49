"""Internal dense linear-algebra helpers for the posterior modules."""

from __future__ import annotations

import numpy as np

from .errors import NumericalError

# Jitter ladder: 0, then 1e-12 * trace/d escalating tenfold up to 1e-6 * trace/d.
_JITTER_START = 1e-12
_JITTER_STOP = 1e-6


def _trace_scale(mat: np.ndarray) -> float:
    d = mat.shape[-1]
    scale = float(np.trace(mat, axis1=-2, axis2=-1).mean()) / d
    return scale if scale > 0.0 else 1.0


def spd_cholesky(mat: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a symmetric PSD matrix, with escalating jitter."""
    if not np.all(np.isfinite(mat)):
        raise NumericalError("non-finite matrix entries in Cholesky input")
    d = mat.shape[-1]
    scale = _trace_scale(mat)
    jitter = 0.0
    while True:
        try:
            return np.linalg.cholesky(mat + jitter * np.eye(d))
        except np.linalg.LinAlgError:
            jitter = _JITTER_START * scale if jitter == 0.0 else jitter * 10.0
            if jitter > _JITTER_STOP * scale * (1.0 + 1e-9):
                raise NumericalError(
                    "Cholesky factorization failed after exhausting the jitter ladder"
                ) from None


def batched_spd_inverse(mats: np.ndarray) -> np.ndarray:
    """Inverse of a stack of symmetric positive-definite matrices.

    Applies the same jitter ladder as spd_cholesky on failure and symmetrizes
    the result to suppress round-off asymmetry.
    """
    if not np.all(np.isfinite(mats)):
        raise NumericalError("non-finite matrix entries in inverse input")
    d = mats.shape[-1]
    scale = _trace_scale(mats)
    jitter = 0.0
    while True:
        try:
            shifted = mats + jitter * np.eye(d)
            np.linalg.cholesky(shifted)  # np.linalg.inv accepts indefinite input
            inv = np.linalg.inv(shifted)
            return 0.5 * (inv + np.swapaxes(inv, -1, -2))
        except np.linalg.LinAlgError:
            jitter = _JITTER_START * scale if jitter == 0.0 else jitter * 10.0
            if jitter > _JITTER_STOP * scale * (1.0 + 1e-9):
                raise NumericalError(
                    "matrix inversion failed after exhausting the jitter ladder"
                ) from None
