"""
Real coordinates for Hermitian matrices.

Layout of a dual vector of length n²: the n real diagonal entries, then for
every upper-triangular position (i < j) in row-major order the real part
followed by the imaginary part. With isometric scaling the off-diagonal pair
carries a factor √2 so that ‖vec‖₂ = ‖Y‖_F. The layout is frozen; dataset and
checkpoint files depend on it.
"""

import math
from typing import Optional

import numpy as np

from mirrorstate.config import MirrorConfig

SQRT2 = math.sqrt(2.0)


def matrix_dim(length: int) -> int:
    """Returns n for a vector of length n²; raises ValueError if length is not a perfect square."""
    n = math.isqrt(int(length))
    if length < 1 or n * n != length:
        raise ValueError(f"Dual vector length {length} is not a perfect square")
    return n


def herm_to_vec(y: np.ndarray, cfg: Optional[MirrorConfig] = None) -> np.ndarray:
    """
    Vectorizes a Hermitian matrix (or stack) into real n²-vectors.

    Args:
        y (np.ndarray): Hermitian matrices of shape (..., n, n).
        cfg (Optional[MirrorConfig]): scaling convention; isometric by default.

    Returns:
        np.ndarray: float64 array of shape (..., n²).
    """
    cfg = cfg or MirrorConfig()
    y = np.asarray(y)
    n = y.shape[-1]
    rows, cols = np.triu_indices(n, k=1)
    diagonal = np.real(np.diagonal(y, axis1=-2, axis2=-1))
    upper = y[..., rows, cols]
    pairs = np.stack([np.real(upper), np.imag(upper)], axis=-1).reshape(y.shape[:-2] + (-1,))
    if cfg.isometric_scaling:
        pairs = pairs * SQRT2
    return np.concatenate([diagonal, pairs], axis=-1).astype(np.float64, copy=False)


def vec_to_herm(v: np.ndarray, cfg: Optional[MirrorConfig] = None) -> np.ndarray:
    """
    Inverse of herm_to_vec: rebuilds exactly Hermitian matrices from real n²-vectors.

    Raises:
        ValueError: if the trailing length is not a perfect square.
    """
    cfg = cfg or MirrorConfig()
    v = np.asarray(v, dtype=np.float64)
    n = matrix_dim(v.shape[-1])
    batch_shape = v.shape[:-1]
    pairs = v[..., n:].reshape(batch_shape + (-1, 2))
    if cfg.isometric_scaling:
        pairs = pairs / SQRT2

    out = np.zeros(batch_shape + (n, n), dtype=np.complex128)
    rows, cols = np.triu_indices(n, k=1)
    upper = pairs[..., 0] + 1j * pairs[..., 1]
    out[..., rows, cols] = upper
    out[..., cols, rows] = np.conj(upper)
    idx = np.arange(n)
    out[..., idx, idx] = v[..., :n]
    return out
