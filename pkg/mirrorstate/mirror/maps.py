"""
🪞 Von Neumann Entropy Mirror Map
=================================
Maps density matrices to the unconstrained dual space and back.

    to_dual(X)   = I + log X
    to_primal(Y) = exp(Y - I) / Tr exp(Y - I)

Trace normalization in to_primal makes Y and Y + cI decode to the same state,
so encode(decode(v)) returns the trace-gauge-fixed representative of v rather
than v itself (see project_to_gauge).
"""

import logging
import math
from typing import Optional

import numpy as np

from mirrorstate.config import MirrorConfig
from mirrorstate.linalg import conj_transpose, eigh, hermitize, mat_log, normalize_trace
from mirrorstate.mirror.vectorize import herm_to_vec, vec_to_herm

logger = logging.getLogger(__name__)

# smallest output eigenvalue relative to the largest
RELATIVE_EIGENVALUE_FLOOR = 1e-12
LOG_EIGENVALUE_FLOOR = math.log(RELATIVE_EIGENVALUE_FLOOR)


def to_dual(x: np.ndarray) -> np.ndarray:
    """
    Gradient of the negative von Neumann entropy, I + log X.

    Raises:
        MatrixDomainError: if X is not full rank.
    """
    y = mat_log(x)
    n = y.shape[-1]
    idx = np.arange(n)
    y[..., idx, idx] += 1.0
    return y


def to_primal(y: np.ndarray) -> np.ndarray:
    """
    Inverse mirror map followed by trace normalization.

    exp(Y - I) is evaluated as a softmax over the eigenvalues of Y, so any
    finite Hermitian input yields a strictly positive, trace-one matrix
    without overflow. Output eigenvalues are floored at RELATIVE_EIGENVALUE_FLOOR
    times the largest one; inputs whose spectrum spans less than
    ln(1 / RELATIVE_EIGENVALUE_FLOOR) (about 27.6) are mapped exactly. Wider
    spectra are clamped, so there to_primal is not the exact inverse of to_dual.
    """
    decomposition = eigh(y)
    shifted = decomposition.eigenvalues - np.max(decomposition.eigenvalues, axis=-1, keepdims=True)
    shifted = np.maximum(shifted, LOG_EIGENVALUE_FLOOR)
    weights = np.exp(shifted)
    weights /= np.sum(weights, axis=-1, keepdims=True)
    q = decomposition.eigenvectors
    x = hermitize((q * weights[..., None, :]) @ conj_transpose(q))
    return normalize_trace(x)


def encode(x: np.ndarray, cfg: Optional[MirrorConfig] = None) -> np.ndarray:
    """Density matrices (..., n, n) to dual vectors (..., n²)."""
    return herm_to_vec(to_dual(x), cfg)


def decode(v: np.ndarray, cfg: Optional[MirrorConfig] = None) -> np.ndarray:
    """Dual vectors (..., n²) to valid density matrices (..., n, n), for any finite input."""
    return to_primal(vec_to_herm(v, cfg))


def project_to_gauge(v: np.ndarray, cfg: Optional[MirrorConfig] = None) -> np.ndarray:
    """Returns encode(decode(v)): the representative of v whose state has trace one before the map."""
    return encode(decode(v, cfg), cfg)


# --- Model-space codecs ---
# The score model runs in the dual space when the mirror is enabled and in the
# raw primal coordinates otherwise (the unconstrained baseline).

def to_model_space(x: np.ndarray, cfg: Optional[MirrorConfig] = None) -> np.ndarray:
    cfg = cfg or MirrorConfig()
    if cfg.enabled:
        return encode(x, cfg)
    return herm_to_vec(x, cfg)


def from_model_space(v: np.ndarray, cfg: Optional[MirrorConfig] = None) -> np.ndarray:
    """
    Decodes model-space vectors into matrices.

    On the mirror path the result is always a valid density matrix; on the
    primal path it is only devectorized (Hermitian, but neither trace-one nor
    positive in general).
    """
    cfg = cfg or MirrorConfig()
    if cfg.enabled:
        return decode(v, cfg)
    logger.debug("Decoding without the mirror map; outputs are not guaranteed to be density matrices")
    return vec_to_herm(v, cfg)
