"""
🧮 Complex Hermitian Eigensolver
================================
Cyclic Jacobi diagonalization with unitary Givens rotations.

Works on a single matrix or on a stack of shape (..., n, n); every matrix in a
stack runs the same row-major sweep order and stops rotating as soon as its
own off-diagonal mass is below tolerance, so a matrix gives the same result
whether it is diagonalized alone or inside a batch of the same shape.
"""

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

CONVERGENCE_RTOL = 1e-13
MAX_SWEEPS = 100


class EigenDecompositionError(ArithmeticError):
    """Raised when Jacobi sweeps fail to converge within the sweep cap."""
    pass


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order and the matching orthonormal eigenvectors (columns)."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """Returns sum_i lambda_i q_i q_i^dagger."""
        q = self.eigenvectors
        return (q * self.eigenvalues[..., None, :]) @ np.conj(np.swapaxes(q, -1, -2))


def _off_diagonal_norm(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    mask = ~np.eye(n, dtype=bool)
    return np.sqrt(np.sum(np.abs(a[:, mask]) ** 2, axis=-1))


def _rotate(a: np.ndarray, v: np.ndarray, p: int, q: int, active: np.ndarray) -> None:
    """Annihilates a[:, p, q] in place for every active matrix of the batch."""
    apq = a[:, p, q]
    magnitude = np.abs(apq)
    rotate = active & (magnitude > 0.0)
    if not np.any(rotate):
        return

    app = a[:, p, p].real
    aqq = a[:, q, q].real
    theta = np.where(rotate, 0.5 * np.arctan2(2.0 * magnitude, aqq - app), 0.0)
    c = np.cos(theta)
    s = np.sin(theta)
    phase = np.where(rotate, apq / np.where(magnitude > 0.0, magnitude, 1.0), 1.0)
    # G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on the (p, q) plane
    s_conj_phase = s * np.conj(phase)
    c_conj_phase = c * np.conj(phase)

    new_pp = c * c * app + s * s * aqq - 2.0 * c * s * magnitude
    new_qq = s * s * app + c * c * aqq + 2.0 * c * s * magnitude

    # columns: A <- A G
    col_p = a[:, :, p].copy()
    col_q = a[:, :, q].copy()
    a[:, :, p] = c[:, None] * col_p - s_conj_phase[:, None] * col_q
    a[:, :, q] = s[:, None] * col_p + c_conj_phase[:, None] * col_q
    # rows: A <- G^dagger A
    row_p = a[:, p, :].copy()
    row_q = a[:, q, :].copy()
    a[:, p, :] = c[:, None] * row_p - (s * phase)[:, None] * row_q
    a[:, q, :] = s[:, None] * row_p + (c * phase)[:, None] * row_q

    a[:, p, p] = new_pp
    a[:, q, q] = new_qq
    a[:, p, q] = np.where(rotate, 0.0, a[:, p, q])
    a[:, q, p] = np.where(rotate, 0.0, a[:, q, p])

    vec_p = v[:, :, p].copy()
    vec_q = v[:, :, q].copy()
    v[:, :, p] = c[:, None] * vec_p - s_conj_phase[:, None] * vec_q
    v[:, :, q] = s[:, None] * vec_p + c_conj_phase[:, None] * vec_q


def eigh(m: np.ndarray) -> EigenDecomposition:
    """
    Diagonalizes Hermitian matrices with cyclic complex Jacobi rotations.

    Args:
        m (np.ndarray): Hermitian matrix of shape (n, n) or a stack (..., n, n).

    Returns:
        EigenDecomposition: ascending eigenvalues (..., n) and eigenvectors (..., n, n).

    Raises:
        EigenDecompositionError: if a matrix is still not diagonal after MAX_SWEEPS sweeps.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"eigh expects square matrices, got shape {m.shape}")

    batch_shape = m.shape[:-2]
    n = m.shape[-1]
    a = m.reshape((-1, n, n)).copy()
    batch = a.shape[0]
    v = np.broadcast_to(np.eye(n, dtype=np.complex128), (batch, n, n)).copy()

    tolerance = CONVERGENCE_RTOL * np.linalg.norm(a, axis=(-2, -1))
    active = _off_diagonal_norm(a) > tolerance
    sweeps = 0
    while np.any(active):
        if sweeps >= MAX_SWEEPS:
            raise EigenDecompositionError(
                f"Jacobi eigensolver did not converge after {MAX_SWEEPS} sweeps "
                f"({int(active.sum())} of {batch} matrices still off-diagonal)"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                _rotate(a, v, p, q, active)
        sweeps += 1
        active = active & (_off_diagonal_norm(a) > tolerance)

    logger.debug(f"Jacobi eigensolver converged in {sweeps} sweeps for {batch} matrices of size {n}")

    eigenvalues = np.real(np.diagonal(a, axis1=-2, axis2=-1)).copy()
    order = np.argsort(eigenvalues, axis=-1, kind="stable")
    eigenvalues = np.take_along_axis(eigenvalues, order, axis=-1)
    eigenvectors = np.take_along_axis(v, order[:, None, :], axis=-1)

    return EigenDecomposition(
        eigenvalues=eigenvalues.reshape(batch_shape + (n,)),
        eigenvectors=eigenvectors.reshape(batch_shape + (n, n)),
    )
