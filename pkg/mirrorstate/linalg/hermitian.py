"""
🔷 Hermitian Matrix Functions & Density-Matrix Checks
======================================================
Spectral matrix functions (log, exp), exact Hermitian construction,
trace normalization and the validity report used across the pipeline.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from mirrorstate.linalg.jacobi import eigh

logger = logging.getLogger(__name__)

EIGENVALUE_FLOOR = 1e-300
DEFAULT_TOLERANCE = 1e-10
# trace bound met by trace-normalized outputs
TRACE_TOLERANCE = 1e-12


class MatrixDomainError(ValueError):
    """Raised when a matrix lies outside the domain of an operation (e.g. log of a non-positive spectrum)."""
    pass


@dataclass(frozen=True)
class ValidityReport:
    """Scalar defects of a candidate density matrix (or arrays of them for a stack)."""
    hermiticity_defect: np.ndarray
    min_eigenvalue: np.ndarray
    trace_defect: np.ndarray
    tolerance: float
    trace_tolerance: Optional[float] = None

    @property
    def passed(self) -> np.ndarray:
        """Hermitian and trace-one within tolerance, strictly positive spectrum (full-rank convention)."""
        return (
            (self.hermiticity_defect <= self.tolerance)
            & (self.trace_defect <= self.trace_bound)
            & (self.min_eigenvalue > 0.0)
        )

    @property
    def psd_violated(self) -> np.ndarray:
        return self.min_eigenvalue <= 0.0

    @property
    def trace_bound(self) -> float:
        return self.tolerance if self.trace_tolerance is None else self.trace_tolerance

    def all_passed(self) -> bool:
        return bool(np.all(self.passed))

    def summary(self) -> dict:
        passed = np.atleast_1d(self.passed)
        return {
            "count": int(passed.size),
            "passed": int(passed.sum()),
            "pass_rate": float(passed.mean()) if passed.size else 1.0,
            "psd_violation_rate": float(np.atleast_1d(self.psd_violated).mean()) if passed.size else 0.0,
            "max_hermiticity_defect": float(np.max(self.hermiticity_defect, initial=0.0)),
            "max_trace_defect": float(np.max(self.trace_defect, initial=0.0)),
            "min_eigenvalue": float(np.min(self.min_eigenvalue, initial=np.inf)),
            "tolerance": self.tolerance,
            "trace_tolerance": self.trace_bound,
        }


def conj_transpose(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitize(m: np.ndarray) -> np.ndarray:
    """
    Builds an exactly Hermitian matrix from the upper triangle of m.

    The diagonal keeps only its real part; the strict lower triangle is the
    conjugate mirror of the strict upper triangle.
    """
    m = np.asarray(m, dtype=np.complex128)
    n = m.shape[-1]
    upper = np.triu(m, k=1)
    diagonal = np.real(np.diagonal(m, axis1=-2, axis2=-1))
    out = upper + conj_transpose(upper)
    idx = np.arange(n)
    out[..., idx, idx] = diagonal
    return out


def apply_spectral_function(m: np.ndarray, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Returns sum_i fn(lambda_i) q_i q_i^dagger, made exactly Hermitian."""
    decomposition = eigh(m)
    q = decomposition.eigenvectors
    weighted = q * fn(decomposition.eigenvalues)[..., None, :]
    return hermitize(weighted @ conj_transpose(q))


def mat_log(m: np.ndarray) -> np.ndarray:
    """
    Matrix logarithm of a Hermitian positive definite matrix (or stack).

    Raises:
        MatrixDomainError: if any eigenvalue is at or below EIGENVALUE_FLOOR.
    """
    decomposition = eigh(m)
    smallest = np.min(decomposition.eigenvalues, axis=-1, initial=np.inf)
    if np.any(smallest <= EIGENVALUE_FLOOR):
        raise MatrixDomainError(
            f"mat_log requires a strictly positive spectrum; smallest eigenvalue {float(np.min(smallest)):.3e}"
        )
    q = decomposition.eigenvectors
    weighted = q * np.log(decomposition.eigenvalues)[..., None, :]
    return hermitize(weighted @ conj_transpose(q))


def mat_exp(m: np.ndarray) -> np.ndarray:
    """Matrix exponential of a Hermitian matrix (or stack)."""
    return apply_spectral_function(m, np.exp)


def trace(m: np.ndarray) -> np.ndarray:
    return np.trace(m, axis1=-2, axis2=-1)


def normalize_trace(m: np.ndarray) -> np.ndarray:
    """
    Divides a Hermitian matrix (or stack) by its real trace.

    Raises:
        MatrixDomainError: if a trace is not strictly positive.
    """
    m = np.asarray(m, dtype=np.complex128)
    tr = np.real(trace(m))
    if np.any(~(tr > 0.0)):
        raise MatrixDomainError(f"normalize_trace requires a positive trace, got {float(np.min(tr)):.3e}")
    return hermitize(m / tr[..., None, None])


def validate_density(
    m: np.ndarray, tol: float = DEFAULT_TOLERANCE, trace_tol: Optional[float] = None
) -> ValidityReport:
    """
    Reports the hermiticity defect, minimum eigenvalue and trace defect of m.

    Args:
        m (np.ndarray): square matrix or stack of square matrices.
        tol (float): tolerance for the hermiticity defect, and for the trace defect
            unless trace_tol is given.
        trace_tol (Optional[float]): separate bound for the trace defect.

    Returns:
        ValidityReport: scalar defects (arrays for a stack); never raises for square input.
    """
    m = np.asarray(m, dtype=np.complex128)
    hermiticity = np.linalg.norm(m - conj_transpose(m), axis=(-2, -1))
    # spectrum of the Hermitian part; for a Hermitian input this is exact
    eigenvalues = eigh(0.5 * (m + conj_transpose(m))).eigenvalues
    min_eigenvalue = np.min(eigenvalues, axis=-1)
    trace_defect = np.abs(trace(m) - 1.0)
    return ValidityReport(
        hermiticity_defect=hermiticity,
        min_eigenvalue=min_eigenvalue,
        trace_defect=trace_defect,
        tolerance=tol,
        trace_tolerance=trace_tol,
    )
