"""Entanglement negativity from the spectrum of the partial transpose."""

from typing import Iterable, Union

import numpy as np

from mirrorstate.linalg import eigh, hermitize, partial_transpose


def negativity(rho: np.ndarray, subsystem: Iterable[int] = (1,)) -> Union[float, np.ndarray]:
    """
    N(ρ) = Σ |λ_i| over the negative eigenvalues λ_i of ρ^{Γ_A}.

    Args:
        rho (np.ndarray): density matrix (n, n) or stack (..., n, n).
        subsystem (Iterable[int]): qubits forming subsystem A (1-indexed).

    Returns:
        float for a single matrix, otherwise an array over the leading axes.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    eigenvalues = eigh(hermitize(partial_transpose(rho, subsystem))).eigenvalues
    values = -np.sum(np.minimum(eigenvalues, 0.0), axis=-1)
    return float(values) if rho.ndim == 2 else values
