"""Complex Hermitian linear algebra and qubit tensor utilities."""
from .jacobi import EigenDecomposition, EigenDecompositionError, eigh
from .hermitian import (
    TRACE_TOLERANCE,
    MatrixDomainError,
    ValidityReport,
    apply_spectral_function,
    conj_transpose,
    hermitize,
    mat_exp,
    mat_log,
    normalize_trace,
    trace,
    validate_density,
)
from .qubits import (
    inverse_permutation,
    kron,
    kron_all,
    num_qubits,
    partial_trace,
    partial_transpose,
    permute_qubits,
)

__all__ = [
    'EigenDecomposition', 'EigenDecompositionError', 'eigh',
    'TRACE_TOLERANCE', 'MatrixDomainError', 'ValidityReport', 'apply_spectral_function', 'conj_transpose',
    'hermitize', 'mat_exp', 'mat_log', 'normalize_trace', 'trace', 'validate_density',
    'inverse_permutation', 'kron', 'kron_all', 'num_qubits', 'partial_trace',
    'partial_transpose', 'permute_qubits',
]
