"""
Tensor-product structure of multi-qubit operators: Kronecker products, qubit
permutations, partial transposes and partial traces.

Qubits are numbered from 1; qubit 1 is the leftmost tensor factor (the most
significant bit of a basis index). All functions accept stacks (..., n, n).
"""

from typing import Iterable, Sequence

import numpy as np


def num_qubits(m: np.ndarray) -> int:
    """Returns q for a matrix of dimension 2^q; raises ValueError otherwise."""
    n = m.shape[-1]
    if m.shape[-2] != n or n < 1 or n & (n - 1):
        raise ValueError(f"Matrix dimension {m.shape[-2:]} is not a square power of two")
    return n.bit_length() - 1


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, broadcast over leading batch dimensions."""
    a = np.asarray(a)
    b = np.asarray(b)
    na, ma = a.shape[-2:]
    nb, mb = b.shape[-2:]
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    return out.reshape(out.shape[:-4] + (na * nb, ma * mb))


def kron_all(factors: Sequence[np.ndarray]) -> np.ndarray:
    out = factors[0]
    for factor in factors[1:]:
        out = kron(out, factor)
    return out


def _check_qubit_indices(indices: Iterable[int], q: int) -> list:
    indices = sorted(set(int(i) for i in indices))
    for i in indices:
        if not 1 <= i <= q:
            raise ValueError(f"Qubit index {i} outside 1..{q}")
    return indices


def _as_tensor(m: np.ndarray, q: int) -> np.ndarray:
    return m.reshape(m.shape[:-2] + (2,) * (2 * q))


def permute_qubits(m: np.ndarray, perm: Sequence[int]) -> np.ndarray:
    """
    Reorders the tensor factors of m: input qubit k moves to position perm[k-1].

    permute_qubits(kron(A, B), (2, 1)) == kron(B, A). The result is a
    conjugation by a permutation matrix, so it is exact and spectrum-preserving.
    """
    m = np.asarray(m)
    q = num_qubits(m)
    perm = [int(p) for p in perm]
    if sorted(perm) != list(range(1, q + 1)):
        raise ValueError(f"{perm} is not a permutation of qubits 1..{q}")

    lead = m.ndim - 2
    source = [0] * q
    for k, target in enumerate(perm):
        source[target - 1] = k
    axes = list(range(lead))
    axes += [lead + s for s in source]
    axes += [lead + q + s for s in source]
    return np.transpose(_as_tensor(m, q), axes).reshape(m.shape)


def inverse_permutation(perm: Sequence[int]) -> tuple:
    inverse = [0] * len(perm)
    for k, target in enumerate(perm):
        inverse[target - 1] = k + 1
    return tuple(inverse)


def partial_transpose(m: np.ndarray, subsystem_qubits: Iterable[int]) -> np.ndarray:
    """Transposes the row/column indices of the given qubits only."""
    m = np.asarray(m)
    q = num_qubits(m)
    subsystem = _check_qubit_indices(subsystem_qubits, q)
    lead = m.ndim - 2
    axes = list(range(m.ndim - 2 + 2 * q))
    for i in subsystem:
        row_axis = lead + i - 1
        col_axis = lead + q + i - 1
        axes[row_axis], axes[col_axis] = axes[col_axis], axes[row_axis]
    return np.transpose(_as_tensor(m, q), axes).reshape(m.shape)


def partial_trace(m: np.ndarray, keep: Iterable[int]) -> np.ndarray:
    """Traces out every qubit not listed in `keep`; the kept qubits retain their order."""
    m = np.asarray(m)
    q = num_qubits(m)
    keep = _check_qubit_indices(keep, q)
    traced = [i for i in range(1, q + 1) if i not in keep]
    tensor = _as_tensor(m, q)
    lead = m.ndim - 2
    # trace the highest-numbered qubits first so remaining axis positions stay valid
    remaining = q
    for i in sorted(traced, reverse=True):
        tensor = np.trace(tensor, axis1=lead + i - 1, axis2=lead + remaining + i - 1)
        remaining -= 1
    dim = 2 ** len(keep)
    return tensor.reshape(m.shape[:-2] + (dim, dim))
