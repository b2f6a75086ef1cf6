"""
⚛️ Synthetic Multi-Qubit States
===============================
Generators for the three labeled families used as training data:

- product states ρ₁ ⊗ … ⊗ ρ_q of i.i.d. single-qubit draws,
- pairwise entangled states (U₁₂ U₃₄ …) ρ_prod (U₁₂ U₃₄ …)†,
- fully entangled states (∏_{i<j} U_ij) ρ_prod (∏_{i<j} U_ij)†,

where each U_ij embeds an independent Haar-random two-qubit unitary on qubits
(i, j). Every generator draws its product state first, so generators seeded
identically share ρ_prod and therefore its spectrum.

All generators accept `size` and return stacks of shape size + (2^q, 2^q).
"""

import logging
from itertools import combinations
from typing import Optional, Sequence, Tuple

import numpy as np

from mirrorstate.config import QubitDistConfig
from mirrorstate.linalg import conj_transpose, hermitize, kron, normalize_trace, permute_qubits
from mirrorstate.quantum.haar import HaarSampler, Size, _count

logger = logging.getLogger(__name__)

_EXACT_HAAR = HaarSampler("qr")


def _spectral_matrix(eigenvalues: np.ndarray, unitaries: np.ndarray) -> np.ndarray:
    return hermitize((unitaries * eigenvalues[..., None, :]) @ conj_transpose(unitaries))


def sample_qubit(
    cfg: QubitDistConfig,
    rng: np.random.Generator,
    size: Size = None,
    haar: Optional[HaarSampler] = None,
) -> np.ndarray:
    """
    Single-qubit density matrices Q diag(λ₁, λ₂) Q† / (λ₁ + λ₂).

    λ₁, λ₂ ~ Uniform[lambda_min, lambda_max] and Q ~ Haar(U(2)).
    """
    haar = haar or _EXACT_HAAR
    shape, _ = _count(size)
    eigenvalues = rng.uniform(cfg.lambda_min, cfg.lambda_max, size=shape + (2,))
    unitaries = haar.sample(2, rng, size=shape if shape else None)
    return normalize_trace(_spectral_matrix(eigenvalues, unitaries))


def product_state(
    qubits: int,
    cfg: QubitDistConfig,
    rng: np.random.Generator,
    size: Size = None,
    haar: Optional[HaarSampler] = None,
) -> np.ndarray:
    """Tensor product of `qubits` independent single-qubit states."""
    if qubits < 1:
        raise ValueError(f"qubits must be >= 1, got {qubits}")
    shape, _ = _count(size)
    singles = sample_qubit(cfg, rng, size=shape + (qubits,), haar=haar)
    rho = singles[..., 0, :, :]
    for k in range(1, qubits):
        rho = kron(rho, singles[..., k, :, :])
    return rho


def build_entangler(pair: Tuple[int, int], m: np.ndarray, qubits: int) -> np.ndarray:
    """
    Embeds a two-qubit unitary M (4×4, or a stack) so it acts on qubits (i, j).

    The result is M ⊗ I on the first two tensor factors, with factors
    reordered so M's legs land on qubits i and j; for (1, 2) no reordering
    is needed and the result is exactly M ⊗ I.
    """
    i, j = int(pair[0]), int(pair[1])
    if not 1 <= i < j <= qubits:
        raise ValueError(f"Invalid qubit pair {pair} for {qubits} qubits")
    if m.shape[-2:] != (4, 4):
        raise ValueError(f"Entangler must be 4x4, got {m.shape[-2:]}")
    embedded = kron(m, np.eye(2 ** (qubits - 2), dtype=np.complex128)) if qubits > 2 else np.asarray(m)
    if (i, j) == (1, 2):
        return embedded
    rest = [k for k in range(1, qubits + 1) if k not in (i, j)]
    return permute_qubits(embedded, (i, j, *rest))


def conjugate(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """U ρ U†, made exactly Hermitian."""
    return hermitize(u @ rho @ conj_transpose(u))


def _entangle(
    rho: np.ndarray,
    pairs: Sequence[Tuple[int, int]],
    qubits: int,
    rng: np.random.Generator,
    haar: HaarSampler,
) -> np.ndarray:
    batch_shape = rho.shape[:-2]
    gates = haar.sample(4, rng, size=batch_shape + (len(pairs),))
    dim = 2 ** qubits
    u = np.broadcast_to(np.eye(dim, dtype=np.complex128), batch_shape + (dim, dim))
    for k, pair in enumerate(pairs):
        u = u @ build_entangler(pair, gates[..., k, :, :], qubits)
    return conjugate(u, rho)


def pairwise_pairs(qubits: int) -> list:
    return [(k, k + 1) for k in range(1, qubits, 2)]


def fully_pairs(qubits: int) -> list:
    return list(combinations(range(1, qubits + 1), 2))


def pairwise_state(
    qubits: int,
    cfg: QubitDistConfig,
    rng: np.random.Generator,
    size: Size = None,
    haar: Optional[HaarSampler] = None,
) -> np.ndarray:
    """Entangles the disjoint pairs (1,2), (3,4), … of a fresh product state."""
    if qubits < 2 or qubits % 2:
        raise ValueError(f"Pairwise entangled states need an even qubit count >= 2, got {qubits}")
    haar = haar or _EXACT_HAAR
    rho = product_state(qubits, cfg, rng, size=size, haar=haar)
    return _entangle(rho, pairwise_pairs(qubits), qubits, rng, haar)


def fully_state(
    qubits: int,
    cfg: QubitDistConfig,
    rng: np.random.Generator,
    size: Size = None,
    haar: Optional[HaarSampler] = None,
) -> np.ndarray:
    """Applies U_12 U_13 … U_{q-1,q} (ascending lexicographic order) to a fresh product state."""
    if qubits < 2:
        raise ValueError(f"Fully entangled states need at least 2 qubits, got {qubits}")
    haar = haar or _EXACT_HAAR
    rho = product_state(qubits, cfg, rng, size=size, haar=haar)
    return _entangle(rho, fully_pairs(qubits), qubits, rng, haar)


def random_density_matrix(
    n: int,
    rng: np.random.Generator,
    eig_range: Tuple[float, float] = (1e-3, 1.0),
    size: Size = None,
    haar: Optional[HaarSampler] = None,
) -> np.ndarray:
    """Full-rank density matrices with Uniform(eig_range) spectrum (before normalization) and Haar eigenbasis."""
    haar = haar or _EXACT_HAAR
    shape, _ = _count(size)
    eigenvalues = rng.uniform(eig_range[0], eig_range[1], size=shape + (n,))
    unitaries = haar.sample(n, rng, size=shape if shape else None)
    return normalize_trace(_spectral_matrix(eigenvalues, unitaries))


def random_hermitian_baseline(
    n: int,
    rng: np.random.Generator,
    size: Size = None,
    haar: Optional[HaarSampler] = None,
) -> np.ndarray:
    """Reference-magnitude baseline: Hermitian matrices with Uniform[0, 1] eigenvalues and a Haar eigenbasis (not trace-normalized)."""
    haar = haar or _EXACT_HAAR
    shape, _ = _count(size)
    eigenvalues = rng.uniform(0.0, 1.0, size=shape + (n,))
    unitaries = haar.sample(n, rng, size=shape if shape else None)
    return _spectral_matrix(eigenvalues, unitaries)
