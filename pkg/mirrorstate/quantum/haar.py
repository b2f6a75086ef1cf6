"""
🎲 Haar-Random Unitaries
========================
Two samplers for the Haar measure on U(n):

- `haar_unitary_lie`: kinetic Langevin dynamics on the group. The momentum ξ
  lives in the Lie algebra u(n) and follows an Ornstein-Uhlenbeck process;
  the position moves by the exact group flow g <- g·exp(hξ). Strang splitting
  (half OU step, full group step, half OU step) keeps g on U(n) to rounding
  for any trajectory length. The g-marginal of the invariant law is Haar.
- `haar_unitary_qr`: Ginibre matrix, QR factorization, phase-fixed by the
  diagonal of R. Exact, used as the reference oracle.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple, Union

import numpy as np

from mirrorstate.config import LieSamplerConfig
from mirrorstate.linalg import conj_transpose, eigh, hermitize

logger = logging.getLogger(__name__)

Size = Optional[Union[int, Tuple[int, ...]]]


def _count(size: Size) -> Tuple[Tuple[int, ...], int]:
    if size is None:
        return (), 1
    shape = (size,) if isinstance(size, (int, np.integer)) else tuple(size)
    return shape, int(np.prod(shape, dtype=np.int64))


def lie_algebra_basis(n: int) -> np.ndarray:
    """
    Orthonormal basis of u(n) under <A, B> = Re Tr(A† B), shape (n², n, n).

    Order: i·E_kk for each k, then for each k < l in row-major order
    (E_kl - E_lk)/√2 followed by i(E_kl + E_lk)/√2.
    """
    basis = np.zeros((n * n, n, n), dtype=np.complex128)
    for k in range(n):
        basis[k, k, k] = 1j
    index = n
    inv_sqrt2 = 1.0 / math.sqrt(2.0)
    for k in range(n - 1):
        for l in range(k + 1, n):
            basis[index, k, l] = inv_sqrt2
            basis[index, l, k] = -inv_sqrt2
            basis[index + 1, k, l] = 1j * inv_sqrt2
            basis[index + 1, l, k] = 1j * inv_sqrt2
            index += 2
    return basis


def unitarity_defect(u: np.ndarray) -> np.ndarray:
    """‖U†U - I‖_F for a matrix or stack."""
    n = u.shape[-1]
    return np.linalg.norm(conj_transpose(u) @ u - np.eye(n), axis=(-2, -1))


def exp_skew_hermitian(xi: np.ndarray, h: float) -> np.ndarray:
    """exp(h·ξ) for skew-Hermitian ξ, via the spectrum of the Hermitian matrix -iξ."""
    decomposition = eigh(hermitize(-1j * xi))
    q = decomposition.eigenvectors
    phases = np.exp(1j * h * decomposition.eigenvalues)
    return (q * phases[..., None, :]) @ conj_transpose(q)


@dataclass
class LieGroupLangevin:
    """
    Batched kinetic Langevin state (g, ξ) on U(n), one trajectory per chain.

    Starts from g = I and ξ = 0.
    """
    n: int
    cfg: LieSamplerConfig
    rng: np.random.Generator
    chains: int = 1
    basis: np.ndarray = field(init=False, repr=False)
    g: np.ndarray = field(init=False, repr=False)
    momentum: np.ndarray = field(init=False, repr=False)
    steps_taken: int = field(init=False, default=0)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Unitary dimension must be >= 1, got {self.n}")
        self.basis = lie_algebra_basis(self.n)
        self.g = np.broadcast_to(np.eye(self.n, dtype=np.complex128), (self.chains, self.n, self.n)).copy()
        self.momentum = np.zeros((self.chains, self.n * self.n))
        h = self.cfg.step_size
        self._ou_decay = math.exp(-0.5 * self.cfg.friction * h)
        self._ou_noise = math.sqrt(-math.expm1(-self.cfg.friction * h))

    def _half_ou(self) -> None:
        noise = self.rng.standard_normal(self.momentum.shape)
        self.momentum = self._ou_decay * self.momentum + self._ou_noise * noise

    def step(self, count: int = 1) -> None:
        h = self.cfg.step_size
        for _ in range(count):
            self._half_ou()
            xi = np.einsum("ck,kij->cij", self.momentum, self.basis)
            self.g = self.g @ exp_skew_hermitian(xi, h)
            self._half_ou()
        self.steps_taken += count


def haar_unitary_lie(
    n: int,
    cfg: Optional[LieSamplerConfig] = None,
    rng: Optional[np.random.Generator] = None,
    size: Size = None,
) -> np.ndarray:
    """
    Draws approximately Haar-distributed unitaries by Lie-group Langevin dynamics.

    Up to `cfg.chains` trajectories run side by side. Each is burned in for
    `cfg.burn_in_steps` steps; afterwards every chain contributes one sample
    per `cfg.thinning` steps until `size` samples are collected.

    Args:
        n (int): matrix dimension.
        cfg (Optional[LieSamplerConfig]): dynamics parameters.
        rng (Optional[np.random.Generator]): random source.
        size: None for a single (n, n) matrix, else the leading batch shape.

    Returns:
        np.ndarray: unitary matrices of shape size + (n, n).
    """
    cfg = cfg or LieSamplerConfig()
    rng = rng if rng is not None else np.random.default_rng()
    shape, total = _count(size)
    if total == 0:
        return np.zeros(shape + (n, n), dtype=np.complex128)

    chains = min(cfg.chains, total)
    dynamics = LieGroupLangevin(n=n, cfg=cfg, rng=rng, chains=chains)
    dynamics.step(cfg.burn_in_steps)

    blocks = []
    collected = 0
    while collected < total:
        dynamics.step(cfg.thinning)
        blocks.append(dynamics.g.copy())
        collected += chains
    samples = np.concatenate(blocks, axis=0)[:total]
    logger.debug(
        f"Lie sampler drew {total} U({n}) samples from {chains} chains in {dynamics.steps_taken} steps; "
        f"max unitarity defect {float(np.max(unitarity_defect(samples))):.2e}"
    )
    return samples.reshape(shape + (n, n))


def haar_unitary_qr(n: int, rng: Optional[np.random.Generator] = None, size: Size = None) -> np.ndarray:
    """Exact Haar unitaries from the QR factorization of complex Ginibre matrices."""
    if n < 1:
        raise ValueError(f"Unitary dimension must be >= 1, got {n}")
    rng = rng if rng is not None else np.random.default_rng()
    shape, _ = _count(size)
    z = (rng.standard_normal(shape + (n, n)) + 1j * rng.standard_normal(shape + (n, n))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[..., None, :]


@dataclass(frozen=True)
class HaarSampler:
    """Selects the Haar sampler used by the state generators ("lie" or "qr")."""
    method: str = "qr"
    lie: LieSamplerConfig = field(default_factory=LieSamplerConfig)

    def __post_init__(self):
        if self.method not in ("lie", "qr"):
            raise ValueError(f"Unknown Haar sampling method: {self.method}")

    def sample(self, n: int, rng: np.random.Generator, size: Size = None) -> np.ndarray:
        if self.method == "lie":
            return haar_unitary_lie(n, self.lie, rng, size=size)
        return haar_unitary_qr(n, rng, size=size)


class PooledHaar:
    """
    Hands out unitaries drawn ahead of time, in order, one pool per dimension.

    Lets a per-record generator consume unitaries from a shared Markov chain
    run while its other draws come from the record's own stream.
    """
    method = "pooled"

    def __init__(self, pools: Dict[int, np.ndarray]):
        self._pools = {n: np.asarray(pool).reshape(-1, n, n) for n, pool in pools.items()}
        self._cursor = {n: 0 for n in self._pools}

    def sample(self, n: int, rng: Optional[np.random.Generator] = None, size: Size = None) -> np.ndarray:
        shape, total = _count(size)
        if n not in self._pools:
            raise ValueError(f"No pooled unitaries of dimension {n}")
        start = self._cursor[n]
        if start + total > self._pools[n].shape[0]:
            raise ValueError(f"Pool of U({n}) exhausted: {total} requested, {self._pools[n].shape[0] - start} left")
        self._cursor[n] = start + total
        return self._pools[n][start:start + total].reshape(shape + (n, n))
