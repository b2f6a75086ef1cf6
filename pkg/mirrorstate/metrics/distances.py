"""
📏 Distributional Distances
===========================
Two-sample distances between point clouds in R^d:

- `w1_1d`: exact 1-D Wasserstein-1.
- `sliced_wasserstein`: mean W1 over random unit projections.
- `max_sliced_wasserstein`: best projection found by projected gradient ascent.
- `energy_mmd`: squared MMD with the energy kernel k(x, y) = -‖x - y‖.
- `wasserstein_assignment`: full-dimensional W1 by exact assignment.
"""

import logging
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist
from scipy.stats import wasserstein_distance

logger = logging.getLogger(__name__)

MMD_CHUNK = 2048


class MetricInputError(ValueError):
    """Raised for empty or dimensionally incompatible metric inputs."""
    pass


def _as_samples(x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise MetricInputError(f"{name} must be a nonempty (N, d) sample array, got shape {x.shape}")
    return x


def _check_pair(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    a = _as_samples(a, "A")
    b = _as_samples(b, "B")
    if a.shape[1] != b.shape[1]:
        raise MetricInputError(f"Dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return a, b


def w1_1d(a: np.ndarray, b: np.ndarray) -> float:
    """Exact empirical W1 between two 1-D samples (quantile coupling / CDF integral)."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise MetricInputError("w1_1d needs two nonempty samples")
    return float(wasserstein_distance(a, b))


def quantile_coupling(pa: np.ndarray, pb: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Optimal 1-D coupling between empirical measures as (index_a, index_b, mass) triples.

    Quantile levels of both samples are merged; each interval between
    consecutive levels pairs the order statistics covering it.
    """
    order_a = np.argsort(pa, kind="stable")
    order_b = np.argsort(pb, kind="stable")
    na, nb = pa.size, pb.size
    if na == nb:
        return order_a, order_b, np.full(na, 1.0 / na)
    levels = np.union1d(np.arange(1, na + 1) / na, np.arange(1, nb + 1) / nb)
    mass = np.diff(np.concatenate([[0.0], levels]))
    keep = mass > 0.0
    levels, mass = levels[keep], mass[keep]
    rank_a = np.minimum(np.searchsorted(np.arange(1, na + 1) / na, levels, side="left"), na - 1)
    rank_b = np.minimum(np.searchsorted(np.arange(1, nb + 1) / nb, levels, side="left"), nb - 1)
    return order_a[rank_a], order_b[rank_b], mass


def _random_directions(count: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    directions = rng.standard_normal((count, dim))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def _projected_w1(a: np.ndarray, b: np.ndarray, directions: np.ndarray) -> np.ndarray:
    pa = a @ directions.T
    pb = b @ directions.T
    if a.shape[0] == b.shape[0]:
        return np.mean(np.abs(np.sort(pa, axis=0) - np.sort(pb, axis=0)), axis=0)
    return np.array([w1_1d(pa[:, k], pb[:, k]) for k in range(directions.shape[0])])


def sliced_wasserstein(a: np.ndarray, b: np.ndarray, projections: int = 512, rng: Optional[np.random.Generator] = None) -> float:
    """
    Mean of w1_1d over `projections` uniformly random unit directions.

    Raises:
        MetricInputError: empty samples or dimension mismatch.
    """
    a, b = _check_pair(a, b)
    if projections < 1:
        raise MetricInputError(f"projections must be >= 1, got {projections}")
    rng = rng if rng is not None else np.random.default_rng(0)
    directions = _random_directions(projections, a.shape[1], rng)
    return float(np.mean(_projected_w1(a, b, directions)))


def _ascent_gradient(a: np.ndarray, b: np.ndarray, direction: np.ndarray) -> np.ndarray:
    ia, ib, mass = quantile_coupling(a @ direction, b @ direction)
    gap = a[ia] - b[ib]
    signs = np.sign(gap @ direction)
    return (mass * signs) @ gap


def max_sliced_wasserstein(
    a: np.ndarray,
    b: np.ndarray,
    iterations: int = 200,
    restarts: int = 8,
    rng: Optional[np.random.Generator] = None,
    step: float = 0.1,
    candidates: int = 64,
) -> float:
    """
    Approximates max over unit θ of W1(⟨θ, A⟩, ⟨θ, B⟩).

    Candidate starts are the coordinate axes plus `candidates` random
    directions; the best `restarts` of them are refined by projected gradient
    ascent (θ <- normalize(θ + step·∇)). The best value visited is returned, so
    the result is never below the largest coordinate-marginal W1.
    """
    a, b = _check_pair(a, b)
    rng = rng if rng is not None else np.random.default_rng(0)
    dim = a.shape[1]
    starts = np.concatenate([np.eye(dim), _random_directions(max(candidates, restarts), dim, rng)], axis=0)
    values = _projected_w1(a, b, starts)
    best = float(np.max(values))

    for index in np.argsort(-values, kind="stable")[:restarts]:
        direction = starts[index].copy()
        for _ in range(iterations):
            gradient = _ascent_gradient(a, b, direction)
            candidate = direction + step * gradient
            norm = np.linalg.norm(candidate)
            if norm == 0.0:
                break
            direction = candidate / norm
            best = max(best, float(_projected_w1(a, b, direction[None, :])[0]))
    return best


def _mean_distance(x: np.ndarray, y: np.ndarray, exclude_diagonal: bool = False) -> float:
    total = 0.0
    for start in range(0, x.shape[0], MMD_CHUNK):
        total += float(np.sum(cdist(x[start:start + MMD_CHUNK], y, metric="euclidean")))
    pairs = x.shape[0] * y.shape[0]
    if exclude_diagonal:
        # diagonal distances are zero, only the normalization changes
        pairs -= x.shape[0]
    return total / pairs


def energy_mmd(a: np.ndarray, b: np.ndarray, estimator: str = "biased") -> float:
    """
    Squared energy-kernel MMD: 2·E‖a - b‖ - E‖a - a'‖ - E‖b - b'‖.

    `biased` is the V-statistic (diagonal terms included); `unbiased` is the
    U-statistic. The raw estimate may be slightly negative.
    """
    a, b = _check_pair(a, b)
    if estimator not in ("biased", "unbiased"):
        raise MetricInputError(f"Unknown MMD estimator: {estimator}")
    unbiased = estimator == "unbiased"
    if unbiased and min(a.shape[0], b.shape[0]) < 2:
        raise MetricInputError("The unbiased estimator needs at least two samples per side")
    cross = _mean_distance(a, b)
    within_a = _mean_distance(a, a, exclude_diagonal=unbiased)
    within_b = _mean_distance(b, b, exclude_diagonal=unbiased)
    value = 2.0 * cross - within_a - within_b
    if value < 0.0:
        logger.debug(f"Energy-MMD estimate below zero: {value:.3e}")
    return value


def wasserstein_assignment(
    a: np.ndarray, b: np.ndarray, max_samples: int = 3000, rng: Optional[np.random.Generator] = None
) -> Tuple[float, int]:
    """
    Full-dimensional empirical W1 by exact assignment on equal-size batches.

    Unequal or oversized inputs are subsampled without replacement to
    m = min(|A|, |B|, max_samples) points each.

    Returns:
        (distance, m)
    """
    a, b = _check_pair(a, b)
    rng = rng if rng is not None else np.random.default_rng(0)
    m = min(a.shape[0], b.shape[0], max_samples)
    if max(a.shape[0], b.shape[0]) > m:
        logger.warning(f"W1 assignment subsamples {a.shape[0]} / {b.shape[0]} points to {m} per side")
    if a.shape[0] != m:
        a = a[np.sort(rng.choice(a.shape[0], size=m, replace=False))]
    if b.shape[0] != m:
        b = b[np.sort(rng.choice(b.shape[0], size=m, replace=False))]
    cost = cdist(a, b, metric="euclidean")
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean()), m
