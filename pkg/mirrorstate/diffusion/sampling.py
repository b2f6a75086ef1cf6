"""
🌀 Reverse-Time Samplers
========================
Classifier-free guided scores, Euler-Maruyama for the reverse SDE and
Heun / RK4 for the probability-flow ODE, all on the uniform grid
t_max = t_0 > t_1 > … > t_N = t_min.

In reverse time τ the OU process gives
    SDE: dy = (y + 2·s(y, t)) dτ + √2 dw
    ODE: dy = (y + s(y, t)) dτ
Samplers accept a ScoreNetwork (with a GuidanceSpec) or any callable
score(x, t) -> tensor, which is how the analytic oracles are plugged in.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
import torch

from mirrorstate.config import DiffusionSchedule, MirrorConfig
from mirrorstate.diffusion.network import DTYPE, ScoreNetwork
from mirrorstate.linalg import TRACE_TOLERANCE, ValidityReport, validate_density
from mirrorstate.mirror import from_model_space, matrix_dim
from mirrorstate.quantum.labels import ClassLabel
from mirrorstate.streams import SAMPLE, derive_rng

logger = logging.getLogger(__name__)

ScoreFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]
ScoreModel = Union[ScoreNetwork, ScoreFn]


class SamplingError(ArithmeticError):
    """Raised when a sampler state becomes NaN or infinite."""
    pass


@dataclass(frozen=True)
class GuidanceSpec:
    """Guidance strength γ and target label; no label means unconditional sampling."""
    gamma: float = 1.0
    label: Optional[ClassLabel] = None

    def __post_init__(self):
        if not self.gamma >= 0.0:
            raise ValueError(f"Guidance strength must be >= 0, got {self.gamma}")


def guided_score(net: ScoreNetwork, x: torch.Tensor, t: Union[float, torch.Tensor], spec: GuidanceSpec) -> torch.Tensor:
    """(1 - γ)·s(x, t, ∅) + γ·s(x, t, c); the unconditional score when spec.label is None."""
    unconditional = net(x, t, None)
    if spec.label is None:
        return unconditional
    conditional = net(x, t, torch.from_numpy(spec.label.as_array()))
    return (1.0 - spec.gamma) * unconditional + spec.gamma * conditional


def as_score_fn(model: ScoreModel, spec: Optional[GuidanceSpec] = None) -> ScoreFn:
    if isinstance(model, ScoreNetwork):
        spec = spec or GuidanceSpec(label=None)
        return lambda x, t: guided_score(model, x, t, spec)
    return model


def sample_noise(seed: int, first_index: int, count: int, draws: int, dim: int) -> torch.Tensor:
    """
    Standard normals of shape (count, draws, dim).

    Row i comes from the stream derived from (seed, first_index + i), so a
    sample's prior draw and step noise do not depend on how samples are batched.
    """
    noise = np.empty((count, draws, dim))
    for i in range(count):
        noise[i] = derive_rng(seed, SAMPLE, first_index + i).standard_normal((draws, dim))
    return torch.from_numpy(noise)


def _initial_state(
    noise: Optional[torch.Tensor],
    schedule: DiffusionSchedule,
    x_init: Optional[torch.Tensor],
) -> torch.Tensor:
    if x_init is not None:
        return torch.as_tensor(x_init, dtype=DTYPE).clone()
    return math.sqrt(schedule.prior_variance) * noise[:, 0]


def _check_finite(x: torch.Tensor, step: int, sampler: str) -> None:
    if not torch.isfinite(x).all():
        raise SamplingError(f"{sampler} produced a non-finite state at step {step}")


def _resolve_dim(model: ScoreModel, dim: Optional[int]) -> int:
    if dim is not None:
        return dim
    if isinstance(model, ScoreNetwork):
        return model.input_dim
    raise ValueError("dim is required when sampling with a plain score function")


@torch.no_grad()
def sample_reverse_sde(
    model: ScoreModel,
    spec: Optional[GuidanceSpec],
    schedule: DiffusionSchedule,
    steps: int,
    count: int,
    seed: int = 0,
    dim: Optional[int] = None,
    x_init: Optional[torch.Tensor] = None,
    noise_scale: float = 1.0,
    first_index: int = 0,
) -> torch.Tensor:
    """
    Euler-Maruyama integration of the reverse SDE from N(0, σ_T² I) at t_max down to t_min.

    Args:
        model (ScoreModel): network or callable score.
        spec (Optional[GuidanceSpec]): guidance for a network model.
        schedule (DiffusionSchedule): time range.
        steps (int): number of grid steps (>= 1).
        count (int): samples to draw.
        seed (int): sampling seed; sample i uses the stream of (seed, first_index + i).
        dim (Optional[int]): vector length for callable models.
        x_init (Optional[torch.Tensor]): explicit starting states (count, dim).
        noise_scale (float): multiplies the injected noise; 0 gives the deterministic drift.
        first_index (int): global index of the first sample in this call.

    Returns:
        torch.Tensor: (count, dim) samples at t_min.

    Raises:
        SamplingError: the state became non-finite (reports the step index).
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    score = as_score_fn(model, spec)
    noise = sample_noise(seed, first_index, count, steps + 1, _resolve_dim(model, dim))
    x = _initial_state(noise, schedule, x_init)
    dt = (schedule.t_max - schedule.t_min) / steps
    for k in range(steps):
        t = schedule.t_max - k * dt
        drift = x + 2.0 * score(x, torch.full((x.shape[0],), t, dtype=DTYPE))
        x = x + drift * dt + noise_scale * math.sqrt(2.0 * dt) * noise[:, k + 1]
        _check_finite(x, k, "reverse SDE")
    return x


@torch.no_grad()
def sample_pf_ode(
    model: ScoreModel,
    spec: Optional[GuidanceSpec],
    schedule: DiffusionSchedule,
    steps: int,
    count: int,
    seed: int = 0,
    dim: Optional[int] = None,
    x_init: Optional[torch.Tensor] = None,
    integrator: str = "heun",
    first_index: int = 0,
) -> torch.Tensor:
    """
    Integrates the probability-flow ODE dy/dτ = y + s(y, t) from t_max to t_min.

    Only the initial draw is random; the trajectory itself is deterministic.
    `integrator` is "heun" (two score evaluations per step) or "rk4" (four).
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if integrator not in ("heun", "rk4"):
        raise ValueError(f"Unknown ODE integrator: {integrator}")
    score = as_score_fn(model, spec)
    noise = sample_noise(seed, first_index, count, 1, _resolve_dim(model, dim)) if x_init is None else None
    x = _initial_state(noise, schedule, x_init)
    dt = (schedule.t_max - schedule.t_min) / steps

    def velocity(y: torch.Tensor, t: float) -> torch.Tensor:
        return y + score(y, torch.full((y.shape[0],), t, dtype=DTYPE))

    for k in range(steps):
        t = schedule.t_max - k * dt
        t_next = schedule.t_max - (k + 1) * dt
        if integrator == "heun":
            k1 = velocity(x, t)
            k2 = velocity(x + dt * k1, t_next)
            x = x + 0.5 * dt * (k1 + k2)
        else:
            t_mid = t - 0.5 * dt
            k1 = velocity(x, t)
            k2 = velocity(x + 0.5 * dt * k1, t_mid)
            k3 = velocity(x + 0.5 * dt * k2, t_mid)
            k4 = velocity(x + dt * k3, t_next)
            x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(x, k, "probability-flow ODE")
    return x


@dataclass
class GenerationResult:
    """Decoded samples plus the validity scan of every output."""
    states: np.ndarray
    vectors: np.ndarray
    validity: ValidityReport
    mirror: bool

    def summary(self) -> dict:
        summary = self.validity.summary()
        summary["mirror"] = self.mirror
        return summary


def generate_states(
    model: ScoreModel,
    mirror: MirrorConfig,
    spec: Optional[GuidanceSpec],
    schedule: DiffusionSchedule,
    steps: int,
    count: int,
    seed: int = 0,
    sampler: str = "sde",
    integrator: str = "heun",
    batch_size: Optional[int] = None,
    dim: Optional[int] = None,
    tol: float = 1e-10,
) -> GenerationResult:
    """
    Samples model-space vectors and decodes them into matrices.

    With `mirror.enabled` every output is a valid density matrix and the
    trace defect is held to TRACE_TOLERANCE. Without it the vectors are only
    devectorized and the validity report carries the constraint-violation
    rate. Sample i always uses the noise stream of (seed, i), so the output
    does not depend on `batch_size`.
    """
    if sampler not in ("sde", "ode"):
        raise ValueError(f"Unknown sampler: {sampler}")
    dim = _resolve_dim(model, dim)
    n = matrix_dim(dim)
    batch_size = batch_size or max(count, 1)

    chunks = []
    for start in range(0, count, batch_size):
        size = min(batch_size, count - start)
        if sampler == "sde":
            chunk = sample_reverse_sde(model, spec, schedule, steps, size, seed, dim=dim, first_index=start)
        else:
            chunk = sample_pf_ode(
                model, spec, schedule, steps, size, seed, dim=dim, integrator=integrator, first_index=start
            )
        chunks.append(chunk.numpy())
        logger.debug(f"Sampled {start + size}/{count} vectors")

    vectors = np.concatenate(chunks, axis=0) if chunks else np.zeros((0, dim))
    states = from_model_space(vectors, mirror) if count else np.zeros((0, n, n), dtype=np.complex128)
    validity = validate_density(states, tol, TRACE_TOLERANCE if mirror.enabled else None)
    result = GenerationResult(states=states, vectors=vectors, validity=validity, mirror=mirror.enabled)

    summary = result.summary()
    if mirror.enabled and summary["passed"] != summary["count"]:
        logger.error(f"Mirror-path samples failed validation: {summary}")
    elif not mirror.enabled:
        logger.warning(
            f"No-mirror sampling: {summary['count'] - summary['passed']}/{summary['count']} samples invalid, "
            f"PSD violation rate {summary['psd_violation_rate']:.3f}"
        )
    return result
