"""
Variance-preserving (Ornstein-Uhlenbeck) forward process dx = -x dt + √2 dw.

Given x₀ the marginal at time t is N(e^{-t} x₀, (1 - e^{-2t}) I), which makes the
conditional score available in closed form for denoising score matching.
"""

from typing import Optional, Tuple, Union

import torch

from mirrorstate.config import DiffusionSchedule

TimeLike = Union[float, torch.Tensor]


def _as_time(t: TimeLike, like: torch.Tensor) -> torch.Tensor:
    return torch.as_tensor(t, dtype=like.dtype, device=like.device)


def mean_coeff(t: torch.Tensor) -> torch.Tensor:
    """e^{-t}"""
    return torch.exp(-t)


def marginal_variance(t: torch.Tensor) -> torch.Tensor:
    """1 - e^{-2t}, computed without cancellation for small t."""
    return -torch.expm1(-2.0 * t)


def loss_weight(t: torch.Tensor) -> torch.Tensor:
    return marginal_variance(t)


def sample_times(
    count: int, schedule: DiffusionSchedule, generator: Optional[torch.Generator] = None
) -> torch.Tensor:
    """Uniform times on [t_min, t_max]."""
    u = torch.rand(count, generator=generator, dtype=torch.float64)
    return schedule.t_min + (schedule.t_max - schedule.t_min) * u


def check_times(t: torch.Tensor, schedule: DiffusionSchedule) -> None:
    # tiny slack absorbs the rounding of t_min + (t_max - t_min)·u
    slack = 1e-12 * schedule.t_max
    if torch.any(t < schedule.t_min - slack) or torch.any(t > schedule.t_max + slack):
        raise ValueError(
            f"Diffusion time outside [{schedule.t_min}, {schedule.t_max}]: "
            f"[{float(t.min()):.6g}, {float(t.max()):.6g}]"
        )


def forward_perturb(
    x0: torch.Tensor,
    t: TimeLike,
    schedule: DiffusionSchedule,
    generator: Optional[torch.Generator] = None,
    noise: Optional[torch.Tensor] = None,
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Samples x_t | x₀ and the matching score target.

    Args:
        x0 (torch.Tensor): clean vectors (B, d).
        t (TimeLike): scalar time or per-row times (B,).
        schedule (DiffusionSchedule): supplies the admissible time range.
        generator (Optional[torch.Generator]): noise source when `noise` is not given.
        noise (Optional[torch.Tensor]): explicit ε, same shape as x0.

    Returns:
        (x_t, score_target) with x_t = e^{-t} x₀ + √(1 - e^{-2t}) ε and
        score_target = -(x_t - e^{-t} x₀) / (1 - e^{-2t}).

    Raises:
        ValueError: if any t lies outside [t_min, t_max].
    """
    t = _as_time(t, x0)
    check_times(t.reshape(-1), schedule)
    if noise is None:
        noise = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
    if t.ndim == 1:
        t = t[:, None]
    mean = mean_coeff(t) * x0
    variance = marginal_variance(t)
    xt = mean + torch.sqrt(variance) * noise
    target = -(xt - mean) / variance
    return xt, target


def gaussian_score(variance: float):
    """
    Exact marginal score of the forward process started from x₀ ~ N(0, variance·I).

    Returns a callable (x, t) -> -x / (variance·e^{-2t} + 1 - e^{-2t}).
    """
    def score(x: torch.Tensor, t: TimeLike) -> torch.Tensor:
        t = _as_time(t, x)
        if t.ndim == 1:
            t = t[:, None]
        total = variance * torch.exp(-2.0 * t) + marginal_variance(t)
        return -x / total

    return score
