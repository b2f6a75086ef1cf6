"""
🏋️ Denoising Score-Matching Training
====================================
Trains a ScoreNetwork on model-space vectors with classifier-free label
dropout, AdamW and a step learning-rate decay. The loop is deterministic for a
given seed and thread count, and can be resumed bit-exactly from the state
stored in a checkpoint.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import torch

from mirrorstate.config import ArchConfig, DiffusionSchedule, TrainConfig
from mirrorstate.diffusion.network import DTYPE, ScoreNetwork
from mirrorstate.diffusion.schedule import forward_perturb, loss_weight, sample_times

logger = logging.getLogger(__name__)

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class TrainingDivergedError(ArithmeticError):
    """Raised when the training loss becomes NaN or infinite."""
    pass


@dataclass
class DSMDraw:
    """The random ingredients of one loss evaluation."""
    t: torch.Tensor
    noise: torch.Tensor
    drop: torch.Tensor


@dataclass
class ResumeState:
    """Optimizer and RNG state needed to continue training bit-exactly."""
    step: int
    loss_ema: float
    generator_state: bytes
    exp_avg: np.ndarray
    exp_avg_sq: np.ndarray


@dataclass
class TrainingResult:
    net: ScoreNetwork
    iterations: int
    final_loss: float
    resume: ResumeState
    history: List[dict] = field(default_factory=list)


def draw_dsm(
    x0: torch.Tensor,
    schedule: DiffusionSchedule,
    cond_dropout_prob: float,
    generator: Optional[torch.Generator] = None,
) -> DSMDraw:
    batch = x0.shape[0]
    t = sample_times(batch, schedule, generator)
    noise = torch.randn(x0.shape, generator=generator, dtype=DTYPE)
    drop = torch.rand(batch, generator=generator, dtype=DTYPE) < cond_dropout_prob
    return DSMDraw(t=t, noise=noise, drop=drop)


def dsm_objective(
    net: ScoreNetwork,
    x0: torch.Tensor,
    labels: Optional[torch.Tensor],
    draw: DSMDraw,
    schedule: DiffusionSchedule,
) -> torch.Tensor:
    """Mean over the batch of λ(t)·‖s_θ(x_t, t, c) - ∇log p_t(x_t | x₀)‖² for a fixed draw."""
    xt, target = forward_perturb(x0, draw.t, schedule, noise=draw.noise)
    prediction = net(xt, draw.t, labels, drop=draw.drop if labels is not None else None)
    squared = torch.sum((prediction - target) ** 2, dim=-1)
    return torch.mean(loss_weight(draw.t) * squared)


def dsm_loss(
    net: ScoreNetwork,
    x0: torch.Tensor,
    labels: Optional[torch.Tensor],
    schedule: DiffusionSchedule,
    cond_dropout_prob: float,
    generator: Optional[torch.Generator] = None,
) -> torch.Tensor:
    """
    Denoising score-matching loss with t ~ U[t_min, t_max] and label dropout.

    The returned scalar carries the autograd graph; call .backward() for the
    parameter gradient.
    """
    if x0.shape[0] == 0:
        raise ValueError("dsm_loss needs a nonempty batch")
    draw = draw_dsm(x0, schedule, cond_dropout_prob, generator)
    return dsm_objective(net, x0, labels, draw, schedule)


def _build_optimizer(net: ScoreNetwork, cfg: TrainConfig):
    optimizer = torch.optim.AdamW(
        net.parameters(), lr=cfg.learning_rate, betas=ADAM_BETAS, eps=ADAM_EPS, weight_decay=cfg.weight_decay
    )
    scheduler = torch.optim.lr_scheduler.StepLR(optimizer, step_size=cfg.lr_decay_every, gamma=cfg.lr_decay)
    return optimizer, scheduler


def _restore(net: ScoreNetwork, optimizer, scheduler, resume: ResumeState) -> None:
    params = list(net.parameters())
    state = {}
    offset = 0
    step_dtype = torch.get_default_dtype()
    for index, p in enumerate(params):
        size = p.numel()
        state[index] = {
            "step": torch.tensor(float(resume.step), dtype=step_dtype),
            "exp_avg": torch.from_numpy(resume.exp_avg[offset:offset + size].copy()).reshape(p.shape),
            "exp_avg_sq": torch.from_numpy(resume.exp_avg_sq[offset:offset + size].copy()).reshape(p.shape),
        }
        offset += size
    if resume.step:
        optimizer.load_state_dict({"state": state, "param_groups": optimizer.state_dict()["param_groups"]})
    # replay the decay schedule so the learning rate matches an uninterrupted run
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        for _ in range(resume.step):
            scheduler.step()


def _snapshot(net: ScoreNetwork, optimizer, step: int, loss_ema: float, generator: torch.Generator) -> ResumeState:
    exp_avg, exp_avg_sq = [], []
    for p in net.parameters():
        state = optimizer.state.get(p, {})
        exp_avg.append(state["exp_avg"].reshape(-1) if "exp_avg" in state else torch.zeros(p.numel(), dtype=DTYPE))
        exp_avg_sq.append(state["exp_avg_sq"].reshape(-1) if "exp_avg_sq" in state else torch.zeros(p.numel(), dtype=DTYPE))
    return ResumeState(
        step=step,
        loss_ema=loss_ema,
        generator_state=bytes(generator.get_state().numpy().tobytes()),
        exp_avg=torch.cat(exp_avg).detach().numpy().astype(np.float64),
        exp_avg_sq=torch.cat(exp_avg_sq).detach().numpy().astype(np.float64),
    )


def train(
    vectors: np.ndarray,
    labels: Optional[np.ndarray],
    cfg: TrainConfig,
    schedule: DiffusionSchedule,
    arch: ArchConfig,
    net: Optional[ScoreNetwork] = None,
    resume: Optional[ResumeState] = None,
    on_log: Optional[Callable[[dict], None]] = None,
) -> TrainingResult:
    """
    Runs `cfg.iterations` optimizer steps of denoising score matching.

    Args:
        vectors (np.ndarray): (N, d) model-space training vectors.
        labels (Optional[np.ndarray]): (N, label_dim) weights, or None for unconditional training.
        cfg (TrainConfig): optimization settings.
        schedule (DiffusionSchedule): diffusion time range.
        arch (ArchConfig): network shape (ignored when `net` is passed).
        net (Optional[ScoreNetwork]): network to continue from; freshly initialized from `cfg.seed` otherwise.
        resume (Optional[ResumeState]): optimizer/RNG state saved by a previous run on `net`.
        on_log (Optional[Callable[[dict], None]]): receives {iteration, loss, loss_ema, lr} every `cfg.log_every` steps.

    Returns:
        TrainingResult: trained network, total iteration count, final moving-average loss and resume state.

    Raises:
        ValueError: empty dataset.
        TrainingDivergedError: non-finite loss.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] == 0:
        raise ValueError(f"Training needs a nonempty (N, d) array, got shape {vectors.shape}")

    generator = torch.Generator().manual_seed(cfg.seed)
    if net is None:
        net = ScoreNetwork(vectors.shape[1], arch, generator=generator)
    if net.input_dim != vectors.shape[1]:
        raise ValueError(f"Network input_dim {net.input_dim} does not match data dimension {vectors.shape[1]}")

    optimizer, scheduler = _build_optimizer(net, cfg)
    start, loss_ema = 0, math.nan
    if resume is not None:
        _restore(net, optimizer, scheduler, resume)
        generator.set_state(torch.frombuffer(bytearray(resume.generator_state), dtype=torch.uint8))
        start, loss_ema = resume.step, resume.loss_ema
        logger.info(f"Resuming training at iteration {start} (loss EMA {loss_ema:.6g})")

    data = torch.from_numpy(vectors)
    label_data = torch.from_numpy(np.asarray(labels, dtype=np.float64)) if labels is not None else None
    history: List[dict] = []
    end = start + cfg.iterations

    net.train()
    for iteration in range(start + 1, end + 1):
        index = torch.randint(data.shape[0], (cfg.batch_size,), generator=generator)
        batch_labels = label_data[index] if label_data is not None else None
        loss = dsm_loss(net, data[index], batch_labels, schedule, cfg.cond_dropout_prob, generator)
        value = float(loss.detach())
        if not math.isfinite(value):
            raise TrainingDivergedError(f"Non-finite loss {value} at iteration {iteration}")

        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
        lr = optimizer.param_groups[0]["lr"]
        scheduler.step()

        loss_ema = value if math.isnan(loss_ema) else cfg.loss_ema * loss_ema + (1.0 - cfg.loss_ema) * value
        if iteration % cfg.log_every == 0 or iteration == end:
            record = {"iteration": iteration, "loss": value, "loss_ema": loss_ema, "lr": lr}
            history.append(record)
            if on_log is not None:
                on_log(record)
            logger.info(f"Iteration {iteration}/{end}: loss={value:.6g} ema={loss_ema:.6g} lr={lr:.3e}")
    net.eval()

    final_loss = loss_ema if not math.isnan(loss_ema) else 0.0
    return TrainingResult(
        net=net,
        iterations=end,
        final_loss=final_loss,
        resume=_snapshot(net, optimizer, end, loss_ema, generator),
        history=history,
    )
