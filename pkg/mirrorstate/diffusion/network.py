"""
🧠 Conditional Score Network
============================
Residual MLP s_θ(x, t, c) in float64:

    y_out = ResBlocks(Linear(x))
    t_out = MLP(sinusoidal(t))
    c_out = MLP(c)   or a learned null embedding when the label is absent/dropped
    out   = Outmod(GroupNorm(y_out + t_out + c_out))

Linear weights start fan-in uniform, biases at zero and the last Outmod layer
at zero, so a fresh network predicts a zero score.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Union

import numpy as np
import torch
from torch import nn

from mirrorstate.config import ArchConfig

logger = logging.getLogger(__name__)

DTYPE = torch.float64


def embed_time(t: Union[float, torch.Tensor], dim: int) -> torch.Tensor:
    """
    Sinusoidal embedding: [sin(t·ω_k)]_k followed by [cos(t·ω_k)]_k, ω_k = 10000^{-2k/dim}.

    Raises:
        ValueError: for odd `dim`.
    """
    if dim % 2:
        raise ValueError(f"Time embedding dimension must be even, got {dim}")
    t = torch.as_tensor(t, dtype=DTYPE)
    half = dim // 2
    frequencies = torch.pow(torch.tensor(10000.0, dtype=DTYPE), -2.0 * torch.arange(half, dtype=DTYPE) / dim)
    angles = t[..., None] * frequencies
    return torch.cat([torch.sin(angles), torch.cos(angles)], dim=-1)


def _mlp(widths: List[int]) -> nn.Sequential:
    layers: List[nn.Module] = []
    for k, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        if k:
            layers.append(nn.SiLU())
        layers.append(nn.Linear(fan_in, fan_out, dtype=DTYPE))
    return nn.Sequential(*layers)


class ResidualBlock(nn.Module):
    """h + MLP(h) with four linear layers."""

    def __init__(self, hidden: int):
        super().__init__()
        self.mlp = _mlp([hidden] * 5)

    def forward(self, h: torch.Tensor) -> torch.Tensor:
        return h + self.mlp(h)


@dataclass(frozen=True)
class ParameterSegment:
    name: str
    shape: tuple
    offset: int
    size: int


class ScoreNetwork(nn.Module):
    """Score model over dual vectors of length `input_dim`, conditioned on time and an optional label."""

    def __init__(self, input_dim: int, arch: Optional[ArchConfig] = None, generator: Optional[torch.Generator] = None):
        super().__init__()
        self.arch = arch or ArchConfig()
        self.input_dim = int(input_dim)
        hidden = self.arch.hidden_dim

        self.input_proj = nn.Linear(self.input_dim, hidden, dtype=DTYPE)
        self.blocks = nn.ModuleList([ResidualBlock(hidden) for _ in range(self.arch.residual_blocks)])
        self.time_mlp = _mlp([self.arch.time_embed_dim, hidden, hidden])
        self.cond_mlp = _mlp([self.arch.label_dim, hidden, hidden, hidden])
        self.null_embedding = nn.Parameter(torch.zeros(hidden, dtype=DTYPE))
        self.norm = nn.GroupNorm(self.arch.norm_groups, hidden, eps=1e-5, dtype=DTYPE)
        self.outmod = _mlp([hidden, hidden, hidden, hidden, self.input_dim])

        self.reset_parameters(generator)

    # --- Initialization & flat parameter views ---

    def reset_parameters(self, generator: Optional[torch.Generator] = None) -> None:
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    bound = 1.0 / math.sqrt(module.in_features)
                    module.weight.copy_(
                        (2.0 * torch.rand(module.weight.shape, generator=generator, dtype=DTYPE) - 1.0) * bound
                    )
                    module.bias.zero_()
            final = self.outmod[-1]
            final.weight.zero_()
            final.bias.zero_()
            self.null_embedding.zero_()
            self.norm.weight.fill_(1.0)
            self.norm.bias.zero_()

    def segments(self) -> List[ParameterSegment]:
        """Named parameter segments in registration order (the flat parameter layout)."""
        out, offset = [], 0
        for name, p in self.named_parameters():
            out.append(ParameterSegment(name=name, shape=tuple(p.shape), offset=offset, size=p.numel()))
            offset += p.numel()
        return out

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def flat_parameters(self) -> np.ndarray:
        with torch.no_grad():
            return torch.cat([p.reshape(-1) for p in self.parameters()]).numpy().astype(np.float64)

    def load_flat_parameters(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.parameter_count(),):
            raise ValueError(f"Expected {self.parameter_count()} parameters, got {flat.shape}")
        with torch.no_grad():
            for segment, p in zip(self.segments(), self.parameters()):
                chunk = flat[segment.offset:segment.offset + segment.size]
                p.copy_(torch.from_numpy(chunk.copy()).reshape(segment.shape))

    def flat_gradient(self) -> np.ndarray:
        return torch.cat([
            (p.grad if p.grad is not None else torch.zeros_like(p)).reshape(-1) for p in self.parameters()
        ]).detach().numpy().astype(np.float64)

    # --- Forward ---

    def condition(self, label: Optional[torch.Tensor], batch: int, drop: Optional[torch.Tensor] = None) -> torch.Tensor:
        null = self.null_embedding.expand(batch, -1)
        if label is None:
            return null
        label = torch.as_tensor(label, dtype=DTYPE)
        if label.ndim == 1:
            label = label.expand(batch, -1)
        if label.shape[-1] != self.arch.label_dim:
            raise ValueError(f"Label length {label.shape[-1]} does not match label_dim {self.arch.label_dim}")
        c_out = self.cond_mlp(label)
        if drop is not None:
            c_out = torch.where(drop[:, None], null, c_out)
        return c_out

    def forward(
        self,
        x: torch.Tensor,
        t: Union[float, torch.Tensor],
        label: Optional[torch.Tensor] = None,
        drop: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        """
        Args:
            x (torch.Tensor): (B, input_dim) inputs.
            t: scalar or (B,) diffusion times.
            label (Optional[torch.Tensor]): (B, label_dim) or (label_dim,) weights; None for unconditional.
            drop (Optional[torch.Tensor]): (B,) bool mask routing rows to the null embedding.

        Returns:
            torch.Tensor: (B, input_dim) score estimates.
        """
        if x.ndim != 2 or x.shape[-1] != self.input_dim:
            raise ValueError(f"Expected input of shape (B, {self.input_dim}), got {tuple(x.shape)}")
        batch = x.shape[0]
        t = torch.as_tensor(t, dtype=DTYPE)
        if t.ndim == 0:
            t = t.expand(batch)

        y_out = self.input_proj(x)
        for block in self.blocks:
            y_out = block(y_out)
        t_out = self.time_mlp(embed_time(t, self.arch.time_embed_dim))
        c_out = self.condition(label, batch, drop)
        return self.outmod(self.norm(y_out + t_out + c_out))


def score_forward(
    net: ScoreNetwork,
    x: torch.Tensor,
    t: Union[float, torch.Tensor],
    label: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    return net(x, t, label)
