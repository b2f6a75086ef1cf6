"""
💾 QCK1 Checkpoints
===================
Self-describing model files (little-endian):

    magic b"QCK1" | u32 version | u32 text length | UTF-8 config text
    | f64 × P parameters (segment order) | u64 iterations | f64 final loss
    [ b"RSM1" | u64 step | f64 loss EMA | u32 n + n bytes generator state
      | f64 × P first moments | f64 × P second moments ]

The text block holds `model.*` lines (input dimension, loss weighting) followed
by the canonical run configuration, from which the architecture, schedule and
mirror settings are rebuilt. The optional RSM1 block carries the optimizer
state for resumed training.
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from mirrorstate.config import ConfigError, RunConfig, parse_flat_text, run_config_from_text
from mirrorstate.diffusion.network import ScoreNetwork
from mirrorstate.diffusion.training import ResumeState

logger = logging.getLogger(__name__)

MAGIC = b"QCK1"
RESUME_MAGIC = b"RSM1"
FORMAT_VERSION = 1
LOSS_WEIGHTING = "variance"

_PREFIX = struct.Struct("<4sII")
_TAIL = struct.Struct("<Qd")
_RESUME_HEAD = struct.Struct("<4sQdI")


class CheckpointFormatError(ValueError):
    """Raised for malformed QCK1 files."""
    pass


@dataclass
class Checkpoint:
    """Trained parameters plus everything needed to rebuild and reuse the network."""
    config: RunConfig
    input_dim: int
    parameters: np.ndarray
    iterations: int = 0
    final_loss: float = 0.0
    resume: Optional[ResumeState] = None

    @property
    def arch(self):
        return self.config.arch

    @property
    def schedule(self):
        return self.config.schedule

    @property
    def mirror(self):
        return self.config.mirror

    @property
    def seed(self) -> int:
        return self.config.train.seed

    @classmethod
    def from_network(
        cls,
        net: ScoreNetwork,
        config: RunConfig,
        iterations: int = 0,
        final_loss: float = 0.0,
        resume: Optional[ResumeState] = None,
    ) -> "Checkpoint":
        return cls(
            config=config,
            input_dim=net.input_dim,
            parameters=net.flat_parameters(),
            iterations=iterations,
            final_loss=final_loss,
            resume=resume,
        )

    def build_network(self) -> ScoreNetwork:
        net = ScoreNetwork(self.input_dim, self.config.arch)
        net.load_flat_parameters(self.parameters)
        net.eval()
        return net

    def text_block(self) -> str:
        header = f"model.input_dim = {self.input_dim}\nmodel.loss_weighting = {LOSS_WEIGHTING}\n"
        return header + self.config.canonical_text()


def checkpoint_to_bytes(checkpoint: Checkpoint) -> bytes:
    text = checkpoint.text_block().encode("utf-8")
    parts = [
        _PREFIX.pack(MAGIC, FORMAT_VERSION, len(text)),
        text,
        np.asarray(checkpoint.parameters, dtype="<f8").tobytes(),
        _TAIL.pack(int(checkpoint.iterations), float(checkpoint.final_loss)),
    ]
    resume = checkpoint.resume
    if resume is not None:
        parts.append(_RESUME_HEAD.pack(RESUME_MAGIC, int(resume.step), float(resume.loss_ema), len(resume.generator_state)))
        parts.append(resume.generator_state)
        parts.append(np.asarray(resume.exp_avg, dtype="<f8").tobytes())
        parts.append(np.asarray(resume.exp_avg_sq, dtype="<f8").tobytes())
    return b"".join(parts)


def checkpoint_from_bytes(data: bytes, source: str = "<bytes>") -> Checkpoint:
    """
    Parses a QCK1 payload.

    Raises:
        CheckpointFormatError: bad magic/version, unparsable config block or a size mismatch.
    """
    if len(data) < _PREFIX.size:
        raise CheckpointFormatError(f"{source}: truncated header")
    magic, version, text_length = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{source}: unsupported QCK1 version {version}")

    offset = _PREFIX.size
    text = data[offset:offset + text_length].decode("utf-8")
    offset += text_length

    model_lines = [line for line in text.splitlines(keepends=True) if line.startswith("model.")]
    run_lines = [line for line in text.splitlines(keepends=True) if not line.startswith("model.")]
    try:
        model_keys = parse_flat_text("".join(model_lines), source=source)
        config = run_config_from_text("".join(run_lines))
        input_dim = int(model_keys["model.input_dim"])
    except (ConfigError, KeyError, ValueError) as e:
        raise CheckpointFormatError(f"{source}: invalid config block: {e}")

    count = ScoreNetwork(input_dim, config.arch).parameter_count()
    end = offset + 8 * count + _TAIL.size
    if len(data) < end:
        raise CheckpointFormatError(f"{source}: expected {count} parameters, payload is truncated")
    parameters = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64)
    offset += 8 * count
    iterations, final_loss = _TAIL.unpack_from(data, offset)
    offset = end

    resume = None
    if offset < len(data):
        if len(data) < offset + _RESUME_HEAD.size:
            raise CheckpointFormatError(f"{source}: truncated resume block")
        marker, step, loss_ema, state_length = _RESUME_HEAD.unpack_from(data, offset)
        if marker != RESUME_MAGIC:
            raise CheckpointFormatError(f"{source}: unexpected trailing data")
        offset += _RESUME_HEAD.size
        generator_state = data[offset:offset + state_length]
        offset += state_length
        if len(data) != offset + 16 * count:
            raise CheckpointFormatError(f"{source}: resume block size mismatch")
        exp_avg = np.frombuffer(data, dtype="<f8", count=count, offset=offset).astype(np.float64)
        exp_avg_sq = np.frombuffer(data, dtype="<f8", count=count, offset=offset + 8 * count).astype(np.float64)
        resume = ResumeState(
            step=step, loss_ema=loss_ema, generator_state=bytes(generator_state), exp_avg=exp_avg, exp_avg_sq=exp_avg_sq
        )

    return Checkpoint(
        config=config,
        input_dim=input_dim,
        parameters=parameters,
        iterations=iterations,
        final_loss=final_loss,
        resume=resume,
    )


def save_checkpoint(checkpoint: Checkpoint, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(checkpoint_to_bytes(checkpoint))
    logger.info(f"Saved checkpoint ({checkpoint.iterations} iterations, loss {checkpoint.final_loss:.6g}) to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"Cannot read checkpoint {path}: {e}")
    return checkpoint_from_bytes(data, source=str(path))
