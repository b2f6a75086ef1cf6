"""
⚙️ Configuration Management
============================
Environment settings plus the validated run configuration for the
mirror-diffusion pipeline.

Environment variables are read once at import (with optional .env support).
Run configuration is a tree of pydantic sections resolved from defaults, a
flat `section.key = value` file, CLI flags and `--set` overrides; its
canonical text rendering is embedded into every artifact.
"""

import os
import math
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Mapping, Optional, Tuple

import toml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

# Optional: support .env files if python-dotenv is installed; otherwise define a no-op loader.
try:
    from dotenv import load_dotenv  # type: ignore
except Exception:
    def load_dotenv(*args, **kwargs):
        return False

load_dotenv()

logger = logging.getLogger(__name__)

class ConfigError(Exception):
    """Custom exception for configuration errors."""
    pass

# --- Environment Settings ---

def _validate_url(url: str, name: str) -> str:
    """Validates a URL environment variable."""
    if not url or not url.startswith(('http://', 'https://')):
        raise ConfigError(f"Invalid or missing {name}: {url}")
    return url

def _get_environment() -> str:
    """Retrieves environment type."""
    env = os.getenv("MIRRORSTATE_ENVIRONMENT", "development").lower()
    if env not in ["development", "staging", "production"]:
        logger.warning(f"Unknown environment '{env}', defaulting to 'development'.")
        env = "development"
    return env

def _get_log_level(environment: str) -> str:
    """Retrieves the log level name; DEBUG by default in development."""
    default = "DEBUG" if environment == "development" else "INFO"
    level = (os.getenv("MIRRORSTATE_LOG_LEVEL") or default).upper()
    if level not in ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]:
        raise ConfigError(f"Invalid MIRRORSTATE_LOG_LEVEL: {level}")
    return level

def _get_sentry_dsn() -> Optional[str]:
    """Retrieves SENTRY_DSN (optional)."""
    dsn = os.getenv("SENTRY_DSN")
    if dsn:
        try:
            _validate_url(dsn, "SENTRY_DSN")
        except ConfigError as e:
            logger.warning(f"Invalid SENTRY_DSN provided, disabling Sentry: {e}")
            return None
    return dsn

def _get_threads() -> int:
    """Retrieves the intra-op thread count used for reproducible numerics."""
    threads_str = os.getenv("MIRRORSTATE_THREADS") or "1"
    try:
        threads = int(threads_str)
        if threads < 1:
            raise ValueError("Thread count must be positive.")
    except ValueError:
        raise ConfigError(f"Invalid MIRRORSTATE_THREADS: {threads_str}. Must be a positive integer.")
    return threads

def _get_default_config_path() -> Optional[Path]:
    """Retrieves MIRRORSTATE_CONFIG (optional run-config file)."""
    path = os.getenv("MIRRORSTATE_CONFIG")
    if not path:
        return None
    if not Path(path).is_file():
        raise ConfigError(f"MIRRORSTATE_CONFIG points to a missing file: {path}")
    return Path(path)

# --- Load Environment Values ---
try:
    ENVIRONMENT = _get_environment()
    LOG_LEVEL = _get_log_level(ENVIRONMENT)
    SENTRY_DSN = _get_sentry_dsn()
    NUM_THREADS = _get_threads()
    DEFAULT_CONFIG_PATH = _get_default_config_path()
    logger.debug(f"Environment settings loaded for environment: {ENVIRONMENT}")
except ConfigError as e:
    logger.critical(f"Configuration error: {e}")
    raise

# --- Run Configuration Sections ---

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class QubitDistConfig(_Section):
    """Single-qubit eigenvalue range: lambda_1, lambda_2 ~ Uniform[lambda_min, lambda_max]."""
    lambda_min: float = Field(1.0, gt=0.0)
    lambda_max: float = 3.0

    @model_validator(mode="after")
    def _check_range(self):
        if self.lambda_max < self.lambda_min:
            raise ValueError(f"lambda_max ({self.lambda_max}) must be >= lambda_min ({self.lambda_min})")
        return self


class LieSamplerConfig(_Section):
    """Kinetic Langevin dynamics on U(n): friction, step, burn-in, thinning and parallel chains."""
    friction: float = Field(1.0, gt=0.0)
    step_size: float = Field(0.01, gt=0.0)
    burn_in_steps: int = Field(2000, ge=1)
    thinning: int = Field(50, ge=1)
    chains: int = Field(64, ge=1)


class GeneratorConfig(_Section):
    qubit: QubitDistConfig = QubitDistConfig()
    lie: LieSamplerConfig = LieSamplerConfig()
    haar_method: Literal["lie", "qr"] = "lie"


class DataConfig(_Section):
    qubits: int = Field(2, ge=1)
    counts: Tuple[int, int, int] = (100, 100, 100)
    seed: int = Field(0, ge=0, lt=2 ** 64)
    haar_method: Literal["lie", "qr"] = "lie"

    @field_validator("counts")
    @classmethod
    def _check_counts(cls, value):
        if any(c < 0 for c in value):
            raise ValueError(f"class counts must be non-negative, got {value}")
        return value


class MirrorConfig(_Section):
    """Vectorization convention and whether the diffusion runs in the mirror (dual) space."""
    isometric_scaling: bool = True
    enabled: bool = True


class ArchConfig(_Section):
    hidden_dim: int = Field(256, ge=1)
    residual_blocks: int = Field(4, ge=0)
    time_embed_dim: int = Field(64, ge=2)
    norm_groups: int = Field(8, ge=1)
    label_dim: int = Field(3, ge=1)

    @model_validator(mode="after")
    def _check_shapes(self):
        if self.time_embed_dim % 2:
            raise ValueError(f"time_embed_dim must be even, got {self.time_embed_dim}")
        if self.hidden_dim % self.norm_groups:
            raise ValueError(f"hidden_dim {self.hidden_dim} is not divisible by norm_groups {self.norm_groups}")
        return self


class DiffusionSchedule(_Section):
    """Variance-preserving OU process dx = -x dt + sqrt(2) dw on [t_min, t_max]."""
    t_min: float = 1e-3
    t_max: float = 5.0

    @model_validator(mode="after")
    def _check_horizon(self):
        if not 0.0 < self.t_min < self.t_max:
            raise ValueError(f"schedule requires 0 < t_min < t_max, got ({self.t_min}, {self.t_max})")
        return self

    @property
    def prior_variance(self) -> float:
        """sigma_T^2 = 1 - e^{-2 t_max}."""
        return -math.expm1(-2.0 * self.t_max)


class TrainConfig(_Section):
    batch_size: int = Field(256, ge=1)
    iterations: int = Field(20000, ge=0)
    learning_rate: float = Field(1e-3, gt=0.0)
    lr_decay: float = Field(0.995, gt=0.0)
    lr_decay_every: int = Field(1000, ge=1)
    weight_decay: float = Field(1e-4, ge=0.0)
    cond_dropout_prob: float = Field(0.1, ge=0.0, le=1.0)
    seed: int = Field(0, ge=0, lt=2 ** 63)
    log_every: int = Field(100, ge=1)
    loss_ema: float = Field(0.99, ge=0.0, lt=1.0)


def _check_convex(weights: Optional[Tuple[float, ...]]) -> Optional[Tuple[float, ...]]:
    if weights is None:
        return None
    if any(w < 0.0 or w > 1.0 for w in weights) or abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError(f"label weights must be a convex combination, got {weights}")
    return weights


class SampleConfig(_Section):
    steps: int = Field(500, ge=1)
    count: int = Field(1000, ge=0)
    sampler: Literal["sde", "ode"] = "sde"
    integrator: Literal["heun", "rk4"] = "heun"
    guidance: float = Field(1.0, ge=0.0)
    label: Optional[Tuple[float, float, float]] = None
    seed: int = Field(0, ge=0, lt=2 ** 63)
    batch_size: int = Field(1000, ge=1)

    @field_validator("label")
    @classmethod
    def _check_label(cls, value):
        return _check_convex(value)


class EvalConfig(_Section):
    projections: int = Field(512, ge=1)
    mswd_iterations: int = Field(200, ge=0)
    mswd_step: float = Field(0.1, gt=0.0)
    mswd_restarts: int = Field(8, ge=1)
    mmd_estimator: Literal["biased", "unbiased"] = "biased"
    w1_max_samples: int = Field(3000, ge=1)
    subsystem: Tuple[int, ...] = (1,)
    seed: int = Field(0, ge=0, lt=2 ** 63)


class GateConfig(_Section):
    """Exit-status thresholds for `eval`; a None threshold is not checked."""
    enabled: bool = False
    swd: Optional[float] = None
    mswd: Optional[float] = None
    w1: Optional[float] = None
    energy_mmd: Optional[float] = None
    negativity_w1: Optional[float] = None


class RuntimeConfig(_Section):
    threads: int = Field(NUM_THREADS, ge=1)


class RunConfig(_Section):
    """Fully resolved configuration for one pipeline command."""
    data: DataConfig = DataConfig()
    qubit: QubitDistConfig = QubitDistConfig()
    lie: LieSamplerConfig = LieSamplerConfig()
    mirror: MirrorConfig = MirrorConfig()
    arch: ArchConfig = ArchConfig()
    schedule: DiffusionSchedule = DiffusionSchedule()
    train: TrainConfig = TrainConfig()
    sample: SampleConfig = SampleConfig()
    eval: EvalConfig = EvalConfig()
    gate: GateConfig = GateConfig()
    runtime: RuntimeConfig = RuntimeConfig()

    def generator(self) -> GeneratorConfig:
        return GeneratorConfig(qubit=self.qubit, lie=self.lie, haar_method=self.data.haar_method)

    def canonical_text(self) -> str:
        return canonical_text(self)

# --- Flat Text Format ---

def format_value(value: Any) -> str:
    """Renders a config value as a canonical flat-file literal."""
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        text = ",".join(format_value(v) for v in value)
        return text + "," if len(value) == 1 else text
    if isinstance(value, str):
        return value
    return str(value)

def parse_value(text: str) -> Any:
    """Parses one flat-file value: TOML literal, `none`, comma list or bare string."""
    text = text.strip()
    if text.lower() in ("none", "null", ""):
        return None
    try:
        return toml.loads(f"v = {text}")["v"]
    except (ValueError, IndexError, KeyError, TypeError):
        pass
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    try:
        return float(text)
    except ValueError:
        return text

def flatten(data: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    flat = {}
    for key, value in data.items():
        name = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, prefix=f"{name}."))
        else:
            flat[name] = value
    return flat

def canonical_text(model: BaseModel) -> str:
    """Sorted `key = value` lines for a config model (stable across runs)."""
    flat = flatten(model.model_dump())
    return "".join(f"{key} = {format_value(flat[key])}\n" for key in sorted(flat))

def parse_flat_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parses `key = value` lines; blank lines and `#` comments are ignored."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got '{raw.strip()}'")
        key, value = line.split("=", 1)
        values[key.strip()] = parse_value(value)
    return values

def _apply(tree: Dict[str, Any], key: str, value: Any, known: Iterable[str]) -> None:
    if key not in known:
        raise ConfigError(f"Unknown configuration key: {key}")
    node = tree
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value

def load_run_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    base: Optional[RunConfig] = None,
) -> RunConfig:
    """
    Resolves a RunConfig: defaults (or `base`) < config file < overrides.

    Args:
        path (Optional[Path]): flat config file; defaults to MIRRORSTATE_CONFIG when unset.
        overrides (Optional[Mapping[str, Any]]): dotted keys to values (CLI flags, --set pairs).
        base (Optional[RunConfig]): starting point instead of the defaults.

    Returns:
        RunConfig: the validated configuration.

    Raises:
        ConfigError: unreadable file, unknown key or a value failing validation.
    """
    base = base or RunConfig()
    tree = base.model_dump()
    known = set(flatten(tree))

    path = path or DEFAULT_CONFIG_PATH
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"Cannot read config file {path}: {e}")
        for key, value in parse_flat_text(text, source=str(path)).items():
            _apply(tree, key, value, known)
        logger.info(f"Loaded run configuration from {path}")

    for key, value in (overrides or {}).items():
        _apply(tree, key, value, known)

    try:
        return RunConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}")

def run_config_from_text(text: str) -> RunConfig:
    """Rebuilds a RunConfig from its canonical text (as embedded in artifacts)."""
    tree = RunConfig().model_dump()
    known = set(flatten(tree))
    for key, value in parse_flat_text(text).items():
        _apply(tree, key, value, known)
    try:
        return RunConfig.model_validate(tree)
    except ValidationError as e:
        raise ConfigError(f"Invalid embedded configuration: {e}")

# --- Expose Configuration ---
__all__ = [
    'ConfigError', 'ENVIRONMENT', 'LOG_LEVEL', 'SENTRY_DSN', 'NUM_THREADS', 'DEFAULT_CONFIG_PATH',
    'QubitDistConfig', 'LieSamplerConfig', 'GeneratorConfig', 'DataConfig', 'MirrorConfig',
    'ArchConfig', 'DiffusionSchedule', 'TrainConfig', 'SampleConfig', 'EvalConfig', 'GateConfig',
    'RuntimeConfig', 'RunConfig', 'canonical_text', 'format_value', 'parse_value',
    'parse_flat_text', 'load_run_config', 'run_config_from_text',
]
