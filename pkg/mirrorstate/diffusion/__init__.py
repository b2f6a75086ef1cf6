"""Score-based diffusion in the dual vector space: schedule, network, training, sampling and checkpoints."""
from .schedule import forward_perturb, gaussian_score, loss_weight, marginal_variance, mean_coeff, sample_times
from .network import ParameterSegment, ScoreNetwork, embed_time, score_forward
from .training import (
    DSMDraw,
    ResumeState,
    TrainingDivergedError,
    TrainingResult,
    draw_dsm,
    dsm_loss,
    dsm_objective,
    train,
)
from .sampling import (
    GenerationResult,
    GuidanceSpec,
    SamplingError,
    generate_states,
    guided_score,
    sample_pf_ode,
    sample_reverse_sde,
)
from .checkpoint import (
    Checkpoint,
    CheckpointFormatError,
    checkpoint_from_bytes,
    checkpoint_to_bytes,
    load_checkpoint,
    save_checkpoint,
)

__all__ = [
    'forward_perturb', 'gaussian_score', 'loss_weight', 'marginal_variance', 'mean_coeff', 'sample_times',
    'ParameterSegment', 'ScoreNetwork', 'embed_time', 'score_forward',
    'DSMDraw', 'ResumeState', 'TrainingDivergedError', 'TrainingResult', 'draw_dsm', 'dsm_loss',
    'dsm_objective', 'train',
    'GenerationResult', 'GuidanceSpec', 'SamplingError', 'generate_states', 'guided_score',
    'sample_pf_ode', 'sample_reverse_sde',
    'Checkpoint', 'CheckpointFormatError', 'checkpoint_from_bytes', 'checkpoint_to_bytes',
    'load_checkpoint', 'save_checkpoint',
]
