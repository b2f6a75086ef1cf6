"""
Statistical Acceptance Runs

Larger-sample checks of structure preservation, mirror round trips, the Lie
Haar sampler and the no-mirror baseline. Deselected by default; run with
`pytest -m slow`.
"""
import numpy as np
import pytest
import torch

from mirrorstate.config import ArchConfig, DiffusionSchedule, LieSamplerConfig, MirrorConfig
from mirrorstate.diffusion import GuidanceSpec, ScoreNetwork, generate_states
from mirrorstate.metrics import energy_mmd
from mirrorstate.mirror import decode, encode
from mirrorstate.quantum import (
    ClassLabel,
    StateClass,
    haar_unitary_lie,
    haar_unitary_qr,
    random_density_matrix,
    unitarity_defect,
)

pytestmark = pytest.mark.slow

SCHEDULE = DiffusionSchedule()


def _as_real(u):
    flat = u.reshape(u.shape[0], -1)
    return np.concatenate([flat.real, flat.imag], axis=1)


def test_untrained_checkpoint_generates_only_valid_states():
    """10,000 two-qubit samples from a freshly initialized network all decode to density matrices."""
    net = ScoreNetwork(16, ArchConfig(hidden_dim=64, residual_blocks=2, time_embed_dim=16, norm_groups=8))
    spec = GuidanceSpec(2.0, ClassLabel.one_hot(StateClass.PAIRWISE))
    result = generate_states(
        net, MirrorConfig(), spec, SCHEDULE, steps=100, count=10_000,
        seed=0, batch_size=2_000,
    )
    summary = result.summary()
    assert summary["passed"] == 10_000
    assert summary["max_hermiticity_defect"] <= 1e-10
    assert summary["min_eigenvalue"] > 0.0
    assert summary["max_trace_defect"] <= 1e-12


@pytest.mark.parametrize("n", [4, 16])
def test_mirror_round_trip_on_random_density_matrices(n):
    rng = np.random.default_rng(n)
    rho = random_density_matrix(n, rng, size=1_000)
    errors = np.linalg.norm(decode(encode(rho)) - rho, axis=(-2, -1))
    assert np.max(errors) <= 1e-10


def test_lie_sampler_matches_haar_moments_and_qr_oracle():
    rng = np.random.default_rng(0)
    lie = haar_unitary_lie(4, LieSamplerConfig(), rng, size=10_000)
    assert np.max(unitarity_defect(lie)) <= 1e-10
    trace_moment = np.mean(np.abs(np.trace(lie, axis1=-2, axis2=-1)) ** 2)
    assert trace_moment == pytest.approx(1.0, abs=0.1)

    oracle_a = haar_unitary_qr(4, np.random.default_rng(1), size=1_000)
    oracle_b = haar_unitary_qr(4, np.random.default_rng(2), size=1_000)
    self_distance = energy_mmd(_as_real(oracle_a), _as_real(oracle_b))
    assert energy_mmd(_as_real(lie[::10]), _as_real(oracle_a)) <= 3.0 * self_distance


def test_no_mirror_sampling_violates_positivity_where_mirror_does_not():
    def zero(x, t):
        return torch.zeros_like(x)

    def run(mirror):
        return generate_states(
            zero, mirror, None, SCHEDULE, steps=50, count=2_000,
            seed=3, dim=16,
        ).summary()

    assert run(MirrorConfig(enabled=False))["psd_violation_rate"] > 0.0
    assert run(MirrorConfig())["psd_violation_rate"] == 0.0
