"""
Unit Tests for Evaluation Metrics (`mirrorstate/metrics/`)

Checks negativity on states with known entanglement, the distributional
distances on translated and identical clouds, the evaluation report with
its gate and the observables table.
"""
import json
import math

import numpy as np
import pytest
from scipy.stats import wasserstein_distance

from mirrorstate.config import GateConfig, GeneratorConfig
from mirrorstate.linalg import conj_transpose, kron
from mirrorstate.metrics import (
    OBSERVABLE_COLUMNS,
    EvalReport,
    MetricInputError,
    check_gate,
    energy_mmd,
    full_report,
    max_sliced_wasserstein,
    negativity,
    observables_frame,
    quantile_coupling,
    sliced_wasserstein,
    w1_1d,
    wasserstein_assignment,
    write_observables,
)
from mirrorstate.quantum import StateClass, StateDataset, generate_dataset, haar_unitary_qr

FAST_GENERATOR = GeneratorConfig(haar_method="qr")


def _bell_state():
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / math.sqrt(2.0)
    return np.outer(psi, psi).astype(np.complex128)


def _werner_state(p):
    return p * _bell_state() + (1.0 - p) * np.eye(4) / 4.0


@pytest.fixture(scope="module")
def dataset():
    return generate_dataset((20, 20, 20), 2, FAST_GENERATOR, seed=0)


# --- Negativity ---
def test_negativity_of_bell_state_is_one_half():
    assert negativity(_bell_state()) == pytest.approx(0.5, abs=1e-12)
    assert negativity(_bell_state(), subsystem=(2,)) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.2, 1 / 3, 0.6, 1.0])
def test_negativity_of_werner_states(p):
    assert negativity(_werner_state(p)) == pytest.approx(max(0.0, (3.0 * p - 1.0) / 4.0), abs=1e-12)


def test_negativity_of_product_states_vanishes(dataset):
    product = dataset.select(StateClass.PRODUCT).states
    values = negativity(product)
    assert values.shape == (20,)
    np.testing.assert_allclose(values, 0.0, atol=1e-12)


def test_negativity_detects_entangled_training_states(dataset):
    values = negativity(dataset.select(StateClass.FULLY).states)
    assert np.all(values >= -1e-15)
    assert np.max(values) > 1e-3


def test_negativity_is_invariant_under_local_unitaries(dataset):
    rng = np.random.default_rng(11)
    entangled = dataset.select(StateClass.FULLY).states
    states = entangled[rng.integers(0, len(entangled), size=100)]
    local = kron(haar_unitary_qr(2, rng, size=100), haar_unitary_qr(2, rng, size=100))
    rotated = local @ states @ conj_transpose(local)
    np.testing.assert_allclose(negativity(rotated), negativity(states), rtol=0.0, atol=1e-10)


# --- One-dimensional distances ---
def test_w1_1d_shift_and_empty_input():
    assert w1_1d([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0)
    with pytest.raises(MetricInputError):
        w1_1d([], [1.0])


def test_w1_1d_satisfies_the_triangle_inequality():
    rng = np.random.default_rng(12)
    for _ in range(100):
        a, b, c = (rng.normal(rng.normal(), rng.uniform(0.5, 2.0), size=rng.integers(1, 40)) for _ in range(3))
        assert w1_1d(a, c) <= w1_1d(a, b) + w1_1d(b, c) + 1e-12


def test_quantile_coupling_reproduces_w1_for_unequal_sizes():
    rng = np.random.default_rng(0)
    pa, pb = rng.standard_normal(7), rng.standard_normal(11) + 0.5
    ia, ib, mass = quantile_coupling(pa, pb)
    assert mass.sum() == pytest.approx(1.0)
    assert np.sum(mass * np.abs(pa[ia] - pb[ib])) == pytest.approx(wasserstein_distance(pa, pb), rel=1e-12)


# --- Sliced and full-dimensional distances ---
def test_distances_of_identical_clouds_are_zero():
    rng = np.random.default_rng(1)
    a = rng.standard_normal((50, 4))
    assert sliced_wasserstein(a, a, 64, np.random.default_rng(0)) == pytest.approx(0.0, abs=1e-14)
    assert max_sliced_wasserstein(a, a, iterations=5, restarts=2) == pytest.approx(0.0, abs=1e-14)
    assert energy_mmd(a, a) == pytest.approx(0.0, abs=1e-12)
    distance, m = wasserstein_assignment(a, a)
    assert distance == pytest.approx(0.0, abs=1e-14)
    assert m == 50


def test_translated_clouds():
    """For B = A + c: MSWD = W1 = ‖c‖ and SWD = E|⟨θ, c⟩| < ‖c‖."""
    rng = np.random.default_rng(2)
    a = rng.standard_normal((60, 4))
    shift = np.array([3.0, 0.0, 0.0, 4.0])
    b = a + shift

    assert max_sliced_wasserstein(a, b, iterations=50, restarts=4) == pytest.approx(5.0, rel=1e-6)
    swd = sliced_wasserstein(a, b, 2000, np.random.default_rng(3))
    assert 0.0 < swd < 5.0
    distance, _ = wasserstein_assignment(a, b)
    assert distance == pytest.approx(5.0, rel=1e-9)


def test_sliced_wasserstein_in_one_dimension_is_w1():
    a = np.array([[0.0], [1.0], [2.0]])
    assert sliced_wasserstein(a, a + 1.5, 8) == pytest.approx(1.5)


def test_max_sliced_dominates_coordinate_marginals():
    rng = np.random.default_rng(4)
    a = rng.standard_normal((40, 3))
    b = rng.standard_normal((30, 3)) * np.array([1.0, 2.0, 0.5])
    value = max_sliced_wasserstein(a, b, iterations=10, restarts=2)
    marginals = [w1_1d(a[:, k], b[:, k]) for k in range(3)]
    assert value >= max(marginals) - 1e-12
    assert value >= sliced_wasserstein(a, b, 256) - 1e-12


def test_energy_mmd_by_hand_and_estimators():
    assert energy_mmd(np.array([[0.0]]), np.array([[1.0]])) == pytest.approx(2.0)
    a = np.array([[0.0], [2.0]])
    b = np.array([[1.0], [3.0]])
    # cross mean (1 + 3 + 1 + 1) / 4 = 1.5; within means 1 (biased) or 2 (unbiased)
    assert energy_mmd(a, b) == pytest.approx(1.0)
    assert energy_mmd(a, b, "unbiased") == pytest.approx(-1.0)
    with pytest.raises(MetricInputError):
        energy_mmd(a[:1], b, "unbiased")
    with pytest.raises(MetricInputError):
        energy_mmd(a, b, "linear")


def test_wasserstein_assignment_subsamples_unequal_inputs(caplog):
    rng = np.random.default_rng(5)
    a, b = rng.standard_normal((30, 2)), rng.standard_normal((20, 2))
    with caplog.at_level("WARNING"):
        _, m = wasserstein_assignment(a, b, max_samples=15)
    assert m == 15
    assert "subsamples" in caplog.text


def test_metrics_reject_dimension_mismatch():
    with pytest.raises(MetricInputError):
        sliced_wasserstein(np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(MetricInputError):
        energy_mmd(np.zeros((0, 2)), np.zeros((3, 2)))


# --- Report and gate ---
def test_full_report_of_identical_datasets(dataset):
    report = full_report(dataset, dataset, config_text="eval.seed = 0\n")
    for metric in ("swd", "mswd", "w1", "energy_mmd", "negativity_w1"):
        assert getattr(report, metric) == pytest.approx(0.0, abs=1e-10)
    assert report.generated_count == report.reference_count == 60
    assert report.qubits == 2
    assert report.subsystem == (1,)
    assert report.notes

    restored = EvalReport.from_json(report.to_json())
    assert restored == report
    assert json.loads(report.to_json())["config"] == "eval.seed = 0\n"


def test_full_report_is_deterministic_for_a_seed(dataset):
    other = generate_dataset((20, 20, 20), 2, FAST_GENERATOR, seed=1)
    first = full_report(dataset, other, seed=7)
    second = full_report(dataset, other, seed=7)
    assert first == second
    assert first.swd > 0.0


def test_full_report_rejects_empty_or_mismatched(dataset):
    empty = dataset.subset([])
    with pytest.raises(MetricInputError):
        full_report(empty, dataset)
    one_qubit = StateDataset(qubits=1, labels=np.zeros((1, 3)), states=np.eye(2)[None] / 2.0)
    with pytest.raises(MetricInputError):
        full_report(one_qubit, dataset)


def test_check_gate_lists_exceeded_thresholds(dataset):
    other = generate_dataset((20, 20, 20), 2, FAST_GENERATOR, seed=2)
    report = full_report(dataset, other)
    assert check_gate(report, GateConfig(enabled=True)) == []
    failures = check_gate(report, GateConfig(enabled=True, swd=0.0, w1=1e6))
    assert len(failures) == 1
    assert failures[0].startswith("swd=")


# --- Observables ---
def test_observables_frame_columns_and_values(dataset, tmp_path):
    frame = observables_frame(dataset)
    assert list(frame.columns) == OBSERVABLE_COLUMNS
    assert len(frame) == 60
    assert set(frame["class_label"]) == {"product", "pairwise", "fully"}
    assert np.all(frame["eig1"] >= frame["eig2"])
    assert not frame["dual_re_11"].isna().any()

    path = tmp_path / "observables.csv"
    write_observables(dataset, path)
    assert path.read_text().splitlines()[0] == ",".join(OBSERVABLE_COLUMNS)


def test_observables_dual_entries_are_nan_for_singular_states():
    states = np.stack([kron(np.diag([1.0, 0.0]), np.eye(2) / 2.0), np.eye(4) / 4.0]).astype(np.complex128)
    frame = observables_frame(StateDataset(qubits=2, labels=np.zeros((2, 3)), states=states))
    assert np.isnan(frame["dual_re_11"][0])
    assert frame["dual_re_11"][1] == pytest.approx(1.0 - math.log(4.0))
