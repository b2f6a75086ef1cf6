"""
Unit Tests for Haar Sampling, State Families and Datasets (`mirrorstate/quantum/`)

Verifies unitarity and Haar moments of both samplers, the structure of the
three entanglement families, label handling, deterministic dataset
generation and the QSD1 binary format.
"""
import numpy as np
import pytest

from mirrorstate.config import GeneratorConfig, LieSamplerConfig, QubitDistConfig
from mirrorstate.linalg import conj_transpose, eigh, kron, kron_all, partial_trace, validate_density
from mirrorstate.quantum import (
    ClassLabel,
    DatasetFormatError,
    HaarSampler,
    LieGroupLangevin,
    PooledHaar,
    StateClass,
    StateDataset,
    build_entangler,
    dataset_from_bytes,
    dataset_to_bytes,
    fully_state,
    generate_dataset,
    haar_unitary_lie,
    haar_unitary_qr,
    interpolate_label,
    lie_algebra_basis,
    pairwise_state,
    product_state,
    random_density_matrix,
    random_hermitian_baseline,
    read_dataset,
    sample_qubit,
    unitarity_defect,
    write_dataset,
)
from mirrorstate.quantum.labels import describe_label_row

QUBIT = QubitDistConfig()
FAST_GENERATOR = GeneratorConfig(haar_method="qr")
FAST_LIE = LieSamplerConfig(step_size=0.05, burn_in_steps=400, thinning=20, chains=64)


# --- Haar sampling ---
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_lie_algebra_basis_is_orthonormal_and_skew_hermitian(n):
    basis = lie_algebra_basis(n)
    assert basis.shape == (n * n, n, n)
    np.testing.assert_allclose(basis, -conj_transpose(basis), atol=1e-15)
    gram = np.real(np.einsum("aij,bij->ab", np.conj(basis), basis))
    np.testing.assert_allclose(gram, np.eye(n * n), atol=1e-14)


def test_qr_sampler_is_unitary_with_haar_moments():
    """E|U_11|^2 = 1/n and E|Tr U|^2 = 1 under the Haar measure."""
    rng = np.random.default_rng(0)
    u = haar_unitary_qr(4, rng, size=4000)
    assert u.shape == (4000, 4, 4)
    assert float(np.max(unitarity_defect(u))) < 1e-12
    assert np.mean(np.abs(u[:, 0, 0]) ** 2) == pytest.approx(0.25, abs=0.02)
    assert np.mean(np.abs(np.trace(u, axis1=1, axis2=2)) ** 2) == pytest.approx(1.0, abs=0.1)


def test_qr_sampler_single_matrix_shape():
    assert haar_unitary_qr(2, np.random.default_rng(1)).shape == (2, 2)


def test_lie_dynamics_stays_on_the_group():
    dynamics = LieGroupLangevin(n=4, cfg=FAST_LIE, rng=np.random.default_rng(2), chains=8)
    dynamics.step(500)
    assert dynamics.steps_taken == 500
    assert float(np.max(unitarity_defect(dynamics.g))) < 1e-10


def test_lie_sampler_matches_haar_moments():
    rng = np.random.default_rng(3)
    u = haar_unitary_lie(2, FAST_LIE, rng, size=2048)
    assert u.shape == (2048, 2, 2)
    assert float(np.max(unitarity_defect(u))) < 1e-10
    assert np.mean(np.abs(u[:, 0, 0]) ** 2) == pytest.approx(0.5, abs=0.06)
    assert np.mean(np.abs(np.trace(u, axis1=1, axis2=2)) ** 2) == pytest.approx(1.0, abs=0.25)


def test_lie_sampler_is_deterministic_for_a_seed():
    a = haar_unitary_lie(2, FAST_LIE, np.random.default_rng(4), size=10)
    b = haar_unitary_lie(2, FAST_LIE, np.random.default_rng(4), size=10)
    np.testing.assert_array_equal(a, b)


def test_haar_sampler_rejects_unknown_method():
    with pytest.raises(ValueError):
        HaarSampler("ginibre")


def test_pooled_haar_hands_out_unitaries_in_order():
    pool = haar_unitary_qr(2, np.random.default_rng(0), size=3)
    pooled = PooledHaar({2: pool})
    np.testing.assert_array_equal(pooled.sample(2, None, size=(2,)), pool[:2])
    np.testing.assert_array_equal(pooled.sample(2, None), pool[2])
    with pytest.raises(ValueError):
        pooled.sample(2, None)
    with pytest.raises(ValueError):
        pooled.sample(4, None)


# --- State families ---
def test_single_qubit_spectrum_stays_in_configured_ratio():
    rho = sample_qubit(QUBIT, np.random.default_rng(5), size=200)
    eigenvalues = eigh(rho).eigenvalues
    assert validate_density(rho).all_passed()
    assert np.all(eigenvalues >= 0.25 - 1e-12)
    assert np.all(eigenvalues <= 0.75 + 1e-12)


def test_product_state_is_a_tensor_product():
    rho = product_state(2, QUBIT, np.random.default_rng(6))
    a, b = partial_trace(rho, [1]), partial_trace(rho, [2])
    np.testing.assert_allclose(rho, kron(a, b), atol=1e-14)


@pytest.mark.parametrize("generator", [pairwise_state, fully_state])
def test_entangled_families_share_the_product_spectrum(generator):
    """Identically seeded generators draw the same product state, so spectra agree."""
    product = product_state(4, QUBIT, np.random.default_rng(7), size=3)
    entangled = generator(4, QUBIT, np.random.default_rng(7), size=3)
    assert validate_density(entangled).all_passed()
    np.testing.assert_allclose(eigh(entangled).eigenvalues, eigh(product).eigenvalues, atol=1e-12)
    assert not np.allclose(entangled, product)


def test_pairwise_state_requires_even_qubits():
    with pytest.raises(ValueError):
        pairwise_state(3, QUBIT, np.random.default_rng(8))
    with pytest.raises(ValueError):
        fully_state(1, QUBIT, np.random.default_rng(8))


def test_build_entangler_places_legs_on_requested_qubits():
    rng = np.random.default_rng(9)
    a, b = haar_unitary_qr(2, rng), haar_unitary_qr(2, rng)
    identity = np.eye(2)
    np.testing.assert_allclose(build_entangler((1, 2), kron(a, b), 2), kron(a, b))
    np.testing.assert_allclose(build_entangler((1, 3), kron(a, b), 3), kron_all([a, identity, b]), atol=1e-14)
    np.testing.assert_allclose(build_entangler((2, 3), kron(a, b), 3), kron_all([identity, a, b]), atol=1e-14)
    with pytest.raises(ValueError):
        build_entangler((2, 2), kron(a, b), 3)


def test_random_density_and_baseline():
    rng = np.random.default_rng(10)
    assert validate_density(random_density_matrix(4, rng, size=20)).all_passed()
    baseline = random_hermitian_baseline(4, rng, size=20)
    np.testing.assert_allclose(baseline, conj_transpose(baseline), atol=1e-15)
    eigenvalues = eigh(baseline).eigenvalues
    assert np.all(eigenvalues > -1e-12) and np.all(eigenvalues < 1.0 + 1e-12)


# --- Labels ---
def test_class_label_parsing_and_description():
    assert ClassLabel.parse("pairwise") == ClassLabel.one_hot(StateClass.PAIRWISE)
    assert ClassLabel.parse("0.5,0,0.5").weights == (0.5, 0.0, 0.5)
    assert ClassLabel.one_hot(StateClass.FULLY).describe() == "fully"
    assert ClassLabel((0.5, 0.0, 0.5)).describe() == "0.5,0,0.5"
    with pytest.raises(ValueError):
        ClassLabel.parse("0.7,0.7,0")
    with pytest.raises(ValueError):
        ClassLabel((1.0, 0.0))


def test_interpolate_label():
    product = ClassLabel.one_hot(StateClass.PRODUCT)
    fully = ClassLabel.one_hot(StateClass.FULLY)
    mixed = interpolate_label(product, fully, 0.25)
    np.testing.assert_allclose(mixed.as_array(), [0.75, 0.0, 0.25])
    assert interpolate_label(product, fully, 0.0) == product
    with pytest.raises(ValueError):
        interpolate_label(product, fully, 1.5)


def test_describe_label_row_falls_back_for_non_convex_rows():
    assert describe_label_row([0.0, 1.0, 0.0]) == "pairwise"
    assert describe_label_row([0.0, 0.0, 0.0]) == "0,0,0"


# --- Dataset generation ---
def test_generate_dataset_counts_labels_and_validity():
    dataset = generate_dataset((3, 4, 5), 2, FAST_GENERATOR, seed=42)
    assert len(dataset) == 12
    assert dataset.class_counts() == {"product": 3, "pairwise": 4, "fully": 5}
    assert dataset.validity().all_passed()
    assert len(dataset.select(StateClass.FULLY)) == 5
    assert np.all(dataset.labels.sum(axis=1) == 1.0)


def test_generate_dataset_is_deterministic_and_seed_sensitive():
    a = generate_dataset((4, 4, 4), 2, FAST_GENERATOR, seed=1)
    b = generate_dataset((4, 4, 4), 2, FAST_GENERATOR, seed=1)
    c = generate_dataset((4, 4, 4), 2, FAST_GENERATOR, seed=2)
    np.testing.assert_array_equal(a.states, b.states)
    np.testing.assert_array_equal(a.labels, b.labels)
    assert not np.array_equal(a.states, c.states)


def test_generate_dataset_shuffles_classes():
    dataset = generate_dataset((20, 20, 20), 2, FAST_GENERATOR, seed=3)
    classes = np.argmax(dataset.labels, axis=1)
    assert not np.all(np.diff(classes) >= 0)


def test_generate_dataset_rejects_bad_class_mix():
    with pytest.raises(ValueError):
        generate_dataset((1, 1), 2, FAST_GENERATOR)
    with pytest.raises(ValueError):
        generate_dataset((1, 1, 1), 3, FAST_GENERATOR)


def test_generate_dataset_with_zero_records():
    dataset = generate_dataset((0, 0, 0), 2, FAST_GENERATOR)
    assert len(dataset) == 0
    assert dataset.states.shape == (0, 4, 4)


def _contains(stack, matrix):
    return any(np.allclose(candidate, matrix, rtol=0.0, atol=1e-15) for candidate in stack)


def test_generate_dataset_records_depend_only_on_seed_and_index():
    """Product records are indices 0..3 in both mixes, so they come out identical."""
    small = generate_dataset((4, 0, 0), 2, FAST_GENERATOR, seed=8)
    large = generate_dataset((4, 4, 4), 2, FAST_GENERATOR, seed=8)
    products = large.select(StateClass.PRODUCT).states
    assert all(_contains(products, record) for record in small.states)


def test_generate_dataset_with_pooled_lie_unitaries():
    cfg = GeneratorConfig(lie=FAST_LIE, haar_method="lie")
    a = generate_dataset((2, 3, 2), 2, cfg, seed=4)
    b = generate_dataset((2, 3, 2), 2, cfg, seed=4)
    np.testing.assert_array_equal(a.states, b.states)
    assert a.validity().all_passed()
    assert a.class_counts() == {"product": 2, "pairwise": 3, "fully": 2}


# --- QSD1 format ---
def test_dataset_bytes_preserve_records_and_provenance():
    dataset = generate_dataset((2, 2, 2), 2, FAST_GENERATOR, seed=5, isometric_scaling=False, config_text="data.seed = 5\n")
    restored = dataset_from_bytes(dataset_to_bytes(dataset))
    np.testing.assert_array_equal(restored.states, dataset.states)
    np.testing.assert_array_equal(restored.labels, dataset.labels)
    assert restored.seed == 5
    assert restored.qubits == 2
    assert restored.isometric_scaling is False
    assert restored.generator_config == "data.seed = 5\n"


def test_dataset_file_io(tmp_path):
    dataset = generate_dataset((1, 1, 1), 2, FAST_GENERATOR, seed=6)
    path = write_dataset(dataset, tmp_path / "train.qsd")
    assert path.read_bytes()[:4] == b"QSD1"
    np.testing.assert_array_equal(read_dataset(path).states, dataset.states)


def test_dataset_from_bytes_rejects_malformed_payloads():
    data = dataset_to_bytes(generate_dataset((1, 1, 1), 2, FAST_GENERATOR, seed=7))
    with pytest.raises(DatasetFormatError):
        dataset_from_bytes(b"XXXX" + data[4:])
    with pytest.raises(DatasetFormatError):
        dataset_from_bytes(data[:100])
    with pytest.raises(DatasetFormatError):
        dataset_from_bytes(data + b"\x00")


def test_dataset_from_bytes_rejects_non_hermitian_record():
    states = np.zeros((1, 2, 2), dtype=np.complex128)
    states[0] = [[0.5, 0.3], [0.0, 0.5]]
    dataset = StateDataset(qubits=1, labels=np.array([[1.0, 0.0, 0.0]]), states=states)
    with pytest.raises(DatasetFormatError):
        dataset_from_bytes(dataset_to_bytes(dataset))


def test_read_dataset_missing_file(tmp_path):
    with pytest.raises(DatasetFormatError):
        read_dataset(tmp_path / "missing.qsd")
