"""Synthetic quantum training data: Haar unitaries, labeled state families and the QSD1 dataset format."""
from .haar import (
    HaarSampler,
    LieGroupLangevin,
    PooledHaar,
    haar_unitary_lie,
    haar_unitary_qr,
    lie_algebra_basis,
    unitarity_defect,
)
from .labels import ClassLabel, StateClass, interpolate_label
from .states import (
    build_entangler,
    fully_state,
    pairwise_state,
    product_state,
    random_density_matrix,
    random_hermitian_baseline,
    sample_qubit,
)
from .dataset import (
    DatasetFormatError,
    StateDataset,
    dataset_from_bytes,
    dataset_to_bytes,
    generate_dataset,
    read_dataset,
    write_dataset,
)

__all__ = [
    'HaarSampler', 'LieGroupLangevin', 'PooledHaar', 'haar_unitary_lie', 'haar_unitary_qr', 'lie_algebra_basis',
    'unitarity_defect', 'ClassLabel', 'StateClass', 'interpolate_label', 'build_entangler',
    'fully_state', 'pairwise_state', 'product_state', 'random_density_matrix',
    'random_hermitian_baseline', 'sample_qubit', 'DatasetFormatError', 'StateDataset',
    'dataset_from_bytes', 'dataset_to_bytes', 'generate_dataset', 'read_dataset', 'write_dataset',
]
