"""
🗃️ Labeled State Datasets
=========================
Generation of the three-class training set and the QSD1 binary format.

QSD1 layout (little-endian):
    magic b"QSD1" | u32 version | u32 n | u32 label length L | u64 record count
    | u64 seed | u8 isometric_scaling
    then per record: L × f64 label weights, n² × (f64 re, f64 im) row-major
    then trailer: u32 byte length + UTF-8 config text.
"""

import logging
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterator, Optional, Sequence, Tuple, Union

import numpy as np

from mirrorstate.config import GeneratorConfig, canonical_text
from mirrorstate.linalg import ValidityReport, conj_transpose, validate_density
from mirrorstate.quantum.haar import HaarSampler, PooledHaar
from mirrorstate.quantum.labels import ClassLabel, StateClass, describe_label_row
from mirrorstate.quantum.states import fully_pairs, fully_state, pairwise_pairs, pairwise_state, product_state
from mirrorstate.streams import HAAR_POOL, RECORD, SHUFFLE, derive_rng

logger = logging.getLogger(__name__)

MAGIC = b"QSD1"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIIIQQB")
TRAILER_LENGTH = struct.Struct("<I")
LOAD_HERMITICITY_TOLERANCE = 1e-10

_GENERATORS = {
    StateClass.PRODUCT: product_state,
    StateClass.PAIRWISE: pairwise_state,
    StateClass.FULLY: fully_state,
}


class DatasetFormatError(ValueError):
    """Raised when a QSD1 file is malformed or fails the load-time checks."""
    pass


@dataclass
class StateDataset:
    """
    Labeled density matrices with provenance.

    Attributes:
        qubits (int): qubit count; every matrix is 2^qubits square.
        labels (np.ndarray): (N, L) float64 label weights.
        states (np.ndarray): (N, n, n) complex128 matrices.
        seed (int): seed the records were drawn with.
        isometric_scaling (bool): vectorization convention for downstream consumers.
        generator_config (str): canonical config text echoed from the producer.
    """
    qubits: int
    labels: np.ndarray
    states: np.ndarray
    seed: int = 0
    isometric_scaling: bool = True
    generator_config: str = ""

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.labels.ndim != 2:
            self.labels = self.labels.reshape(-1, len(StateClass))
        self.states = np.ascontiguousarray(self.states, dtype=np.complex128).reshape(-1, self.dim, self.dim)
        if self.labels.shape[0] != self.states.shape[0]:
            raise ValueError(f"{self.labels.shape[0]} labels for {self.states.shape[0]} states")

    @property
    def dim(self) -> int:
        return 2 ** self.qubits

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def records(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        return zip(self.labels, self.states)

    def class_counts(self) -> Dict[str, int]:
        """Record counts keyed by class name (or weight string for mixed labels)."""
        counts: Dict[str, int] = {}
        for row in self.labels:
            name = describe_label_row(row)
            counts[name] = counts.get(name, 0) + 1
        return counts

    def validity(self, tol: float = 1e-10) -> ValidityReport:
        return validate_density(self.states, tol)

    def select(self, state_class: StateClass) -> "StateDataset":
        """Records whose label is the one-hot vector of `state_class`."""
        target = ClassLabel.one_hot(state_class).as_array()
        mask = np.all(self.labels == target, axis=1)
        return self.subset(np.flatnonzero(mask))

    def subset(self, indices: Sequence[int]) -> "StateDataset":
        indices = np.asarray(indices, dtype=np.int64)
        return StateDataset(
            qubits=self.qubits,
            labels=self.labels[indices],
            states=self.states[indices],
            seed=self.seed,
            isometric_scaling=self.isometric_scaling,
            generator_config=self.generator_config,
        )


def _haar_pools(
    state_class: StateClass,
    count: int,
    qubits: int,
    haar: HaarSampler,
    seed: int,
) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """Per-record stacks of U(2) and U(4) draws for the Lie sampler; None when records draw their own."""
    if haar.method != "lie":
        return None
    pairs = 0
    if state_class is StateClass.PAIRWISE:
        pairs = len(pairwise_pairs(qubits))
    elif state_class is StateClass.FULLY:
        pairs = len(fully_pairs(qubits))
    rng = derive_rng(seed, HAAR_POOL, state_class.value)
    singles = haar.sample(2, rng, size=(count, qubits))
    gates = haar.sample(4, rng, size=(count, pairs)) if pairs else np.zeros((count, 0, 4, 4), dtype=np.complex128)
    return singles, gates


def generate_dataset(
    class_mix: Sequence[int],
    qubits: int,
    cfg: Optional[GeneratorConfig] = None,
    seed: int = 0,
    isometric_scaling: bool = True,
    config_text: Optional[str] = None,
) -> StateDataset:
    """
    Draws a shuffled, one-hot labeled dataset of product / pairwise / fully entangled states.

    Record i (counting product, then pairwise, then fully entangled records)
    draws from the stream derived from (seed, i); a separate stream drives the
    shuffle. With the Lie sampler the Haar draws of a class come from one
    chain run and are handed out by record index, since every chain needs
    its own burn-in.

    Args:
        class_mix (Sequence[int]): record counts per class (product, pairwise, fully).
        qubits (int): qubits per state.
        cfg (Optional[GeneratorConfig]): eigenvalue range and Haar sampler settings.
        seed (int): 64-bit dataset seed.
        isometric_scaling (bool): convention recorded in the dataset header.
        config_text (Optional[str]): text to embed instead of the generator config.

    Returns:
        StateDataset: every record passes validate_density at 1e-10.
    """
    cfg = cfg or GeneratorConfig()
    if len(class_mix) != len(StateClass) or any(int(c) < 0 for c in class_mix):
        raise ValueError(f"class_mix must hold {len(StateClass)} non-negative counts, got {class_mix}")

    haar = HaarSampler(cfg.haar_method, cfg.lie)
    dim = 2 ** qubits

    labels = [np.zeros((0, len(StateClass)))]
    states = [np.zeros((0, dim, dim), dtype=np.complex128)]
    first_index = 0
    for state_class, count in zip(StateClass, class_mix):
        count = int(count)
        if count == 0:
            continue
        generator = _GENERATORS[state_class]
        pools = _haar_pools(state_class, count, qubits, haar, seed)
        block = np.empty((count, dim, dim), dtype=np.complex128)
        for j in range(count):
            rng = derive_rng(seed, RECORD, first_index + j)
            record_haar = haar if pools is None else PooledHaar({2: pools[0][j], 4: pools[1][j]})
            block[j] = generator(qubits, cfg.qubit, rng, haar=record_haar)
        states.append(block)
        labels.append(np.tile(ClassLabel.one_hot(state_class).as_array(), (count, 1)))
        first_index += count
        logger.info(f"Generated {count} {state_class.slug} states on {qubits} qubits")

    labels = np.concatenate(labels, axis=0)
    states = np.concatenate(states, axis=0)
    order = derive_rng(seed, SHUFFLE).permutation(states.shape[0])

    dataset = StateDataset(
        qubits=qubits,
        labels=labels[order],
        states=states[order],
        seed=seed,
        isometric_scaling=isometric_scaling,
        generator_config=config_text if config_text is not None else canonical_text(cfg),
    )
    if len(dataset):
        report = dataset.validity()
        if not report.all_passed():
            summary = report.summary()
            logger.error(f"Generated dataset failed the validity scan: {summary}")
            raise ValueError(f"{summary['count'] - summary['passed']} generated records are not valid density matrices")
    return dataset


# --- QSD1 I/O ---

def dataset_to_bytes(dataset: StateDataset) -> bytes:
    n = dataset.dim
    label_length = dataset.labels.shape[1]
    header = HEADER.pack(
        MAGIC, FORMAT_VERSION, n, label_length, len(dataset), int(dataset.seed), int(bool(dataset.isometric_scaling))
    )
    body = np.concatenate(
        [dataset.labels, dataset.states.view(np.float64).reshape(len(dataset), 2 * n * n)], axis=1
    ).astype("<f8", copy=False)
    text = dataset.generator_config.encode("utf-8")
    return header + body.tobytes() + TRAILER_LENGTH.pack(len(text)) + text


def dataset_from_bytes(data: bytes, source: str = "<bytes>") -> StateDataset:
    """
    Parses a QSD1 payload.

    Raises:
        DatasetFormatError: bad magic/version, truncated payload, non power-of-two
            dimension or a record failing the hermiticity check.
    """
    if len(data) < HEADER.size:
        raise DatasetFormatError(f"{source}: truncated header ({len(data)} bytes)")
    magic, version, n, label_length, count, seed, flag = HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise DatasetFormatError(f"{source}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"{source}: unsupported QSD1 version {version}")
    if n < 1 or n & (n - 1):
        raise DatasetFormatError(f"{source}: matrix dimension {n} is not a power of two")

    width = label_length + 2 * n * n
    body_end = HEADER.size + 8 * width * count
    if len(data) < body_end:
        raise DatasetFormatError(f"{source}: expected {count} records, payload is truncated")
    body = np.frombuffer(data, dtype="<f8", count=width * count, offset=HEADER.size).reshape(count, width)
    labels = body[:, :label_length].astype(np.float64)
    states = np.ascontiguousarray(body[:, label_length:]).astype(np.float64).view(np.complex128).reshape(count, n, n)

    config_text = ""
    rest = data[body_end:]
    if rest:
        if len(rest) < TRAILER_LENGTH.size:
            raise DatasetFormatError(f"{source}: truncated config trailer")
        (length,) = TRAILER_LENGTH.unpack_from(rest, 0)
        if len(rest) != TRAILER_LENGTH.size + length:
            raise DatasetFormatError(f"{source}: config trailer length {length} does not match payload")
        config_text = rest[TRAILER_LENGTH.size:].decode("utf-8")

    if count:
        defect = np.linalg.norm(states - conj_transpose(states), axis=(-2, -1))
        bad = np.flatnonzero(defect > LOAD_HERMITICITY_TOLERANCE)
        if bad.size:
            raise DatasetFormatError(
                f"{source}: record {int(bad[0])} is not Hermitian (defect {float(defect[bad[0]]):.3e})"
            )

    return StateDataset(
        qubits=n.bit_length() - 1,
        labels=labels,
        states=states,
        seed=seed,
        isometric_scaling=bool(flag),
        generator_config=config_text,
    )


def write_dataset(dataset: StateDataset, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_bytes(dataset_to_bytes(dataset))
    logger.info(f"Wrote {len(dataset)} records to {path}")
    return path


def read_dataset(path: Union[str, Path]) -> StateDataset:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise DatasetFormatError(f"Cannot read dataset {path}: {e}")
    dataset = dataset_from_bytes(data, source=str(path))
    logger.info(f"Loaded {len(dataset)} records ({dataset.qubits} qubits) from {path}")
    return dataset
