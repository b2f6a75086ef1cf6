"""
📋 Evaluation Report
====================
Compares a generated dataset with a reference dataset and produces the
JSON-serializable EvalReport plus a per-sample observables table.
"""

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from mirrorstate.config import EvalConfig, GateConfig, MirrorConfig
from mirrorstate.linalg import MatrixDomainError, eigh
from mirrorstate.metrics.distances import (
    MetricInputError,
    energy_mmd,
    max_sliced_wasserstein,
    sliced_wasserstein,
    w1_1d,
    wasserstein_assignment,
)
from mirrorstate.metrics.negativity import negativity
from mirrorstate.mirror import herm_to_vec, to_dual
from mirrorstate.quantum.dataset import StateDataset
from mirrorstate.quantum.labels import describe_label_row

logger = logging.getLogger(__name__)

W1_DIMENSION_NOTE = (
    "Full-dimensional W1 is estimated from finite samples by exact assignment; "
    "its sample complexity degrades with dimension, so compare values only at equal sample sizes."
)

OBSERVABLE_COLUMNS = [
    "sample_id", "class_label", "eig1", "eig2",
    "primal_re_11", "primal_re_22", "dual_re_11", "dual_re_22", "negativity",
]


class EvalReport(BaseModel):
    """Distances between generated and reference state ensembles."""
    model_config = ConfigDict(extra="forbid")

    swd: float = Field(ge=0.0)
    mswd: float = Field(ge=0.0)
    w1: float = Field(ge=0.0)
    energy_mmd: float = Field(ge=0.0)
    energy_mmd_raw: float
    negativity_w1: float = Field(ge=0.0)
    generated_count: int
    reference_count: int
    projection_count: int
    seed: int
    qubits: int
    subsystem: Tuple[int, ...]
    isometric_scaling: bool
    mmd_estimator: str
    w1_samples: int
    notes: List[str] = Field(default_factory=list)
    gate_failures: List[str] = Field(default_factory=list)
    config: str = ""

    def to_json(self) -> str:
        return self.model_dump_json(indent=2)

    @classmethod
    def from_json(cls, text: str) -> "EvalReport":
        return cls.model_validate_json(text)


def full_report(
    generated: StateDataset,
    reference: StateDataset,
    subsystem: Sequence[int] = (1,),
    cfg: Optional[EvalConfig] = None,
    seed: Optional[int] = None,
    config_text: str = "",
) -> EvalReport:
    """
    Computes SWD, MSWD, W1, Energy-MMD on vectorized primal matrices and the
    W1 between negativity distributions.

    Matrices are vectorized with herm_to_vec under the reference dataset's
    scaling flag.

    Raises:
        MetricInputError: empty datasets or mismatched dimensions.
    """
    cfg = cfg or EvalConfig()
    seed = cfg.seed if seed is None else seed
    if len(generated) == 0 or len(reference) == 0:
        raise MetricInputError("Both datasets must be nonempty")
    if generated.dim != reference.dim:
        raise MetricInputError(f"Dimension mismatch: {generated.dim} vs {reference.dim}")

    mirror = MirrorConfig(isometric_scaling=reference.isometric_scaling)
    a = herm_to_vec(generated.states, mirror)
    b = herm_to_vec(reference.states, mirror)
    swd_stream, mswd_stream, w1_stream = np.random.SeedSequence(seed).spawn(3)

    swd = sliced_wasserstein(a, b, cfg.projections, np.random.default_rng(swd_stream))
    mswd = max_sliced_wasserstein(
        a, b, cfg.mswd_iterations, cfg.mswd_restarts, np.random.default_rng(mswd_stream), step=cfg.mswd_step
    )
    w1, w1_samples = wasserstein_assignment(a, b, cfg.w1_max_samples, np.random.default_rng(w1_stream))
    mmd_raw = energy_mmd(a, b, cfg.mmd_estimator)
    if mmd_raw < 0.0:
        logger.warning(f"Energy-MMD estimate {mmd_raw:.3e} is negative; reporting 0")
    negativity_w1 = w1_1d(negativity(generated.states, subsystem), negativity(reference.states, subsystem))

    report = EvalReport(
        swd=swd,
        mswd=mswd,
        w1=w1,
        energy_mmd=max(mmd_raw, 0.0),
        energy_mmd_raw=mmd_raw,
        negativity_w1=negativity_w1,
        generated_count=len(generated),
        reference_count=len(reference),
        projection_count=cfg.projections,
        seed=seed,
        qubits=reference.qubits,
        subsystem=tuple(subsystem),
        isometric_scaling=reference.isometric_scaling,
        mmd_estimator=cfg.mmd_estimator,
        w1_samples=w1_samples,
        notes=[W1_DIMENSION_NOTE],
        config=config_text,
    )
    logger.info(
        f"Eval: swd={swd:.4g} mswd={mswd:.4g} w1={w1:.4g} energy_mmd={report.energy_mmd:.4g} "
        f"negativity_w1={negativity_w1:.4g}"
    )
    return report


def check_gate(report: EvalReport, gate: GateConfig) -> List[str]:
    """Messages for every configured threshold the report exceeds."""
    failures = []
    for metric in ("swd", "mswd", "w1", "energy_mmd", "negativity_w1"):
        threshold = getattr(gate, metric)
        value = getattr(report, metric)
        if threshold is not None and value > threshold:
            failures.append(f"{metric}={value:.6g} exceeds threshold {threshold:.6g}")
    return failures


def _dual_diagonals(states: np.ndarray) -> np.ndarray:
    """Real (1,1) and (2,2) entries of to_dual per state; NaN where the state is not positive definite."""
    out = np.full((states.shape[0], 2), np.nan)
    try:
        dual = to_dual(states)
        out[:] = np.real(dual[:, [0, 1], [0, 1]])
        return out
    except MatrixDomainError:
        pass
    for k, state in enumerate(states):
        try:
            dual = to_dual(state)
        except MatrixDomainError:
            continue
        out[k] = np.real(dual[[0, 1], [0, 1]])
    return out


def observables_frame(dataset: StateDataset, subsystem: Sequence[int] = (1,)) -> pd.DataFrame:
    """Per-sample observables: leading two eigenvalues, (1,1)/(2,2) entries in primal and dual space, negativity."""
    states = dataset.states
    eigenvalues = eigh(states).eigenvalues if len(dataset) else np.zeros((0, dataset.dim))
    leading = eigenvalues[:, ::-1][:, :2]
    dual = _dual_diagonals(states) if len(dataset) else np.zeros((0, 2))
    frame = pd.DataFrame({
        "sample_id": np.arange(len(dataset)),
        "class_label": [describe_label_row(row) for row in dataset.labels],
        "eig1": leading[:, 0],
        "eig2": leading[:, 1],
        "primal_re_11": np.real(states[:, 0, 0]),
        "primal_re_22": np.real(states[:, 1, 1]),
        "dual_re_11": dual[:, 0],
        "dual_re_22": dual[:, 1],
        "negativity": negativity(states, subsystem) if len(dataset) else np.zeros(0),
    })
    return frame[OBSERVABLE_COLUMNS]


def write_observables(dataset: StateDataset, path, subsystem: Sequence[int] = (1,)) -> pd.DataFrame:
    frame = observables_frame(dataset, subsystem)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} observable rows to {path}")
    return frame
