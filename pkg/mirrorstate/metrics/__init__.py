"""Physical and distributional evaluation metrics."""
from .negativity import negativity
from .distances import (
    MetricInputError,
    energy_mmd,
    max_sliced_wasserstein,
    quantile_coupling,
    sliced_wasserstein,
    w1_1d,
    wasserstein_assignment,
)
from .report import EvalReport, OBSERVABLE_COLUMNS, check_gate, full_report, observables_frame, write_observables

__all__ = [
    'negativity', 'MetricInputError', 'energy_mmd', 'max_sliced_wasserstein', 'quantile_coupling',
    'sliced_wasserstein', 'w1_1d', 'wasserstein_assignment', 'EvalReport', 'OBSERVABLE_COLUMNS',
    'check_gate', 'full_report', 'observables_frame', 'write_observables',
]
