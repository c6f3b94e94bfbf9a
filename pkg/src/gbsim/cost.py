"""Classical-cost and Hilbert-dimension estimates for threshold sampling.

The kernel cost model counts the subsets of a click pattern and charges a
dense complex determinant on a doubled-size matrix for each, with the
leading constant folded into a calibration factor.  Totals are kept in
exact integer arithmetic when the calibration factor is an integer, so
dimension and flop counts never lose precision to floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError
from .samplers import SampleSet

__all__ = [
    "CostConfig",
    "hilbert_dimension",
    "torontonian_flops",
    "advantage_ratio",
    "cost_table",
]


@dataclass(frozen=True)
class CostConfig:
    """Reference-machine parameters for the advantage estimate.

    machine_flops: sustained rate of the classical reference machine in
    operations per second.  kernel_constant: dimensionless calibration of
    the determinant kernel.  quantum_collection_time: seconds the sampler
    took to collect the batch being costed.
    """

    machine_flops: float
    kernel_constant: float = 1.0
    quantum_collection_time: float = 1.0

    def __post_init__(self):
        for name in ("machine_flops", "kernel_constant", "quantum_collection_time"):
            value = getattr(self, name)
            if not value > 0.0:
                raise ConfigurationError(f"{name} must be positive, got {value}")


def hilbert_dimension(mode_count: int):
    """Threshold-detector outcome space size, exact and as log10."""
    m = int(mode_count)
    if m < 1:
        raise ConfigurationError(f"mode count must be >= 1, got {mode_count}")
    return 1 << m, m * math.log10(2.0)


def torontonian_flops(n_clicks: int, kernel_constant=1):
    """Operations to evaluate one click-pattern probability.

    Counts 2^n subset determinants of dimension 2n at cubic cost each:
    kernel_constant * 2^n * (2n)^3.  The empty pattern costs one kernel
    constant.  Integer kernel constants keep the count exact.
    """
    n = int(n_clicks)
    if n < 0:
        raise ConfigurationError(f"click count must be >= 0, got {n_clicks}")
    if n == 0:
        return kernel_constant
    return kernel_constant * (1 << n) * (2 * n) ** 3


def advantage_ratio(samples: SampleSet, config: CostConfig) -> float:
    """log10 of (classical replay time / quantum collection time).

    The classical time is the summed kernel flops over all sampled
    patterns divided by the machine rate.
    """
    if samples.count == 0:
        raise ConfigurationError("cannot cost an empty sample set")
    counts = samples.click_counts()
    total = 0
    for n in counts:
        total += torontonian_flops(int(n), 1)
    # scale by the calibration factor in log space so huge totals survive
    log_total = math.log10(total) + math.log10(config.kernel_constant)
    return (log_total - math.log10(config.machine_flops)
            - math.log10(config.quantum_collection_time))


def cost_table(samples: SampleSet, config: CostConfig) -> list:
    """Per-click-count cost rows: (n_clicks, n_samples, flops_each, flops_total).

    Rows are sorted by click count; flops are exact integers scaled by the
    kernel constant only at presentation time, so the table itself is
    calibration-free apart from the per-row scaling.
    """
    counts = samples.click_counts()
    rows = []
    for n in sorted({int(c) for c in counts}):
        hits = int((counts == n).sum())
        each = torontonian_flops(n, config.kernel_constant)
        rows.append((n, hits, each, each * hits))
    return rows
