"""Stage 2: repair the perturbed matrix from public statistics only.

The restore step sees the perturbed matrix, the noise parameters, and the
public reference panel -- never the original data -- so the differential
privacy of stage 1 is preserved by post-processing invariance.  Each bit
column is snapped to a target frequency (a blend of the debiased observed
frequency and the Hardy-Weinberg prior), keeping the cells most likely to
be genuine ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BinaryMatrix
from .errors import AlignmentError, ConfigError, DomainError, NoSignalError
from .ingest import ReferencePanel
from .mechanism import NoiseModel

DEFAULT_LAMBDA = 0.5


@dataclass(frozen=True)
class ColumnPrior:
    """Prior set-probabilities of a SNP's bit pair under Hardy-Weinberg."""

    rsid: str
    q1: float
    q2: float
    f: float


def hwe_bit_priors(f: float) -> tuple[float, float]:
    """Prior bit probabilities (q1, q2) = (1-(1-f)^2, f^2) for panel maf f."""
    if not 0.0 <= f <= 0.5:
        raise DomainError(f"normalized maf must be in [0, 0.5], got {f}")
    return 1.0 - (1.0 - f) ** 2, f ** 2


def debias_frequency(observed_mean: float, p: float) -> float:
    """Invert the expected flip bias: f_hat = (mean - p) / (1 - 2p), clamped."""
    if p >= 0.5:
        raise NoSignalError("flip probability 0.5 leaves no frequency signal")
    return float(np.clip((observed_mean - p) / (1.0 - 2.0 * p), 0.0, 1.0))


def posterior_one(y_bit: int, p: float, q: float) -> float:
    """P(true bit is 1 | observed bit), for flip probability p and prior q."""
    if q <= 0.0 or q >= 1.0:
        return float(q)
    if y_bit:
        return (1.0 - p) * q / ((1.0 - p) * q + p * (1.0 - q))
    return p * q / (p * q + (1.0 - p) * (1.0 - q))


def bit_priors_for(panel: ReferencePanel, column_map) -> np.ndarray:
    """Per-bit-column prior vector for a matrix whose SNPs live in the panel."""
    by_id = panel.maf_by_rsid()
    missing = [r for r in column_map if r not in by_id]
    if missing:
        raise AlignmentError(f"{len(missing)} SNPs not in panel (first: {missing[0]!r})")
    f = np.array([by_id[r] for r in column_map], dtype=np.float64)
    prior = np.empty(2 * len(column_map), dtype=np.float64)
    prior[0::2] = 1.0 - (1.0 - f) ** 2
    prior[1::2] = f ** 2
    return prior


def restore(y: BinaryMatrix, model: NoiseModel, panel: ReferencePanel,
            lam: float = DEFAULT_LAMBDA) -> BinaryMatrix:
    """Deterministic per-column frequency repair of a perturbed matrix.

    For every bit column: target frequency f* = lam * debiased observed
    frequency + (1 - lam) * Hardy-Weinberg prior; the round(n * f*) cells
    with the highest posterior of being a true 1 are set (ties prefer
    observed ones, then lower row index).  Correlated noise is treated as
    marginal Bernoulli(p) here; the column sums of the output equal the
    target counts exactly.
    """
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lam}")
    prior = bit_priors_for(panel, y.column_map)
    bits = y.to_bool()
    n = y.rows
    if n == 0:
        return y

    p = model.p
    if p >= 0.5:
        raise NoSignalError("flip probability 0.5 leaves no frequency signal")
    observed = bits.mean(axis=0)
    debiased = np.clip((observed - p) / (1.0 - 2.0 * p), 0.0, 1.0)
    f_star = lam * debiased + (1.0 - lam) * prior
    target = np.floor(n * f_star + 0.5).astype(np.int64)
    target = np.clip(target, 0, n)

    # With p < 0.5 an observed 1 always has the (weakly) larger posterior,
    # so the ranking is: observed ones by row index, then zeros by row index.
    ones_before = np.cumsum(bits, axis=0, dtype=np.int32) - bits
    zeros_before = np.cumsum(~bits, axis=0, dtype=np.int32) - ~bits
    n_ones = bits.sum(axis=0, dtype=np.int64)
    keep_ones = bits & (ones_before < target[np.newaxis, :])
    fill_zeros = ~bits & (zeros_before < (target - n_ones)[np.newaxis, :])
    return BinaryMatrix.from_bool(keep_ones | fill_zeros, y.column_map, y.sample_ids)
