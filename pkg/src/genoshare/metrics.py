"""Utility metrics between an original and a shared genotype matrix.

All four metrics are symmetric, non-negative, and cheap enough to
recompute with a brute-force loop (which is exactly how the tests check
them).  Variances are population variances so single-row columns are
well defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError
from .ingest import GenotypeDataset
from .mechanism import BudgetSemantics


def _grids(g, g_prime) -> tuple[np.ndarray, np.ndarray]:
    a = g.genotypes if isinstance(g, GenotypeDataset) else np.asarray(g)
    b = g_prime.genotypes if isinstance(g_prime, GenotypeDataset) else np.asarray(g_prime)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a.astype(np.float64), b.astype(np.float64)


def avg_point_error(g, g_prime) -> float:
    """Mean absolute genotype difference, normalized by the range 2."""
    a, b = _grids(g, g_prime)
    return float(np.abs(a - b).mean() / 2.0)


def avg_sample_error(g, g_prime) -> float:
    """Mean over samples of the fraction of SNPs that changed."""
    a, b = _grids(g, g_prime)
    return float((a != b).mean(axis=1).mean())


def mean_error(g, g_prime) -> float:
    """Mean absolute difference of per-SNP column means."""
    a, b = _grids(g, g_prime)
    return float(np.abs(a.mean(axis=0) - b.mean(axis=0)).mean())


def variance_error(g, g_prime) -> float:
    """Mean absolute difference of per-SNP population variances."""
    a, b = _grids(g, g_prime)
    return float(np.abs(a.var(axis=0) - b.var(axis=0)).mean())


@dataclass(frozen=True)
class UtilityReport:
    avg_point_error: float
    avg_sample_error: float
    mean_error: float
    variance_error: float
    n: int
    m: int
    epsilon_claimed: float
    semantics: BudgetSemantics

    def to_dict(self) -> dict:
        return {
            "avg_point_error": self.avg_point_error,
            "avg_sample_error": self.avg_sample_error,
            "mean_error": self.mean_error,
            "variance_error": self.variance_error,
            "n": self.n,
            "m": self.m,
            "epsilon_claimed": self.epsilon_claimed,
            "semantics": self.semantics.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "UtilityReport":
        return cls(
            avg_point_error=float(doc["avg_point_error"]),
            avg_sample_error=float(doc["avg_sample_error"]),
            mean_error=float(doc["mean_error"]),
            variance_error=float(doc["variance_error"]),
            n=int(doc["n"]),
            m=int(doc["m"]),
            epsilon_claimed=float(doc["epsilon_claimed"]),
            semantics=BudgetSemantics(doc["semantics"]),
        )


def build_utility_report(original, shared, epsilon_claimed: float,
                         semantics: BudgetSemantics) -> UtilityReport:
    a, _ = _grids(original, shared)
    n, m = a.shape
    return UtilityReport(
        avg_point_error=avg_point_error(original, shared),
        avg_sample_error=avg_sample_error(original, shared),
        mean_error=mean_error(original, shared),
        variance_error=variance_error(original, shared),
        n=n,
        m=m,
        epsilon_claimed=epsilon_claimed,
        semantics=semantics,
    )
