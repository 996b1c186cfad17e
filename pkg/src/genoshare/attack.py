"""Empirical membership-inference risk against the shared release.

The released object attacked here is the per-SNP allele-frequency vector
of the shared matrix (the strongest aggregate an adversary can always
derive from it).  The test statistic compares a target's dosages against
the release and a public reference: positive values indicate membership.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatchError, SizeError
from .ingest import GenotypeDataset, ReferencePanel

DEFAULT_SMOOTHING = 0.5


def allele_frequencies(ds, smoothing: float = 0.0) -> np.ndarray:
    """Per-SNP minor-allele frequency (Σ g + s) / (2n + 2s) of a dataset."""
    grid = ds.genotypes if isinstance(ds, GenotypeDataset) else np.asarray(ds)
    if grid.ndim != 2 or grid.size == 0:
        raise SizeError(f"need a non-empty genotype grid, got shape {grid.shape}")
    n = grid.shape[0]
    return (grid.sum(axis=0, dtype=np.float64) + smoothing) / (2.0 * n + 2.0 * smoothing)


def homer_statistic(target, pool, ref) -> float:
    """Membership statistic D = Σ_j (|t_j - ref_j| - |t_j - pool_j|).

    ``target`` is a dosage vector (genotype / 2); ``pool`` the release
    frequencies; ``ref`` the public reference frequencies.
    """
    t = np.asarray(target, dtype=np.float64)
    pool = np.asarray(pool, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if not t.shape == pool.shape == ref.shape:
        raise ShapeMismatchError(
            f"length mismatch: target {t.shape}, pool {pool.shape}, ref {ref.shape}")
    return float((np.abs(t - ref) - np.abs(t - pool)).sum())


def _statistics(targets: np.ndarray, pool: np.ndarray, ref: np.ndarray) -> np.ndarray:
    t = np.asarray(targets, dtype=np.float64)
    return (np.abs(t - ref) - np.abs(t - pool)).sum(axis=1)


def rank_auc(positives: np.ndarray, negatives: np.ndarray) -> float:
    """AUC by pairwise rank comparison (ties count half)."""
    pos = np.sort(np.asarray(positives, dtype=np.float64))
    neg = np.asarray(negatives, dtype=np.float64)
    higher = len(pos) - np.searchsorted(pos, neg, side="right")
    equal = np.searchsorted(pos, neg, side="right") - np.searchsorted(pos, neg, side="left")
    return float((higher + 0.5 * equal).sum() / (len(pos) * len(neg)))


@dataclass(frozen=True)
class AttackReport:
    auc: float
    power_at_5pct_fpr: float
    trials: int
    epsilon: float
    statistic_summaries: dict

    def to_dict(self) -> dict:
        return {
            "auc": self.auc,
            "power_at_5pct_fpr": self.power_at_5pct_fpr,
            "trials": self.trials,
            "epsilon": self.epsilon,
            "statistic_summaries": self.statistic_summaries,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AttackReport":
        return cls(
            auc=float(doc["auc"]),
            power_at_5pct_fpr=float(doc["power_at_5pct_fpr"]),
            trials=int(doc["trials"]),
            epsilon=float(doc["epsilon"]),
            statistic_summaries=dict(doc["statistic_summaries"]),
        )


def evaluate_attack(shared, reference, members, nonmembers,
                    epsilon: float = math.nan,
                    smoothing: float = DEFAULT_SMOOTHING) -> AttackReport:
    """Score the membership attack over known members and non-members.

    ``shared`` is the released dataset (or its frequency vector);
    ``reference`` a panel (or a frequency vector); ``members`` and
    ``nonmembers`` are genotype row arrays, converted to dosages here.
    Power is measured at the empirical 95th percentile of non-member
    statistics.
    """
    members = np.atleast_2d(np.asarray(members))
    nonmembers = np.atleast_2d(np.asarray(nonmembers))
    if len(members) < 2 or len(nonmembers) < 2:
        raise SizeError("need at least 2 members and 2 non-members")

    if isinstance(shared, GenotypeDataset):
        pool = allele_frequencies(shared, smoothing)
        if isinstance(reference, ReferencePanel):
            reference = reference.mafs(shared.rsids)
    else:
        pool = np.asarray(shared, dtype=np.float64)
        if isinstance(reference, ReferencePanel):
            reference = np.array([s.maf for s in reference.snps], dtype=np.float64)
    ref = np.asarray(reference, dtype=np.float64)
    if pool.shape != ref.shape:
        raise ShapeMismatchError(f"pool has {pool.shape[0]} SNPs, reference {ref.shape[0]}")

    d_member = _statistics(members / 2.0, pool, ref)
    d_nonmember = _statistics(nonmembers / 2.0, pool, ref)
    threshold = float(np.quantile(d_nonmember, 0.95))
    return AttackReport(
        auc=rank_auc(d_member, d_nonmember),
        power_at_5pct_fpr=float((d_member > threshold).mean()),
        trials=len(d_member) + len(d_nonmember),
        epsilon=epsilon,
        statistic_summaries={
            "member": {"mean": float(d_member.mean()), "std": float(d_member.std())},
            "nonmember": {"mean": float(d_nonmember.mean()), "std": float(d_nonmember.std())},
        },
    )
