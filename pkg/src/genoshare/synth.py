"""Synthetic panels and Hardy-Weinberg populations.

Used for non-member target synthesis in the attack evaluation, for the
public auxiliary matrix behind correlated-noise calibration, and by the
scale tests.
"""

from __future__ import annotations

import numpy as np

from .ingest import GenotypeDataset, ReferencePanel, SnpDescriptor, hardy_weinberg_probs

_BASES = ("A", "C", "G", "T")


def random_panel(m: int, seed: int, maf_range=(0.05, 0.5)) -> ReferencePanel:
    """Panel of m SNPs with mafs uniform in maf_range (rsids already sorted)."""
    rng = np.random.default_rng(seed)
    lo, hi = maf_range
    mafs = rng.uniform(lo, hi, size=m)
    alleles = rng.choice(_BASES, size=m)
    snps = tuple(
        SnpDescriptor(f"rs{i:07d}", str(alleles[i]), float(mafs[i]))
        for i in range(m)
    )
    return ReferencePanel(snps)


def simulate_population(panel: ReferencePanel, n: int, seed: int,
                        id_prefix: str = "sim") -> GenotypeDataset:
    """Draw n individuals with independent Hardy-Weinberg genotypes per SNP."""
    rsids = panel.rsids
    probs = hardy_weinberg_probs(panel.mafs(rsids))
    t0 = probs[0]
    t1 = probs[0] + probs[1]
    rng = np.random.default_rng(seed)
    u = rng.random((n, len(rsids)))
    grid = ((u >= t0).astype(np.int8) + (u >= t1).astype(np.int8))
    ids = tuple(f"{id_prefix}{i:06d}" for i in range(n))
    return GenotypeDataset(ids, rsids, grid)
