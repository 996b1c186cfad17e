import numpy as np
import pytest

from genoshare.ingest import GenotypeDataset, ReferencePanel, SnpDescriptor


def panel_of(mafs: dict) -> ReferencePanel:
    """Panel from {rsid: maf}; allele letter is irrelevant for most tests."""
    return ReferencePanel(tuple(
        SnpDescriptor(rsid, "A", maf) for rsid, maf in sorted(mafs.items())
    ))


def dataset_of(grid, rsids=None, sample_ids=None) -> GenotypeDataset:
    grid = np.asarray(grid, dtype=np.int8)
    rsids = rsids or tuple(f"rs{j:04d}" for j in range(grid.shape[1]))
    sample_ids = sample_ids or tuple(f"s{i:03d}" for i in range(grid.shape[0]))
    return GenotypeDataset(tuple(sample_ids), tuple(rsids), grid)


@pytest.fixture
def small_panel():
    return panel_of({"rs0001": 0.1, "rs0002": 0.3, "rs0003": 0.5, "rs0004": 0.25})


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
