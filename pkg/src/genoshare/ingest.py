"""Genotype and reference-panel ingestion.

File formats (all UTF-8, LF, tab-separated):

* genotype matrix -- header ``rsid<TAB>sample1...``, one line per SNP with
  values in ``{0,1,2,NA}`` (minor-allele counts);
* reference panel -- ``rsid<TAB>minor_allele<TAB>maf`` lines, no header;
* consumer raw export -- ``rsid<TAB>chrom<TAB>pos<TAB>alleles`` lines,
  ``#`` comments.

Datasets are immutable after construction; genotype grids are int8 with
-1 for missing calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bits import BinaryMatrix
from .errors import (
    AlignmentError,
    DomainError,
    DuplicateIdError,
    EncodingError,
    ParseError,
)

MISSING = -1

_VALID_TOKENS = {"0", "1", "2", "NA"}
_BASES = frozenset("ACGT")
# Placeholder byte for "NA" in the single-character fast paths; cannot
# collide with a legitimate token.
_NA_BYTE = 1
_NA_CHAR = "\x01"


@dataclass(frozen=True)
class SnpDescriptor:
    """Public per-SNP statistics: rsid, minor allele letter, and its frequency.

    ``swapped`` records that the source file listed the major allele (maf
    above 0.5) and the descriptor was normalized to maf = 1 - maf.
    """

    rsid: str
    minor_allele: str
    maf: float
    swapped: bool = False

    def __post_init__(self):
        if not self.rsid:
            raise DomainError("rsid must be non-empty")
        if self.minor_allele not in _BASES:
            raise DomainError(f"minor allele must be one of A,C,G,T, got {self.minor_allele!r}")
        if not 0.0 <= self.maf <= 0.5:
            raise DomainError(f"normalized maf must be in [0, 0.5], got {self.maf}")


@dataclass(frozen=True)
class ReferencePanel:
    """Ordered (rsid-lexicographic) collection of SNP descriptors."""

    snps: tuple[SnpDescriptor, ...]

    def __post_init__(self):
        rsids = [s.rsid for s in self.snps]
        if sorted(rsids) != rsids:
            raise DomainError("panel must be sorted by rsid")
        if len(set(rsids)) != len(rsids):
            raise DuplicateIdError("panel contains duplicate rsids")

    def __len__(self):
        return len(self.snps)

    @property
    def rsids(self) -> tuple[str, ...]:
        return tuple(s.rsid for s in self.snps)

    def maf_by_rsid(self) -> dict:
        return {s.rsid: s.maf for s in self.snps}

    def mafs(self, rsids) -> np.ndarray:
        by_id = self.maf_by_rsid()
        return np.array([by_id[r] for r in rsids], dtype=np.float64)


@dataclass(frozen=True)
class GenotypeDataset:
    """n samples x m SNPs of minor-allele counts in {0,1,2,-1 (missing)}."""

    sample_ids: tuple[str, ...]
    rsids: tuple[str, ...]
    genotypes: np.ndarray

    def __post_init__(self):
        g = self.genotypes
        if g.dtype != np.int8:
            raise DomainError(f"genotypes must be int8, got {g.dtype}")
        if g.shape != (len(self.sample_ids), len(self.rsids)):
            raise DomainError(
                f"genotype grid {g.shape} does not match "
                f"{len(self.sample_ids)} samples x {len(self.rsids)} SNPs"
            )
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise DuplicateIdError("duplicate sample ids")
        if len(set(self.rsids)) != len(self.rsids):
            raise DuplicateIdError("duplicate rsids")
        if g.size and not np.isin(g, (MISSING, 0, 1, 2)).all():
            raise DomainError("genotype values must be in {0,1,2} or missing")
        g.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.sample_ids)

    @property
    def m(self) -> int:
        return len(self.rsids)

    def has_missing(self) -> bool:
        return bool((self.genotypes == MISSING).any())

    def __eq__(self, other):
        if not isinstance(other, GenotypeDataset):
            return NotImplemented
        return (self.sample_ids == other.sample_ids
                and self.rsids == other.rsids
                and np.array_equal(self.genotypes, other.genotypes))


def _dataset_lines(text: str) -> list[str]:
    lines = text.split("\n")
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_matrix_line_slow(line: str, lineno: int, n_samples: int) -> tuple[str, list[int]]:
    fields = line.split("\t")
    if len(fields) != n_samples + 1:
        raise ParseError(
            f"expected {n_samples + 1} tab-separated fields, got {len(fields)}", line=lineno
        )
    values = []
    for tok in fields[1:]:
        if tok not in _VALID_TOKENS:
            raise DomainError(f"invalid genotype token {tok!r} at line {lineno}")
        values.append(MISSING if tok == "NA" else int(tok))
    return fields[0], values


def parse_genotype_matrix(text: str) -> GenotypeDataset:
    """Parse a genotype matrix TSV into a dataset (samples x SNPs).

    File rows are SNPs; the returned grid is transposed so rows are samples.
    Raises ParseError (with line number) on ragged lines, DuplicateIdError on
    repeated rsids or sample ids, DomainError on tokens outside {0,1,2,NA}.
    """
    lines = _dataset_lines(text)
    if not lines:
        raise ParseError("empty file", line=1)
    header = lines[0].split("\t")
    if header[0] != "rsid":
        raise ParseError(f"header must start with 'rsid', got {header[0]!r}", line=1)
    sample_ids = header[1:]
    if not sample_ids:
        raise ParseError("header lists no samples", line=1)
    if len(set(sample_ids)) != len(sample_ids):
        raise DuplicateIdError("duplicate sample ids in header")

    n = len(sample_ids)
    m = len(lines) - 1
    grid = np.empty((m, n), dtype=np.int8)
    rsids: list[str] = []
    seen: set[str] = set()
    expected = 2 * n - 1  # single-char tokens separated by tabs

    for i, line in enumerate(lines[1:]):
        lineno = i + 2
        tab = line.find("\t")
        rsid = line[:tab] if tab >= 0 else line
        row = None
        if tab >= 0:
            # Fast path: after mapping NA to one byte, a well-formed line is
            # strictly alternating value/tab bytes.
            raw = line[tab + 1:].replace("NA", _NA_CHAR).encode("ascii", "replace")
            if len(raw) == expected:
                arr = np.frombuffer(raw, dtype=np.uint8)
                vals = arr[0::2]
                ok = ((vals >= 48) & (vals <= 50)) | (vals == _NA_BYTE)
                if ok.all() and (expected == 1 or (arr[1::2] == 9).all()):
                    row = np.where(vals == _NA_BYTE, MISSING, vals - 48).astype(np.int8)
        if row is None:
            rsid, values = _parse_matrix_line_slow(line, lineno, n)
            row = np.array(values, dtype=np.int8)
        if rsid in seen:
            raise DuplicateIdError(f"duplicate rsid {rsid!r} at line {lineno}")
        seen.add(rsid)
        rsids.append(rsid)
        grid[i] = row

    return GenotypeDataset(tuple(sample_ids), tuple(rsids), np.ascontiguousarray(grid.T))


def serialize_genotype_matrix(ds: GenotypeDataset) -> str:
    """Emit the genotype matrix TSV bit-exactly (LF endings, no trailing blanks)."""
    header = "rsid\t" + "\t".join(ds.sample_ids)
    if ds.m == 0:
        return header + "\n"
    by_snp = np.ascontiguousarray(ds.genotypes.T)
    vals = np.where(by_snp >= 0, by_snp + 48, _NA_BYTE).astype(np.uint8)
    width = 2 * ds.n - 1
    buf = np.full((ds.m, width), 9, dtype=np.uint8)
    buf[:, 0::2] = vals
    flat = buf.tobytes().decode("ascii")
    rows = (
        rsid + "\t" + flat[i * width:(i + 1) * width]
        for i, rsid in enumerate(ds.rsids)
    )
    return (header + "\n" + "\n".join(rows) + "\n").replace(_NA_CHAR, "NA")


def parse_reference_panel(text: str) -> ReferencePanel:
    """Parse ``rsid<TAB>allele<TAB>maf`` lines; maf above 0.5 is normalized.

    Normalization swaps minor/major semantics (maf becomes 1 - maf) and sets
    the descriptor's ``swapped`` flag so genotype counting can invert.
    """
    snps = []
    for i, line in enumerate(_dataset_lines(text)):
        lineno = i + 1
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", line=lineno)
        rsid, allele, maf_text = fields
        try:
            maf = float(maf_text)
        except ValueError:
            raise ParseError(f"unparseable maf {maf_text!r}", line=lineno) from None
        if not 0.0 <= maf <= 1.0:
            raise DomainError(f"maf {maf} outside [0, 1] at line {lineno}")
        swapped = maf > 0.5
        if swapped:
            maf = 1.0 - maf
        snps.append(SnpDescriptor(rsid, allele, maf, swapped))
    snps.sort(key=lambda s: s.rsid)
    return ReferencePanel(tuple(snps))


def serialize_reference_panel(panel: ReferencePanel) -> str:
    """Emit the (normalized) panel TSV bit-exactly."""
    return "".join(f"{s.rsid}\t{s.minor_allele}\t{s.maf!r}\n" for s in panel.snps)


def parse_raw_snp_export(text: str, panel: ReferencePanel,
                         sample_id: str = "sample") -> GenotypeDataset:
    """Parse one consumer-export file against a panel into a 1-sample dataset.

    Genotype is the count of the panel's minor allele in the two-letter call
    (inverted for swapped descriptors); pairs containing non-ACGT letters
    (no-calls, indels) become missing; rsids absent from the panel are dropped.
    """
    by_id = {s.rsid: s for s in panel.snps}
    calls: dict[str, int] = {}
    for i, line in enumerate(_dataset_lines(text)):
        lineno = i + 1
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 4 or len(fields[3]) != 2:
            raise ParseError("expected rsid, chromosome, position, two-letter alleles",
                             line=lineno)
        rsid, _chrom, _pos, alleles = fields
        snp = by_id.get(rsid)
        if snp is None:
            continue
        if rsid in calls:
            raise DuplicateIdError(f"duplicate rsid {rsid!r} at line {lineno}")
        if set(alleles) <= _BASES:
            count = alleles.count(snp.minor_allele)
            calls[rsid] = 2 - count if snp.swapped else count
        else:
            calls[rsid] = MISSING

    rsids = tuple(s.rsid for s in panel.snps if s.rsid in calls)
    grid = np.array([[calls[r] for r in rsids]], dtype=np.int8)
    return GenotypeDataset((sample_id,), rsids, grid)


def align_to_reference(ds: GenotypeDataset,
                       panel: ReferencePanel) -> tuple[GenotypeDataset, tuple[str, ...]]:
    """Restrict columns to the rsid intersection, ordered by panel order.

    Returns the aligned dataset and the rsids of `ds` that were dropped.
    Raises AlignmentError when the intersection is empty.
    """
    have = set(ds.rsids)
    kept = [r for r in panel.rsids if r in have]
    if not kept:
        raise AlignmentError("dataset and panel share no rsids")
    dropped = tuple(r for r in ds.rsids if r not in set(kept))
    index = {r: j for j, r in enumerate(ds.rsids)}
    cols = np.array([index[r] for r in kept], dtype=np.intp)
    grid = np.ascontiguousarray(ds.genotypes[:, cols])
    return GenotypeDataset(ds.sample_ids, tuple(kept), grid), dropped


def hardy_weinberg_probs(f: np.ndarray) -> np.ndarray:
    """Genotype probabilities {(1-f)^2, 2f(1-f), f^2} stacked as (3, m)."""
    f = np.asarray(f, dtype=np.float64)
    return np.stack([(1 - f) ** 2, 2 * f * (1 - f), f ** 2])


def impute_missing(ds: GenotypeDataset, panel: ReferencePanel) -> GenotypeDataset:
    """Replace missing calls with the Hardy-Weinberg argmax genotype.

    Column j uses the panel maf of its rsid; ties break toward the smaller
    genotype.  Requires the dataset to be aligned to the panel.
    """
    if not set(ds.rsids) <= set(panel.rsids):
        raise AlignmentError("dataset has rsids outside the panel; align first")
    if not ds.has_missing():
        return ds
    probs = hardy_weinberg_probs(panel.mafs(ds.rsids))
    fill = np.argmax(probs, axis=0).astype(np.int8)  # first max -> smaller g wins ties
    grid = np.where(ds.genotypes == MISSING, fill[np.newaxis, :], ds.genotypes)
    return GenotypeDataset(ds.sample_ids, ds.rsids, grid.astype(np.int8))


def encode_binary(ds: GenotypeDataset) -> BinaryMatrix:
    """Threshold-encode genotypes to bit pairs: g -> (g >= 1, g == 2)."""
    if ds.has_missing():
        raise EncodingError("dataset has missing calls; impute before encoding")
    bits = np.empty((ds.n, 2 * ds.m), dtype=bool)
    bits[:, 0::2] = ds.genotypes >= 1
    bits[:, 1::2] = ds.genotypes == 2
    return BinaryMatrix.from_bool(bits, ds.rsids, ds.sample_ids)


def decode_binary(bm: BinaryMatrix) -> GenotypeDataset:
    """Decode bit pairs by popcount; the pair (0,1), unreachable by encoding
    but reachable after perturbation, decodes to genotype 1."""
    bits = bm.to_bool()
    grid = (bits[:, 0::2].astype(np.int8) + bits[:, 1::2].astype(np.int8))
    return GenotypeDataset(bm.sample_ids, bm.column_map, grid)
