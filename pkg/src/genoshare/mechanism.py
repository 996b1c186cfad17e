"""Stage 1: Bernoulli-noise generation, XOR perturbation, and ε accounting.

Two noise modes share the XOR release ``y = x XOR noise``:

* ``INDEPENDENT`` -- every bit flips independently with probability p
  (randomized response).  Per-bit cost is ln((1-p)/p); a record of B bits
  costs B times that under replace-one-record semantics.

* ``MARKOV`` -- flip indicators are coupled along adjacent bit columns.
  The stay probability q_j lives on a (1 + correlation)/2 scale: the
  effective copy probability of the chain is c_j = 2 q_j - 1, so q = 0.5
  is exactly the independent mode and q -> 1 approaches perfect coupling.
  Fresh draws are Bernoulli(p), which keeps every marginal flip rate at p.

The per-record bound for the chain is

    B ln((1-p)/p) + sum_j ln(q_j / (1 - q_j))

which dominates the exact likelihood ratio for all p <= 0.5 (the extra
per-transition cost of copying, ln(1 + c/((1-c)(1-p))), never exceeds
ln((1+c)/(1-c)) = ln(q/(1-q))).  ``verify_dp_bruteforce`` checks the bound
against exact enumeration on small widths.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bits import BinaryMatrix, words_per_row
from .errors import ConfigError, DomainError, ShapeMismatchError, SizeError

DEFAULT_Q_BOUNDS = (0.5, 0.99)
DEFAULT_ALPHA = 0.5
_ROW_BLOCK = 64


class BudgetSemantics(enum.Enum):
    PER_RECORD = "per-record"
    PER_BIT = "per-bit"


class NoiseMode(enum.Enum):
    INDEPENDENT = "independent"
    MARKOV = "markov"


@dataclass(frozen=True)
class PrivacyBudget:
    epsilon: float
    semantics: BudgetSemantics = BudgetSemantics.PER_RECORD

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class NoiseModel:
    """Flip probability plus optional column coupling and the claimed ε bound."""

    p: float
    mode: NoiseMode
    stay_probs: np.ndarray | None
    epsilon_upper: float

    def __post_init__(self):
        if not 0.0 < self.p <= 0.5:
            raise DomainError(f"flip probability must be in (0, 0.5], got {self.p}")
        if self.epsilon_upper < 0:
            raise DomainError("epsilon_upper must be non-negative")
        if self.mode is NoiseMode.MARKOV:
            q = np.asarray(self.stay_probs, dtype=np.float64)
            if q.ndim != 1:
                raise DomainError("stay_probs must be a 1-d array")
            if q.size and (q.min() < 0.5 or q.max() >= 1.0):
                raise DomainError("stay probabilities must lie in [0.5, 1)")
            q.setflags(write=False)
            object.__setattr__(self, "stay_probs", q)
        elif self.stay_probs is not None:
            raise DomainError("independent mode takes no stay_probs")


@dataclass(frozen=True)
class NoiseMatrix:
    """Packed noise bits, regenerable bit-exactly from (model, shape, seed)."""

    words: np.ndarray
    rows: int
    bit_columns: int
    seed: int

    def __post_init__(self):
        if self.words.shape != (self.rows, words_per_row(self.bit_columns)):
            raise ShapeMismatchError(
                f"words shape {self.words.shape} does not match "
                f"{self.rows} rows x {self.bit_columns} bit columns")
        self.words.setflags(write=False)


@dataclass(frozen=True)
class BlockPlan:
    """Adjacent-column correlations of public bits and the derived stay probs."""

    correlations: np.ndarray
    stay_probs: np.ndarray
    q_bounds: tuple[float, float]

    def __post_init__(self):
        self.correlations.setflags(write=False)
        self.stay_probs.setflags(write=False)


def budget_per_bit(budget: PrivacyBudget, bits_per_record: int) -> float:
    """Per-bit share of the budget: ε itself, or ε split across the record."""
    if bits_per_record < 1:
        raise ConfigError(f"bits_per_record must be >= 1, got {bits_per_record}")
    if budget.semantics is BudgetSemantics.PER_BIT:
        return budget.epsilon
    return budget.epsilon / bits_per_record


def flip_probability(eps_b: float) -> float:
    """Randomized-response flip probability p = 1/(1 + e^ε) for one bit."""
    if eps_b < 0:
        raise ConfigError(f"per-bit epsilon must be >= 0, got {eps_b}")
    return 1.0 / (1.0 + math.exp(eps_b))


def _per_bit_cost(p: float) -> float:
    return math.log((1.0 - p) / p)


def build_independent_model(budget: PrivacyBudget, bits_per_record: int) -> NoiseModel:
    """Calibrate independent-flip noise to the budget and record width."""
    p = flip_probability(budget_per_bit(budget, bits_per_record))
    upper = epsilon_upper_bound_for(p, None, bits_per_record, budget.semantics)
    return NoiseModel(p, NoiseMode.INDEPENDENT, None, upper)


def _checked_q_bounds(q_bounds) -> tuple[float, float]:
    q_min, q_max = q_bounds
    if not 0.5 <= q_min <= q_max < 1.0:
        raise ConfigError(f"q_bounds must satisfy 0.5 <= q_min <= q_max < 1, got {q_bounds}")
    return float(q_min), float(q_max)


def build_correlation_blocks(public_bits: BinaryMatrix,
                             q_bounds=DEFAULT_Q_BOUNDS) -> BlockPlan:
    """Estimate adjacent-bit-column correlations on PUBLIC data and map them
    to stay probabilities q_j = clamp((1 + |r_j|)/2, q_min, q_max).

    The input must never be the private target matrix; use a matrix derived
    from the reference panel (or another public source) instead.
    """
    q_min, q_max = _checked_q_bounds(q_bounds)
    b = public_bits.bit_columns
    if b < 2:
        empty = np.empty(0, dtype=np.float64)
        return BlockPlan(empty, empty.copy(), (q_min, q_max))

    bits = public_bits.to_bool()
    n = bits.shape[0]
    s = bits.sum(axis=0, dtype=np.int64)
    s11 = (bits[:, :-1] & bits[:, 1:]).sum(axis=0, dtype=np.int64)
    # r from integer sums; constant columns get r = 0 by convention
    cov = n * s11 - s[:-1] * s[1:]
    var = n * s - s * s
    denom = np.sqrt(var[:-1].astype(np.float64) * var[1:].astype(np.float64))
    r = np.divide(cov, denom, out=np.zeros(b - 1, dtype=np.float64), where=denom > 0)
    q = np.clip((1.0 + np.abs(r)) / 2.0, q_min, q_max)
    return BlockPlan(r, q, (q_min, q_max))


def _transition_cost(q: np.ndarray) -> float:
    q = np.asarray(q, dtype=np.float64)
    if q.size == 0:
        return 0.0
    hi = np.maximum(q, 1.0 - q)
    return float(np.log(hi / (1.0 - hi)).sum())


def calibrate_markov(budget: PrivacyBudget, plan: BlockPlan, bits_per_record: int,
                     alpha: float = DEFAULT_ALPHA) -> NoiseModel:
    """Split the record budget between column coupling and marginal flips.

    Stay probabilities are rescaled toward 0.5 (uniformly in q - 0.5) until
    their cost ε_T = Σ ln(q_j/(1-q_j)) fits within alpha * ε; the remainder
    ε_M buys the flip probability via p = flip_probability(ε_M / B), so the
    claimed bound ε_M + ε_T never exceeds ε.
    """
    if budget.semantics is not BudgetSemantics.PER_RECORD:
        raise ConfigError("markov calibration requires per-record budget semantics")
    if not 0.0 < alpha < 1.0:
        raise ConfigError(f"alpha must be in (0, 1), got {alpha}")
    if bits_per_record < 1:
        raise ConfigError(f"bits_per_record must be >= 1, got {bits_per_record}")
    q = np.asarray(plan.stay_probs, dtype=np.float64)
    if q.size != bits_per_record - 1:
        raise ConfigError(
            f"plan has {q.size} stay probabilities for {bits_per_record} bit columns")

    eps = budget.epsilon
    eps_t = _transition_cost(q)
    if eps_t > alpha * eps:
        target = alpha * eps
        lo, hi = 0.0, 1.0
        for _ in range(200):
            s = 0.5 * (lo + hi)
            cost = _transition_cost(0.5 + s * (q - 0.5))
            if abs(cost - target) <= 1e-12:
                break
            if cost > target:
                hi = s
            else:
                lo = s
        q = 0.5 + s * (q - 0.5)
        eps_t = _transition_cost(q)
    eps_m = eps - eps_t
    p = flip_probability(eps_m / bits_per_record)
    return NoiseModel(p, NoiseMode.MARKOV, q, eps_m + eps_t)


def epsilon_upper_bound_for(p: float, stay_probs, bits_per_record: int,
                            semantics: BudgetSemantics = BudgetSemantics.PER_RECORD) -> float:
    """ε bound from raw parameters; see epsilon_upper_bound."""
    cost = _per_bit_cost(p)
    if stay_probs is None:
        if semantics is BudgetSemantics.PER_BIT:
            return cost
        return bits_per_record * cost
    q = np.asarray(stay_probs, dtype=np.float64)[:max(bits_per_record - 1, 0)]
    return bits_per_record * cost + _transition_cost(q)


def epsilon_upper_bound(model: NoiseModel, bits_per_record: int,
                        semantics: BudgetSemantics = BudgetSemantics.PER_RECORD) -> float:
    """Worst-case log likelihood ratio between neighboring records.

    Independent mode: ln((1-p)/p) per bit, times the record width under
    per-record semantics.  Markov mode (always per-record): the chain
    factorizes into one first-bit term plus per-transition terms, bounded
    by B ln((1-p)/p) + Σ ln(max(q,1-q)/min(q,1-q)).
    """
    stay = model.stay_probs if model.mode is NoiseMode.MARKOV else None
    return epsilon_upper_bound_for(model.p, stay, bits_per_record, semantics)


def _log_noise_probs(model: NoiseModel, bits: int) -> np.ndarray:
    """Exact log-probability of every noise pattern at the given width."""
    patterns = np.arange(1 << bits, dtype=np.uint32)
    e = ((patterns[:, np.newaxis] >> np.arange(bits, dtype=np.uint32)) & 1).astype(bool)
    log_p1 = math.log(model.p)
    log_p0 = math.log1p(-model.p)
    logq = np.where(e[:, 0], log_p1, log_p0)
    if model.mode is NoiseMode.INDEPENDENT:
        for j in range(1, bits):
            logq = logq + np.where(e[:, j], log_p1, log_p0)
        return logq
    if model.stay_probs.size < bits - 1:
        raise SizeError(
            f"model carries {model.stay_probs.size} stay probabilities, "
            f"need {bits - 1}")
    for j in range(1, bits):
        c = 2.0 * float(model.stay_probs[j - 1]) - 1.0
        fresh = np.where(e[:, j], model.p, 1.0 - model.p)
        trans = c * (e[:, j] == e[:, j - 1]) + (1.0 - c) * fresh
        logq = logq + np.log(trans)
    return logq


@dataclass(frozen=True)
class DpCheck:
    """Outcome of exact DP verification at a small record width."""

    bits: int
    max_ratio: float
    epsilon_observed: float
    epsilon_upper: float
    passes: bool

    def to_dict(self):
        return {
            "bits": self.bits,
            "max_ratio": self.max_ratio,
            "epsilon_observed": self.epsilon_observed,
            "epsilon_upper": self.epsilon_upper,
            "passes": self.passes,
        }


def verify_dp_bruteforce(model: NoiseModel, bits: int) -> DpCheck:
    """Enumerate all noise patterns and compare the worst observable
    likelihood ratio against the claimed bound.

    With XOR noise the ratio P(y|x)/P(y|x') over all outputs and record
    pairs is exactly max Q / min Q over noise patterns.
    """
    if bits > 12:
        raise SizeError(f"brute-force verification capped at 12 bits, got {bits}")
    if bits < 1:
        raise SizeError(f"need at least 1 bit, got {bits}")
    logq = _log_noise_probs(model, bits)
    observed = float(logq.max() - logq.min())
    upper = epsilon_upper_bound(model, bits, BudgetSemantics.PER_RECORD)
    return DpCheck(
        bits=bits,
        max_ratio=math.exp(observed),
        epsilon_observed=observed,
        epsilon_upper=upper,
        passes=observed <= upper + 1e-9,
    )


def sample_noise(model: NoiseModel, rows: int, bit_columns: int, seed: int,
                 threads: int = 1) -> NoiseMatrix:
    """Draw the packed noise matrix for the given shape and seed.

    Deterministic in (model, shape, seed): every (row, 64-column tile) has
    its own counter-derived substream, so the output does not depend on
    chunking or the number of worker threads.
    """
    if rows < 0 or bit_columns < 0:
        raise ShapeMismatchError("rows and bit_columns must be non-negative")
    copy = None
    if model.mode is NoiseMode.MARKOV:
        if model.stay_probs.size < bit_columns - 1:
            raise ConfigError(
                f"model carries {model.stay_probs.size} stay probabilities, "
                f"need {bit_columns - 1}")
        copy = np.zeros(max(bit_columns, 1), dtype=np.float64)
        copy[1:bit_columns] = 2.0 * model.stay_probs[:bit_columns - 1] - 1.0

    words = np.zeros((rows, words_per_row(bit_columns)), dtype=np.uint64)

    def fill_block(row0: int):
        count = min(_ROW_BLOCK, rows - row0)
        if model.mode is NoiseMode.INDEPENDENT:
            block = kernels.fill_independent(seed, row0, count, bit_columns, model.p)
        else:
            block = kernels.fill_markov(seed, row0, count, bit_columns, model.p, copy)
        words[row0:row0 + count] = block

    starts = range(0, rows, _ROW_BLOCK)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_block, starts))
    else:
        for row0 in starts:
            fill_block(row0)
    return NoiseMatrix(words, rows, bit_columns, seed)


def xor_apply(x: BinaryMatrix, noise: NoiseMatrix) -> BinaryMatrix:
    """Elementwise exclusive-or of the data matrix with the noise matrix."""
    if (x.rows, x.bit_columns) != (noise.rows, noise.bit_columns):
        raise ShapeMismatchError(
            f"data is {x.rows}x{x.bit_columns}, noise is "
            f"{noise.rows}x{noise.bit_columns}")
    return BinaryMatrix(x.words ^ noise.words, x.bit_columns, x.column_map, x.sample_ids)


def noise_model_to_dict(model: NoiseModel, seed: int) -> dict:
    return {
        "p": model.p,
        "mode": model.mode.value,
        "stay_probs": None if model.stay_probs is None else [float(v) for v in model.stay_probs],
        "epsilon_upper": model.epsilon_upper,
        "seed": seed,
    }


def noise_model_from_dict(doc: dict) -> tuple[NoiseModel, int]:
    stay = doc.get("stay_probs")
    model = NoiseModel(
        p=float(doc["p"]),
        mode=NoiseMode(doc["mode"]),
        stay_probs=None if stay is None else np.asarray(stay, dtype=np.float64),
        epsilon_upper=float(doc["epsilon_upper"]),
    )
    return model, int(doc["seed"])
