import numpy as np
import pytest

from genoshare.bits import BinaryMatrix
from genoshare.errors import AlignmentError, NoSignalError
from genoshare.ingest import decode_binary, encode_binary
from genoshare.mechanism import (
    NoiseMode,
    NoiseModel,
    epsilon_upper_bound_for,
    sample_noise,
    xor_apply,
)
from genoshare.postprocess import (
    bit_priors_for,
    debias_frequency,
    hwe_bit_priors,
    posterior_one,
    restore,
)
from genoshare.synth import random_panel, simulate_population

from conftest import dataset_of, panel_of


def flat_model(p):
    return NoiseModel(p, NoiseMode.INDEPENDENT, None, epsilon_upper_bound_for(p, None, 1))


class TestHweBitPriors:
    @pytest.mark.parametrize("f,expected", [
        (0.0, (0.0, 0.0)),
        (0.5, (0.75, 0.25)),
        (0.1, (0.19, 0.01)),
    ])
    def test_values(self, f, expected):
        q1, q2 = hwe_bit_priors(f)
        assert (q1, q2) == pytest.approx(expected)

    def test_monotone_pair(self):
        for f in np.linspace(0, 0.5, 50):
            q1, q2 = hwe_bit_priors(f)
            assert 0.0 <= q2 <= q1 <= 1.0


class TestDebias:
    def test_fixed_points(self):
        assert debias_frequency(0.25, 0.25) == 0.0
        assert debias_frequency(0.75, 0.25) == 1.0
        assert debias_frequency(0.5, 0.25) == pytest.approx(0.5)

    def test_clamped(self):
        assert debias_frequency(0.0, 0.25) == 0.0
        assert debias_frequency(1.0, 0.25) == 1.0

    def test_no_signal_at_half(self):
        with pytest.raises(NoSignalError):
            debias_frequency(0.5, 0.5)

    def test_inverts_expected_flip(self):
        # E[observed] = f(1-p) + (1-f)p; debias must return f exactly
        for f in (0.0, 0.2, 0.9):
            for p in (0.05, 0.3, 0.49):
                observed = f * (1 - p) + (1 - f) * p
                assert debias_frequency(observed, p) == pytest.approx(f, abs=1e-12)


class TestPosterior:
    def test_no_signal_returns_prior(self):
        for q in (0.0, 0.3, 1.0):
            assert posterior_one(1, 0.5, q) == pytest.approx(q)
            assert posterior_one(0, 0.5, q) == pytest.approx(q)

    def test_degenerate_priors(self):
        assert posterior_one(0, 0.1, 1.0) == 1.0
        assert posterior_one(1, 0.1, 0.0) == 0.0

    def test_known_value(self):
        assert posterior_one(1, 0.25, 0.5) == pytest.approx(0.75)

    def test_bayes_rule_oracle(self, rng):
        """Cross-check against direct joint-probability arithmetic."""
        for _ in range(100):
            p, q = rng.uniform(0.01, 0.49), rng.uniform(0.01, 0.99)
            y = int(rng.integers(0, 2))
            p_y_given_one = (1 - p) if y == 1 else p
            p_y_given_zero = p if y == 1 else (1 - p)
            expected = p_y_given_one * q / (p_y_given_one * q + p_y_given_zero * (1 - q))
            assert posterior_one(y, p, q) == pytest.approx(expected, abs=1e-12)


class TestRestore:
    def test_tiny_noise_reproduces_input(self, rng):
        panel = random_panel(40, seed=3)
        ds = simulate_population(panel, 25, seed=4)
        y = encode_binary(ds)
        assert restore(y, flat_model(1e-9), panel, lam=1.0) == y

    def test_zero_prior_zero_lambda_empties_columns(self):
        panel = panel_of({"rs0000": 0.0, "rs0001": 0.0})
        ds = dataset_of([[2, 1], [1, 0], [2, 2]], rsids=panel.rsids)
        out = restore(encode_binary(ds), flat_model(0.2), panel, lam=0.0)
        assert not out.to_bool().any()

    def test_column_sums_equal_targets(self, rng):
        panel = random_panel(30, seed=5)
        ds = simulate_population(panel, 50, seed=6)
        model = flat_model(0.25)
        y = xor_apply(encode_binary(ds), sample_noise(model, 50, 60, seed=7))
        out = restore(y, model, panel, lam=0.5)

        bits = y.to_bool()
        prior = bit_priors_for(panel, y.column_map)
        debiased = np.clip((bits.mean(axis=0) - 0.25) / 0.5, 0, 1)
        target = np.floor(50 * (0.5 * debiased + 0.5 * prior) + 0.5).astype(int)
        assert out.to_bool().sum(axis=0).tolist() == target.tolist()

    def test_matches_explicit_sort_oracle(self, rng):
        """Literal implementation: sort cells by (posterior desc, y desc, row)."""
        panel = random_panel(12, seed=8)
        ds = simulate_population(panel, 17, seed=9)
        model = flat_model(0.3)
        y = xor_apply(encode_binary(ds), sample_noise(model, 17, 24, seed=10))
        got = restore(y, model, panel, lam=0.4).to_bool()

        bits = y.to_bool()
        prior = bit_priors_for(panel, y.column_map)
        expected = np.zeros_like(bits)
        n = bits.shape[0]
        for j in range(bits.shape[1]):
            f_star = 0.4 * debias_frequency(bits[:, j].mean(), 0.3) + 0.6 * prior[j]
            t = min(max(int(np.floor(n * f_star + 0.5)), 0), n)
            order = sorted(
                range(n),
                key=lambda i: (-posterior_one(int(bits[i, j]), 0.3, prior[j]),
                               -int(bits[i, j]), i))
            for i in order[:t]:
                expected[i, j] = True
        assert np.array_equal(got, expected)

    def test_pure_function_of_perturbed_matrix(self, rng):
        """Post-processing invariance: two originals, same y -> same output."""
        panel = random_panel(10, seed=11)
        model = flat_model(0.2)
        y_bits = rng.random((9, 20)) < 0.4
        ids = tuple(f"s{i}" for i in range(9))
        y = BinaryMatrix.from_bool(y_bits, panel.rsids, ids)
        # y is reachable from any original via a suitable noise pattern, so
        # restore must not depend on which one produced it
        first = restore(y, model, panel)
        second = restore(y, model, panel)
        assert first == second
        assert first.sample_ids == ids

    def test_restored_pairs_may_break_monotonicity_but_decode(self):
        # perturbed rows (0,1) and (1,0): each bit column keeps its own
        # observed one, leaving row 0 with the unreachable pair (0,1)
        panel = panel_of({"rs0000": 0.5})
        y = BinaryMatrix.from_bool(np.array([[0, 1], [1, 0]], dtype=bool),
                                   panel.rsids, ("s0", "s1"))
        out = restore(y, flat_model(0.3), panel, lam=1.0)
        bits = out.to_bool()
        assert bits.tolist() == [[False, True], [True, False]]
        assert bits[0, 1] and not bits[0, 0]  # b2 set without b1
        assert decode_binary(out).genotypes.tolist() == [[1], [1]]

    def test_panel_mismatch(self, rng):
        panel = panel_of({"rsA": 0.2})
        other = panel_of({"rsB": 0.2})
        ds = dataset_of([[1], [0]], rsids=("rsA",))
        with pytest.raises(AlignmentError):
            restore(encode_binary(ds), flat_model(0.2), other)
