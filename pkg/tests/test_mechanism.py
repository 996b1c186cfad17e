import math

import numpy as np
import pytest

from genoshare.bits import BinaryMatrix, unpack_words
from genoshare.errors import ConfigError, ShapeMismatchError, SizeError
from genoshare.mechanism import (
    BlockPlan,
    BudgetSemantics,
    NoiseMode,
    NoiseModel,
    PrivacyBudget,
    budget_per_bit,
    build_correlation_blocks,
    build_independent_model,
    calibrate_markov,
    epsilon_upper_bound,
    epsilon_upper_bound_for,
    flip_probability,
    noise_model_from_dict,
    noise_model_to_dict,
    sample_noise,
    verify_dp_bruteforce,
    xor_apply,
)


def independent_model(p, bits=1):
    return NoiseModel(p, NoiseMode.INDEPENDENT, None, epsilon_upper_bound_for(p, None, bits))


def markov_model(p, q, bits):
    stay = np.full(bits - 1, float(q))
    return NoiseModel(p, NoiseMode.MARKOV, stay, epsilon_upper_bound_for(p, stay, bits))


class TestBudget:
    def test_per_record_division(self):
        assert budget_per_bit(PrivacyBudget(1.0), 10) == pytest.approx(0.1)
        assert budget_per_bit(PrivacyBudget(2.0), 2 * 9091) == pytest.approx(2 / 18182)

    def test_per_bit_passthrough(self):
        b = PrivacyBudget(1.0, BudgetSemantics.PER_BIT)
        assert budget_per_bit(b, 12345) == 1.0

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ConfigError):
            PrivacyBudget(0.0)


class TestFlipProbability:
    def test_known_points(self):
        assert flip_probability(0.0) == pytest.approx(0.5)
        assert flip_probability(math.log(3)) == pytest.approx(0.25)
        assert flip_probability(2.0) == pytest.approx(1.0 / (1.0 + math.exp(2.0)), abs=1e-12)

    def test_strictly_decreasing_into_half_open_range(self):
        grid = np.linspace(0.0, 30.0, 200)
        values = np.array([flip_probability(e) for e in grid])
        assert (np.diff(values) < 0).all()
        assert values.max() == 0.5 and values.min() > 0


class TestCorrelationBlocks:
    def test_identical_columns_hit_q_max(self):
        col = np.tile(np.array([[1], [0], [1], [1]], dtype=bool), (1, 4))
        plan = build_correlation_blocks(BinaryMatrix.from_bool(
            col, ("a", "b"), ("s0", "s1", "s2", "s3")))
        assert plan.correlations == pytest.approx([1.0, 1.0, 1.0])
        assert plan.stay_probs == pytest.approx([0.99, 0.99, 0.99])

    def test_independent_columns_near_half(self, rng):
        bits = rng.random((4000, 6)) < 0.4
        plan = build_correlation_blocks(BinaryMatrix.from_bool(
            bits, ("a", "b", "c"), tuple(f"s{i}" for i in range(4000))))
        assert np.abs(plan.correlations).max() < 0.05
        assert np.abs(plan.stay_probs - 0.5).max() < 0.025

    def test_constant_column_convention(self):
        bits = np.array([[0, 1], [0, 0], [0, 1]], dtype=bool)
        plan = build_correlation_blocks(BinaryMatrix.from_bool(bits, ("a",), ("x", "y", "z")))
        assert plan.correlations[0] == 0.0
        assert plan.stay_probs[0] == 0.5

    def test_no_columns_gives_empty_plan(self):
        empty = BinaryMatrix.from_bool(np.zeros((3, 0), dtype=bool), (), ("x", "y", "z"))
        plan = build_correlation_blocks(empty)
        assert plan.correlations.size == 0 and plan.stay_probs.size == 0


class TestCalibrateMarkov:
    def test_uncorrelated_plan_reduces_to_independent(self):
        plan = BlockPlan(np.zeros(9), np.full(9, 0.5), (0.5, 0.99))
        model = calibrate_markov(PrivacyBudget(3.0), plan, 10)
        independent = build_independent_model(PrivacyBudget(3.0), 10)
        assert model.p == pytest.approx(independent.p, abs=1e-15)
        assert model.epsilon_upper == pytest.approx(3.0)

    def test_single_transition_split(self):
        # hand-evaluated: eps_T = ln(0.6/0.4), eps_M = 2 - eps_T,
        # p = 1/(1 + exp(eps_M / 2)) for a 2-bit record
        plan = BlockPlan(np.zeros(1), np.array([0.6]), (0.5, 0.99))
        model = calibrate_markov(PrivacyBudget(2.0), plan, 2)
        eps_t = math.log(0.6 / 0.4)
        assert model.epsilon_upper == pytest.approx(2.0, abs=1e-12)
        assert model.p == pytest.approx(1.0 / (1.0 + math.exp((2.0 - eps_t) / 2.0)), abs=1e-12)

    def test_oversized_transition_cost_rescaled_exactly(self):
        plan = BlockPlan(np.zeros(50), np.full(50, 0.99), (0.5, 0.99))
        model = calibrate_markov(PrivacyBudget(1.5), plan, 51, alpha=0.5)
        # the bound is spent exactly: epsilon_upper_bound == epsilon
        assert epsilon_upper_bound(model, 51) == pytest.approx(1.5, abs=1e-9)
        stay_cost = float(np.log(model.stay_probs / (1 - model.stay_probs)).sum())
        assert stay_cost == pytest.approx(0.75, abs=1e-9)

    def test_alpha_validation(self):
        plan = BlockPlan(np.zeros(1), np.array([0.6]), (0.5, 0.99))
        for bad in (0.0, 1.0, -1.0, 2.0):
            with pytest.raises(ConfigError):
                calibrate_markov(PrivacyBudget(1.0), plan, 2, alpha=bad)

    def test_requires_per_record(self):
        plan = BlockPlan(np.zeros(1), np.array([0.6]), (0.5, 0.99))
        with pytest.raises(ConfigError):
            calibrate_markov(PrivacyBudget(1.0, BudgetSemantics.PER_BIT), plan, 2)


class TestEpsilonUpperBound:
    def test_independent_one_bit(self):
        assert epsilon_upper_bound(independent_model(0.25), 1) == pytest.approx(math.log(3))

    def test_independent_per_record_scales(self):
        m = independent_model(0.25, 8)
        assert epsilon_upper_bound(m, 8) == pytest.approx(8 * math.log(3))
        assert epsilon_upper_bound(m, 8, BudgetSemantics.PER_BIT) == pytest.approx(math.log(3))

    def test_markov_uncoupled_matches_independent(self):
        assert epsilon_upper_bound(markov_model(0.25, 0.5, 2), 2) == pytest.approx(
            2 * math.log(3))

    def test_markov_transition_term(self):
        got = epsilon_upper_bound(markov_model(0.25, 0.75, 2), 2)
        assert got == pytest.approx(2 * math.log(3) + math.log(3))


class TestVerifyDp:
    def test_quarter_flip_single_bit_exact(self):
        report = verify_dp_bruteforce(independent_model(0.25), 1)
        assert report.max_ratio == pytest.approx(3.0, abs=1e-12)
        assert report.passes

    def test_uniform_noise_is_free(self):
        report = verify_dp_bruteforce(independent_model(0.5, 4), 4)
        assert report.epsilon_observed == pytest.approx(0.0, abs=1e-12)
        assert report.max_ratio == pytest.approx(1.0, abs=1e-12)

    def test_markov_bound_dominates(self):
        report = verify_dp_bruteforce(markov_model(0.25, 0.75, 2), 2)
        assert report.passes
        # exact chain ratio for p=1/4, copy prob 1/2: 7 (enumerated by hand)
        assert report.max_ratio == pytest.approx(7.0, abs=1e-9)

    def test_matches_literal_triple_loop(self):
        """Oracle: enumerate P(y|x)/P(y|x') literally over outputs and inputs."""
        model = markov_model(0.3, 0.8, 3)
        bits = 3
        copy = 2 * 0.8 - 1

        def noise_prob(e):
            prob = model.p if e[0] else 1 - model.p
            for j in range(1, bits):
                fresh = model.p if e[j] else 1 - model.p
                prob *= copy * (e[j] == e[j - 1]) + (1 - copy) * fresh
            return prob

        patterns = [tuple((v >> k) & 1 for k in range(bits)) for v in range(2 ** bits)]
        worst = max(
            noise_prob(tuple(y ^ a for y, a in zip(ys, xs)))
            / noise_prob(tuple(y ^ b for y, b in zip(ys, xp)))
            for ys in patterns for xs in patterns for xp in patterns
        )
        report = verify_dp_bruteforce(model, bits)
        assert report.max_ratio == pytest.approx(worst, rel=1e-9)
        assert report.passes

    def test_size_cap(self):
        with pytest.raises(SizeError):
            verify_dp_bruteforce(independent_model(0.25, 13), 13)


class TestSampleNoise:
    def test_near_zero_p_gives_all_zeros(self):
        model = independent_model(1e-12)
        noise = sample_noise(model, 1000, 1000, seed=4)
        set_bits = int(unpack_words(noise.words, 1000).sum())
        assert set_bits <= 1

    def test_fair_coin_concentration(self):
        model = independent_model(0.5)
        noise = sample_noise(model, 1000, 1000, seed=5)
        rate = unpack_words(noise.words, 1000).mean()
        sigma = 0.5 / math.sqrt(1_000_000)
        assert abs(rate - 0.5) <= 3 * sigma

    def test_markov_agreement_closed_form(self):
        # 2-bit rows: each row contributes one independent adjacent pair
        p, q = 0.3, 0.9
        model = markov_model(p, q, 2)
        noise = sample_noise(model, 200_000, 2, seed=6)
        bits = unpack_words(noise.words, 2)
        agree = (bits[:, 0] == bits[:, 1]).mean()
        c = 2 * q - 1
        expected = c + (1 - c) * (p * p + (1 - p) * (1 - p))
        sigma = math.sqrt(expected * (1 - expected) / 200_000)
        assert abs(agree - expected) <= 3 * sigma

    def test_marginal_rate_is_p_under_markov(self):
        p, q = 0.2, 0.95
        model = markov_model(p, q, 500)
        noise = sample_noise(model, 2000, 500, seed=7)
        rate = unpack_words(noise.words, 500).mean()
        # adjacent-bit correlation c inflates the variance of the mean by
        # roughly (1 + c)/(1 - c) relative to independent draws
        c = 2 * q - 1
        sigma = math.sqrt(p * (1 - p) * (1 + c) / (1 - c) / 1_000_000)
        assert abs(rate - p) <= 3 * sigma

    def test_thread_count_invisible(self):
        model = independent_model(0.25)
        solo = sample_noise(model, 300, 700, seed=8, threads=1)
        quad = sample_noise(model, 300, 700, seed=8, threads=4)
        octo = sample_noise(model, 300, 700, seed=8, threads=8)
        assert np.array_equal(solo.words, quad.words)
        assert np.array_equal(solo.words, octo.words)


class TestXor:
    def test_zero_noise_is_identity(self, rng):
        from genoshare.mechanism import NoiseMatrix

        bits = rng.random((5, 12)) < 0.5
        x = BinaryMatrix.from_bool(bits, tuple("abcdef"), tuple(f"s{i}" for i in range(5)))
        zero = NoiseMatrix(np.zeros_like(x.words), 5, 12, seed=0)
        assert xor_apply(x, zero) == x

    def test_involution(self, rng):
        bits = rng.random((6, 20)) < 0.5
        x = BinaryMatrix.from_bool(bits, tuple(f"r{j}" for j in range(10)),
                                   tuple(f"s{i}" for i in range(6)))
        noise = sample_noise(independent_model(0.4), 6, 20, seed=9)
        assert xor_apply(xor_apply(x, noise), noise) == x

    def test_truth_table(self):
        from genoshare.bits import pack_bool
        from genoshare.mechanism import NoiseMatrix

        x = BinaryMatrix.from_bool(np.array([[1, 0, 1, 0]], dtype=bool),
                                   ("a", "b"), ("s",))
        n = NoiseMatrix(pack_bool(np.array([[1, 1, 0, 0]], dtype=bool)), 1, 4, seed=0)
        got = xor_apply(x, n).to_bool().astype(int).tolist()
        assert got == [[0, 1, 1, 0]]

    def test_shape_mismatch(self, rng):
        x = BinaryMatrix.from_bool(rng.random((2, 4)) < 0.5, ("a", "b"), ("s1", "s2"))
        noise = sample_noise(independent_model(0.4), 2, 6, seed=1)
        with pytest.raises(ShapeMismatchError):
            xor_apply(x, noise)


class TestModelSerialization:
    def test_round_trip(self):
        model = markov_model(0.21, 0.8, 5)
        doc = noise_model_to_dict(model, seed=77)
        back, seed = noise_model_from_dict(doc)
        assert seed == 77
        assert back.p == model.p and back.mode == model.mode
        assert np.array_equal(back.stay_probs, model.stay_probs)
        assert back.epsilon_upper == model.epsilon_upper
