"""Log-domain weight vectors, categorical sampling, and seed-stream plumbing."""

import math

import mpmath as mp
import numpy as np
import pytest

from mixprior import (
    DegenerateWeightsError,
    MixtureWeights,
    RngStream,
    derive_stream_id,
    normalize,
    sample_categorical,
)

mp.mp.dps = 50


class TestNormalize:
    def test_two_zeros_give_half_half(self):
        w = normalize(np.array([0.0, 0.0]))
        np.testing.assert_allclose(w.log_w, math.log(0.5), rtol=0, atol=1e-15)

    def test_single_atom_passes_through(self):
        w = normalize(np.array([0.0, -np.inf]))
        assert w.log_w[0] == 0.0
        assert w.log_w[1] == -np.inf

    def test_large_inputs_match_high_precision_logsumexp(self):
        raw = [100.0, 101.0, 102.0]
        lse = mp.log(sum(mp.e ** mp.mpf(x) for x in raw))
        expected = [float(mp.mpf(x) - lse) for x in raw]
        w = normalize(np.array(raw))
        np.testing.assert_allclose(w.log_w, expected, rtol=0, atol=1e-14)

    def test_shift_matches_unshifted(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            raw = rng.standard_normal(5) * 10
            c = float(rng.uniform(-300, 300))
            a = normalize(raw)
            b = normalize(raw + c)
            np.testing.assert_allclose(a.log_w, b.log_w, rtol=0, atol=1e-12)

    def test_idempotent_bitwise(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            raw = rng.standard_normal(rng.integers(1, 8)) * rng.uniform(0.1, 200)
            once = normalize(raw)
            twice = normalize(once.log_w)
            assert np.array_equal(once.log_w, twice.log_w)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            w = normalize(rng.standard_normal(6) * 50)
            assert abs(w.probabilities().sum() - 1.0) < 1e-12

    def test_all_neg_inf_rejected(self):
        with pytest.raises(DegenerateWeightsError):
            normalize(np.array([-np.inf, -np.inf]))

    def test_nan_rejected(self):
        with pytest.raises(DegenerateWeightsError):
            normalize(np.array([0.0, np.nan]))

    def test_pos_inf_rejected(self):
        with pytest.raises(DegenerateWeightsError):
            normalize(np.array([0.0, np.inf]))


class TestSampleCategorical:
    def test_atom_always_chosen(self):
        w = normalize(np.array([0.0, -np.inf]))
        rng = np.random.default_rng(3)
        assert all(sample_categorical(w, rng) == 0 for _ in range(100))

    def test_zero_mass_entries_never_sampled(self):
        w = normalize(np.array([-np.inf, 0.0, -np.inf]))
        rng = np.random.default_rng(4)
        assert all(sample_categorical(w, rng) == 1 for _ in range(1000))

    def test_uniform_frequencies(self):
        w = MixtureWeights.uniform(4)
        rng = np.random.default_rng(5)
        draws = np.array([sample_categorical(w, rng) for _ in range(100_000)])
        freqs = np.bincount(draws, minlength=4) / draws.size
        np.testing.assert_allclose(freqs, 0.25, atol=0.01)

    def test_nine_to_one_frequencies(self):
        w = normalize(np.log(np.array([0.9, 0.1])))
        rng = np.random.default_rng(6)
        draws = np.array([sample_categorical(w, rng) for _ in range(100_000)])
        assert abs((draws == 0).mean() - 0.9) < 0.01

    def test_permuted_weights_permute_distribution(self):
        # chi-square on the permuted sampler against the base frequencies
        probs = np.array([0.1, 0.2, 0.3, 0.4])
        perm = np.array([2, 0, 3, 1])
        w_perm = normalize(np.log(probs[perm]))
        rng = np.random.default_rng(7)
        m = 100_000
        draws = np.array([sample_categorical(w_perm, rng) for _ in range(m)])
        observed = np.bincount(draws, minlength=4)
        expected = probs[perm] * m
        chi2 = ((observed - expected) ** 2 / expected).sum()
        # 3 dof, p > 0.01 means chi2 below 11.345
        assert chi2 < 11.345


class TestRngStream:
    def test_same_ids_same_stream(self):
        a = RngStream(42, 7).generator().random(10)
        b = RngStream(42, 7).generator().random(10)
        assert np.array_equal(a, b)

    def test_distinct_ids_differ(self):
        a = RngStream(42, 7).generator().random(10)
        b = RngStream(42, 8).generator().random(10)
        assert not np.array_equal(a, b)

    def test_distinct_streams_uncorrelated(self):
        n = 20_000
        a = RngStream(0, derive_stream_id("agent", 0, 0)).generator().random(n)
        b = RngStream(0, derive_stream_id("agent", 0, 1)).generator().random(n)
        corr = np.corrcoef(a, b)[0, 1]
        assert abs(corr) < 0.03


class TestDeriveStreamId:
    def test_deterministic(self):
        assert derive_stream_id("env", 3, 1) == derive_stream_id("env", 3, 1)

    def test_part_order_matters(self):
        assert derive_stream_id("a", 1, 2) != derive_stream_id("a", 2, 1)

    def test_tag_separates_streams(self):
        assert derive_stream_id("agent", 0, 0, "mix-ts") != derive_stream_id(
            "agent", 0, 0, "ts"
        )

    def test_string_int_not_conflated(self):
        assert derive_stream_id("x", 1) != derive_stream_id("x", "1")
