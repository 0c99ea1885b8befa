"""Tests for the decoding-time sampling strategies."""

import numpy as np
import pytest
from scipy import stats

from inkbridge.errors import ValidationFailure
from inkbridge.prng import Xoshiro256StarStar
from inkbridge.sampling import (
    LogitVector,
    SamplingConfig,
    greedy_sample,
    nucleus_sample,
    sample_token,
    softmax_temperature,
    top_k_sample,
)


def lv(values):
    return LogitVector(np.asarray(values, dtype=np.float64))


def draw_counts(fn, vector, cfg, n_draws, seed=0):
    rng = Xoshiro256StarStar(seed)
    counts = {}
    for _ in range(n_draws):
        idx = fn(vector, cfg, rng)
        counts[idx] = counts.get(idx, 0) + 1
    return counts


def chisquare_p(counts, expected_probs, n_draws):
    support = sorted(expected_probs)
    observed = [counts.get(i, 0) for i in support]
    expected = [expected_probs[i] * n_draws for i in support]
    return stats.chisquare(observed, expected).pvalue


# ---------------------------------------------------------------------------
# Temperature softmax


def test_softmax_uniform_logits():
    for t in (0.1, 0.6, 1.0, 10.0):
        probs = softmax_temperature(lv([2.0, 2.0, 2.0]), t)
        np.testing.assert_allclose(probs, 1.0 / 3.0)


def test_softmax_analytic_pair():
    probs = softmax_temperature(lv([0.0, np.log(2.0)]), 1.0)
    np.testing.assert_allclose(probs, [1.0 / 3.0, 2.0 / 3.0], atol=1e-15)


def test_softmax_low_temperature_concentrates():
    probs = softmax_temperature(lv([0.1, 0.9, 0.5]), 1e-4)
    assert probs[1] > 1.0 - 1e-6


def test_softmax_sums_to_one():
    rng = np.random.default_rng(0)
    for _ in range(50):
        probs = softmax_temperature(lv(rng.normal(size=17) * 5), float(rng.uniform(0.1, 3)))
        assert abs(probs.sum() - 1.0) <= 1e-12


def test_softmax_temperature_must_be_positive():
    with pytest.raises(ValidationFailure):
        softmax_temperature(lv([1.0]), 0.0)


# ---------------------------------------------------------------------------
# Top-k


def test_top_k_one_is_argmax():
    rng_np = np.random.default_rng(1)
    rng = Xoshiro256StarStar(3)
    cfg = SamplingConfig(strategy="top_k", k=1, temperature=0.6)
    for _ in range(1000):
        vector = lv(rng_np.normal(size=23))
        assert top_k_sample(vector, cfg, rng) == int(np.argmax(vector.logits))


def test_top_k_boundary_tie_takes_lowest_index():
    # Logits (2, 1, 1): at k=2 the boundary tie between indices 1 and 2
    # resolves to index 1, so index 2 must never be drawn.
    cfg = SamplingConfig(strategy="top_k", k=2, temperature=1.0)
    counts = draw_counts(top_k_sample, lv([2.0, 1.0, 1.0]), cfg, 3000)
    assert set(counts) == {0, 1}


def test_top_k_analytic_distribution():
    # Logits ln(1..4), k=2, T=1: support {3, 2} with probabilities 4/7, 3/7.
    cfg = SamplingConfig(strategy="top_k", k=2, temperature=1.0)
    n = 40_000
    counts = draw_counts(top_k_sample, lv(np.log([1.0, 2.0, 3.0, 4.0])), cfg, n, seed=11)
    assert set(counts) == {2, 3}
    assert chisquare_p(counts, {3: 4 / 7, 2: 3 / 7}, n) > 0.001


def test_top_k_clamps_oversized_k():
    cfg = SamplingConfig(strategy="top_k", k=10, temperature=1.0)
    with pytest.warns(UserWarning, match="clamping"):
        idx = top_k_sample(lv([0.0, 1.0]), cfg, Xoshiro256StarStar(0))
    assert idx in (0, 1)


def test_top_k_full_vocab_matches_plain_temperature():
    logits = np.array([0.3, -0.2, 0.9, 0.0])
    cfg = SamplingConfig(strategy="top_k", k=4, temperature=0.7)
    n = 40_000
    counts = draw_counts(top_k_sample, lv(logits), cfg, n, seed=5)
    expected = softmax_temperature(lv(logits), 0.7)
    tv = 0.5 * sum(abs(counts.get(i, 0) / n - expected[i]) for i in range(4))
    assert tv < 0.01


# ---------------------------------------------------------------------------
# Nucleus


def test_nucleus_tiny_p_is_argmax():
    cfg = SamplingConfig(strategy="nucleus", p=1e-12, temperature=1.0)
    counts = draw_counts(nucleus_sample, lv([0.5, 2.0, 1.0]), cfg, 500)
    assert set(counts) == {1}


def test_nucleus_p_one_full_support():
    cfg = SamplingConfig(strategy="nucleus", p=1.0, temperature=1.0)
    counts = draw_counts(nucleus_sample, lv([0.0, 0.0, 0.0]), cfg, 5000, seed=2)
    assert set(counts) == {0, 1, 2}


def test_nucleus_analytic_prefix():
    # Probabilities (0.5, 0.3, 0.2) with p=0.7: support {0, 1} renormalized
    # to (0.625, 0.375).
    logits = np.log([0.5, 0.3, 0.2])
    cfg = SamplingConfig(strategy="nucleus", p=0.7, temperature=1.0)
    n = 40_000
    counts = draw_counts(nucleus_sample, lv(logits), cfg, n, seed=13)
    assert set(counts) == {0, 1}
    assert chisquare_p(counts, {0: 0.625, 1: 0.375}, n) > 0.001


def test_nucleus_includes_crossing_token():
    # Uniform logits make every probability the same float, so two tokens
    # accumulate exactly float(2/3): the prefix stops at the crossing token
    # and ties resolve to the lowest indices.
    cfg = SamplingConfig(strategy="nucleus", p=2.0 / 3.0, temperature=1.0)
    counts = draw_counts(nucleus_sample, lv([1.0, 1.0, 1.0]), cfg, 5000, seed=7)
    assert set(counts) == {0, 1}


def test_nucleus_support_independent_of_seed():
    logits = np.log([0.4, 0.3, 0.2, 0.1])
    cfg = SamplingConfig(strategy="nucleus", p=0.85, temperature=1.0)
    supports = set()
    for seed in range(5):
        counts = draw_counts(nucleus_sample, lv(logits), cfg, 2000, seed=seed)
        supports.add(frozenset(counts))
    assert supports == {frozenset({0, 1, 2})}


# ---------------------------------------------------------------------------
# Determinism and config


def test_identical_seed_identical_stream():
    rng_np = np.random.default_rng(4)
    vectors = [lv(rng_np.normal(size=50)) for _ in range(1000)]
    cfg = SamplingConfig(strategy="top_k")

    def stream():
        rng = Xoshiro256StarStar(99)
        return [sample_token(v, cfg, rng) for v in vectors]

    assert stream() == stream()


def test_defaults_match_published_constants():
    cfg = SamplingConfig(strategy="top_k")
    assert cfg.k == 12
    assert cfg.temperature == 0.6
    assert cfg.p == 0.9
    assert cfg.to_dict() == {
        "strategy": "top_k", "k": 12, "temperature": 0.6, "p": 0.9, "seed": 0,
    }


def test_greedy_sample():
    assert greedy_sample(lv([0.1, 3.0, 3.0])) == 1  # tie -> lowest index
    cfg = SamplingConfig(strategy="greedy")
    assert sample_token(lv([0.0, 5.0]), cfg, Xoshiro256StarStar(0)) == 1


def test_config_validation():
    for kwargs in (
        {"strategy": "beam"},
        {"strategy": "top_k", "k": 0},
        {"strategy": "top_k", "temperature": 0.0},
        {"strategy": "nucleus", "p": 0.0},
        {"strategy": "nucleus", "p": 1.5},
    ):
        with pytest.raises(ValidationFailure):
            SamplingConfig(**kwargs)


def test_empty_logits_rejected():
    with pytest.raises(ValidationFailure):
        LogitVector(np.array([]))
