"""Tests for the portable 64-bit PRNG."""

import pytest

from inkbridge.prng import Xoshiro256StarStar, splitmix64_next


def test_splitmix64_reference_vector():
    # Published output sequence of the reference C splitmix64 for state 1234567.
    state = 1234567
    outputs = []
    for _ in range(5):
        state, z = splitmix64_next(state)
        outputs.append(z)
    assert outputs == [
        6457827717110365317,
        3203168211198807973,
        9817491932198370423,
        4593380528125082431,
        16408922859458223821,
    ]


def test_xoshiro_frozen_outputs():
    # Regression pin: first outputs for two seeds, frozen from the
    # splitmix64-seeded xoshiro256** transcription.
    assert [Xoshiro256StarStar(0).next_u64() for _ in range(1)] == [11091344671253066420]
    rng = Xoshiro256StarStar(42)
    assert [rng.next_u64() for _ in range(4)] == [
        1546998764402558742,
        6990951692964543102,
        12544586762248559009,
        17057574109182124193,
    ]


def test_same_seed_same_stream():
    a = Xoshiro256StarStar(7)
    b = Xoshiro256StarStar(7)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_double_range_and_mean():
    rng = Xoshiro256StarStar(123)
    xs = [rng.next_double() for _ in range(20000)]
    assert all(0.0 <= x < 1.0 for x in xs)
    assert abs(sum(xs) / len(xs) - 0.5) < 0.01


def test_next_below_unbiased_support():
    rng = Xoshiro256StarStar(5)
    draws = [rng.next_below(7) for _ in range(7000)]
    counts = {v: draws.count(v) for v in range(7)}
    assert set(counts) == set(range(7))
    assert min(counts.values()) > 800  # roughly uniform

    with pytest.raises(ValueError):
        rng.next_below(0)


def test_shuffle_is_permutation_and_deterministic():
    items = list(range(50))
    a, b = list(items), list(items)
    Xoshiro256StarStar(9).shuffle(a)
    Xoshiro256StarStar(9).shuffle(b)
    assert a == b
    assert sorted(a) == items
    c = list(items)
    Xoshiro256StarStar(10).shuffle(c)
    assert c != a  # different seed, different order (overwhelmingly)


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        Xoshiro256StarStar(-1)
