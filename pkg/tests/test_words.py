import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import CayleyBall, free_reduce, inverse
from projwalk.words import (
    Letter, StepMeasure, Word, ball, inv, mul, random_reduced_word, reduce, sample_step, word_distance,
)

W = Word.parse
raw_codes = st.lists(st.integers(0, 3), max_size=40)
reduced = raw_codes.map(lambda cs: Word(tuple(cs)))


def test_reduce_examples():
    a, b = Letter(0, 1), Letter(1, 1)
    A, B = Letter(0, -1), Letter(1, -1)
    assert reduce([a, b, B, a]) == W("aa")
    assert reduce([]) == Word.identity()
    assert reduce([a, A, a, A]) == Word.identity()


def test_mul_inv_examples():
    assert mul(W("ab"), W("Ba")) == W("aa")
    assert mul(W("abbA"), Word.identity()) == W("abbA")
    assert mul(W("aaa"), W("A")) == W("aa")
    assert inv(W("aB")) == W("bA")
    assert inv(Word.identity()) == Word.identity()
    assert inv(W("aa")) == W("AA")


def test_distance_examples():
    assert word_distance(W("ab"), W("a")) == 1
    assert word_distance(W("abA"), W("abA")) == 0
    # frozen from BFS on the radius-6 ball
    ball6 = CayleyBall(6)
    assert word_distance(W("aaa"), W("bbb")) == ball6.dist[ball6.index["aaa"], ball6.index["bbb"]] == 6


def test_string_round_trip():
    for s in ["1", "aabA", "bAAB", "cCa"]:
        w = W(s)
        assert W(str(w)) == w
    assert str(Word.identity()) == "1"
    with pytest.raises(ValueError):
        W("a2b")


@given(raw_codes)
def test_reduce_idempotent_and_matches_string_oracle(cs):
    w = Word(tuple(cs))
    assert Word(w.codes) == w
    s = "".join("aAbB"[c] for c in cs)
    assert str(w) == (free_reduce(s) or "1")


@given(reduced, reduced)
def test_product_length_bound(u, v):
    assert len(mul(u, v)) <= len(u) + len(v)
    assert str(mul(u, v)) == (free_reduce(str(u).replace("1", "") + str(v).replace("1", "")) or "1")


@given(reduced, reduced, reduced)
def test_group_axioms(u, v, w):
    assert mul(mul(u, v), w) == mul(u, mul(v, w))
    assert mul(u, inv(u)) == Word.identity()
    assert inv(inv(u)) == u
    assert mul(u, Word.identity()) == u


@given(reduced, reduced, reduced)
def test_triangle_inequality(u, v, w):
    assert word_distance(u, w) <= word_distance(u, v) + word_distance(v, w)
    assert (word_distance(u, v) == 0) == (u == v)
    assert word_distance(u, v) == len(mul(inv(u), v))


def test_group_axioms_on_long_random_triples():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        u, v, w = (random_reduced_word(int(rng.integers(0, 65)), 2, rng) for _ in range(3))
        assert mul(mul(u, v), w) == mul(u, mul(v, w))
        assert mul(u, inv(u)) == Word.identity()
        assert str(inv(u)) == (inverse(str(u)) if len(u) else "1")


def test_random_reduced_word_is_reduced():
    rng = np.random.default_rng(1)
    for n in [0, 1, 2, 50]:
        w = random_reduced_word(n, 3, rng)
        assert len(w) == n


def test_ball_counts_and_order():
    b = ball(3, 2)
    assert len(b) == 1 + 4 + 12 + 36
    keys = [w.shortlex_key() for w in b]
    assert keys == sorted(keys)


def test_runs_view():
    assert W("aabAAAba").runs() == [(0, 2), (2, 1), (1, 3), (2, 1), (0, 1)]


# --- step measures -----------------------------------------------------------


def test_measure_validation():
    with pytest.raises(ValueError):
        StepMeasure.from_mapping({"a": 1.0})                 # asymmetric
    with pytest.raises(ValueError):
        StepMeasure.from_mapping({"a": 0.5, "A": 0.6})       # does not sum to 1
    with pytest.raises(ValueError):
        StepMeasure.from_mapping({"a": 0.5, "A": 0.5, "b": 0.0, "B": 0.0})
    with pytest.raises(ValueError):
        StepMeasure.from_mapping({"a": 0.4, "A": 0.6})       # weights differ
    mu = StepMeasure.from_mapping({"ab": 0.3, "BA": 0.3, "a": 0.2, "A": 0.2})
    assert mu.min_prob == 0.2 and mu.max_step_length == 2


def test_point_mass_and_frequencies():
    rng = np.random.default_rng(3)
    pm = StepMeasure.point_mass("a")
    assert all(sample_step(pm, rng) == W("a") for _ in range(20))
    mu = StepMeasure.uniform()
    n = 40_000
    hits = sum(sample_step(mu, rng) == W("a") for _ in range(n))
    sigma = np.sqrt(n * 0.25 * 0.75)
    assert abs(hits - n / 4) <= 3 * sigma


def test_symmetric_exponent_mean():
    rng = np.random.default_rng(5)
    mu = StepMeasure.from_mapping({"a": 0.5, "A": 0.5})
    n = 100_000
    a = W("a")
    exps = np.array([1 if sample_step(mu, rng) == a else -1 for _ in range(n)])
    assert abs(exps.mean()) <= 3 / np.sqrt(n)
