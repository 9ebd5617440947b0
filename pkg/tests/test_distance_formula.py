import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from projwalk.distance_formula import interval_decomposition, large_coset_count
from projwalk.projection import ProjectionSystem, canonicalize, proj_distance
from projwalk.subgroup import SubgroupGraph
from projwalk.words import Word, mul, random_reduced_word

W = Word.parse
CYC = ProjectionSystem.cyclic()
STALL = ProjectionSystem.stallings(SubgroupGraph.from_generators(["ab", "baB"]), 3, 4, 2)


def runs(s: str, K: int):
    """(start, length) of every a-block or A-block of length >= K."""
    return [(m.start(), len(m.group())) for m in re.finditer(r"a+|A+", s) if len(m.group()) >= K]


def test_examples():
    r = interval_decomposition("aaaba", CYC, 8)
    assert r.intervals == [] and r.total == 0 and r.ok
    r = interval_decomposition("a" * 10 + "b" + "a" * 10, CYC, 8)
    assert r.large_cosets == 2 and r.total == 20 and r.bound == 5 * 2 * 1 * 21
    assert [(iv.i, iv.t) for iv in r.intervals] == [(3, 7), (14, 18)]
    assert r.max_overlap == 1 and r.ok
    r = interval_decomposition(Word.identity(), CYC, 8)
    assert r.intervals == [] and r.length == 0 and r.ok


def test_large_coset_count_examples():
    assert large_coset_count("a" * 10 + "b" + "a" * 10, CYC, 8) == 2
    assert large_coset_count("ab" * 50, CYC, 8) == 0
    assert large_coset_count("a" * 8, CYC, 8) == 1


def test_K_precondition():
    with pytest.raises(ValueError):
        interval_decomposition("aaaa", CYC, 7)
    with pytest.raises(ValueError):
        large_coset_count("aaaa", STALL, 28)


words = st.lists(st.sampled_from(["a", "A", "b", "B", "aaaaaaaaa", "AAAAAAAAAAA"]), max_size=30).map(
    lambda parts: Word.parse("".join(parts) or "1"))


@given(words)
def test_cyclic_matches_run_decomposition(w):
    s = str(w).replace("1", "")
    r = interval_decomposition(w, CYC, 8)
    expect = runs(s, 8)
    assert r.large_cosets == len(expect)
    assert r.total == sum(n for _, n in expect) <= len(w)
    # intervals sit 2B + L = 3 letters inside each run
    assert sorted((iv.i, iv.t) for iv in r.intervals) == [(p + 3, p + n - 3) for p, n in expect]
    assert r.ok


def test_random_long_words_cyclic():
    rng = np.random.default_rng(0)
    for _ in range(200):
        arr = random_reduced_word(int(rng.integers(1, 3000)), 2, rng).array()
        r = interval_decomposition(arr, CYC)
        assert r.ok and r.total <= r.length


def stallings_brute(w: Word, K: int) -> dict:
    Q = STALL.subgroup
    out = {}
    for j in range(len(w) + 1):
        pre = Word(w.codes[:j])
        for v in range(Q.num_vertices):
            Z = canonicalize(mul(pre, Q.path_word(v)), Q)
            d = proj_distance(Word.identity(), w, Z)
            if d >= K:
                out[Z] = d
    return out


def test_stallings_large_cosets_match_brute_force():
    rng = np.random.default_rng(3)
    gens = ["ab", "baB"]
    K = STALL.K
    for _ in range(12):
        parts = []
        for _ in range(int(rng.integers(1, 4))):
            parts.append(str(random_reduced_word(int(rng.integers(0, 3)), 2, rng)).replace("1", ""))
            g = gens[int(rng.integers(2))]
            parts.append(g * int(rng.integers(8, 20)))
        w = W("".join(parts))
        r = interval_decomposition(w, STALL)
        brute = stallings_brute(w, K)
        assert r.large_cosets == len(brute)
        assert r.total == sum(brute.values())
        assert r.ok, (str(w), r.interval_violations, r.claim_violations)


def test_report_json():
    r = interval_decomposition("a" * 10 + "b" + "a" * 10, CYC, 8)
    d = r.to_json()
    assert d["ok"] and d["overlap_histogram"]["1"] == 10
