import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import CayleyBall, longest_axis_run, shortlex_key, shortlex_min_in_axis_coset, subgroup_elements
from projwalk.projection import (
    Coset, ProjectionSystem, batch_gates, batch_proj_distance, canonicalize, gate, pack, proj_distance,
    projection_diameter, translate, transverse,
)
from projwalk.subgroup import SubgroupGraph
from projwalk.words import Word, ball, mul, random_reduced_word, word_distance

W = Word.parse
CYC = ProjectionSystem.cyclic()
Q = CYC.subgroup
Y0 = CYC.base
STALL_GENS = ["ab", "baB"]
QS = SubgroupGraph.from_generators(STALL_GENS)

words = st.lists(st.integers(0, 3), max_size=24).map(lambda cs: Word(tuple(cs)))


def coset(s, sub=Q):
    return canonicalize(W(s), sub)


def random_subgroup_element(sub: SubgroupGraph, rng, factors=4) -> Word:
    gens = sub.generators()
    h = Word.identity()
    for _ in range(factors):
        g = gens[int(rng.integers(len(gens)))]
        h = mul(h, g if rng.random() < 0.5 else g.inverse())
    return h


# --- subgroup graphs ---------------------------------------------------------


def test_cyclic_graph():
    assert Q.num_vertices == 1 and Q.cyclic_axis == 0
    assert Q.contains(W("aaaa")) and not Q.contains(W("ab"))


def test_folding_matches_enumeration():
    elems = subgroup_elements(STALL_GENS, 8)
    for w in ball(6, 2):
        assert QS.contains(w) == (str(w).replace("1", "") in elems)


def test_folding_merges_shared_prefixes():
    G = SubgroupGraph.from_generators(["ab", "aB"])
    assert G.num_vertices == 2
    assert G.contains(W("abbA")) and G.contains(W("ab")) and not G.contains(W("a"))


def test_generators_generate():
    for w in QS.generators():
        assert QS.contains(w)
    rebuilt = SubgroupGraph.from_generators(QS.generators())
    assert rebuilt == QS


def test_graph_validation():
    with pytest.raises(ValueError):
        SubgroupGraph(2, 2, ((0, 1, 0), (0, 1, 0)))      # not folded
    with pytest.raises(ValueError):
        SubgroupGraph(2, 2, ((0, 0, 0), (0, 1, 1)))      # vertex 1 is a hair
    with pytest.raises(ValueError):
        SubgroupGraph.from_generators(["a", "b"])          # finite index
    with pytest.raises(ValueError):
        SubgroupGraph.from_generators(["aA"])              # trivial


def test_graph_json_round_trip():
    assert SubgroupGraph.from_json(QS.to_json()) == QS
    assert SubgroupGraph.from_json(QS.to_json()).id == QS.id


# --- canonical cosets --------------------------------------------------------


def test_canonicalize_examples():
    assert coset("aaa").rep == Word.identity()
    assert coset("baa").rep == W("b")
    assert coset("aba").rep == W("ab")
    # oracle: shortlex min over g a^m
    for g in ["baa", "aba", "bAAbaa", "Ab"]:
        assert str(coset(g).rep).replace("1", "") == shortlex_min_in_axis_coset(g)


@given(words)
def test_canonicalize_is_constant_on_cosets(g):
    rng = np.random.default_rng(len(g.codes) * 7 + sum(g.codes))
    for sub in (Q, QS):
        h = random_subgroup_element(sub, rng)
        assert canonicalize(mul(g, h), sub) == canonicalize(g, sub)
        c = canonicalize(g, sub)
        assert canonicalize(c.rep, sub) == c


def test_stallings_rep_is_shortlex_min():
    elems = [W(e) for e in subgroup_elements(STALL_GENS, 12)]
    for g in ball(4, 2):
        best = min((mul(g, q) for q in elems), key=lambda w: shortlex_key(str(w).replace("1", "")))
        assert canonicalize(g, QS).rep == best


# --- gates and projection distances ------------------------------------------


def test_gate_examples():
    assert gate("baa", Y0) == Word.identity()
    assert word_distance(W("baa"), gate("baa", Y0)) == 3
    assert gate("aab", Y0) == W("aa")
    assert gate("aaaa", Y0) == W("aaaa")


def test_proj_distance_examples():
    assert proj_distance("", "baaab", coset("b")) == 3
    assert gate("", coset("b")) == W("b") and gate("baaab", coset("b")) == W("baaa")
    assert proj_distance("abA", "abA", Y0) == 0
    assert proj_distance("", "aab", Y0) == 2


def test_gate_is_nearest_on_ball():
    ball5 = CayleyBall(5)
    for comp in ball5.axis_cosets():
        Z = coset(ball5.words[comp[0]])
        for x in range(0, len(ball5.words), 7):
            g = gate(W(ball5.words[x]), Z)
            assert Z == canonicalize(g, Q)
            assert word_distance(W(ball5.words[x]), g) == ball5.dist[x, comp].min()


def test_stallings_gate_is_nearest():
    elems = [W(e) for e in subgroup_elements(STALL_GENS, 14)]
    rng = np.random.default_rng(2)
    for _ in range(60):
        r = random_reduced_word(int(rng.integers(0, 4)), 2, rng)
        Z = canonicalize(r, QS)
        x = random_reduced_word(int(rng.integers(0, 5)), 2, rng)
        g = gate(x, Z)
        assert canonicalize(g, QS) == Z
        brute = min(word_distance(x, mul(Z.rep, q)) for q in elems)
        assert word_distance(x, g) == brute


@given(words, words, words)
def test_proj_distance_is_a_pseudometric(x, y, z):
    for Z in (Y0, coset("b"), canonicalize(W("ba"), QS)):
        assert proj_distance(x, y, Z) == proj_distance(y, x, Z)
        assert proj_distance(x, z, Z) <= proj_distance(x, y, Z) + proj_distance(y, z, Z)
        assert proj_distance(x, x, Z) == 0


@given(words, words, st.integers(0, 3))
def test_cyclic_projection_is_1_lipschitz(x, y, c):
    x2 = mul(x, Word((c,)))
    for Z in (Y0, coset("b"), coset("bA")):
        assert abs(proj_distance(x, y, Z) - proj_distance(x2, y, Z)) <= CYC.L * word_distance(x, x2)


def test_translate_examples():
    assert translate("b", Y0) == coset("b")
    assert translate("a", Y0) == Y0
    # a.b.b<a> is its own coset; rep abb is already shortlex-least
    assert translate("ab", coset("b")).rep == W("abb")


def test_equivariance_random():
    rng = np.random.default_rng(4)
    for sub in (Q, QS):
        for _ in range(10_000 if sub is Q else 2000):
            g, x, y, r = (random_reduced_word(int(rng.integers(0, 9)), 2, rng) for _ in range(4))
            Z = canonicalize(r, sub)
            assert proj_distance(mul(g, x), mul(g, y), translate(g, Z)) == proj_distance(x, y, Z)


# --- transversality ----------------------------------------------------------


def test_transverse_examples():
    assert transverse(Y0, coset("b"), CYC)
    assert not transverse(Y0, coset("a"), CYC)
    with pytest.raises(ValueError):
        transverse(Y0, canonicalize(W("b"), QS), CYC)


def test_transverse_equivariant_and_symmetric():
    S = ProjectionSystem.stallings(QS, 3, 4, 2)
    rng = np.random.default_rng(9)
    for system in (CYC, S):
        sub = system.subgroup
        for _ in range(1000):
            g, y, z = (random_reduced_word(int(rng.integers(0, 6)), 2, rng) for _ in range(3))
            Y, Z = canonicalize(y, sub), canonicalize(z, sub)
            t = transverse(Y, Z, system)
            assert t == transverse(Z, Y, system)
            assert t == transverse(translate(g, Y), translate(g, Z), system)


def test_projection_diameter():
    assert projection_diameter(coset("b"), Y0) == 0
    assert projection_diameter(Y0, Y0) == float("inf")
    assert projection_diameter(coset("aab"), Y0) == 0
    S = ProjectionSystem.stallings(QS, 3, 4, 2)
    for g in ball(3, 2):
        Y = canonicalize(g, QS)
        both = max(projection_diameter(Y, S.base), projection_diameter(S.base, Y))
        assert transverse(Y, S.base, S) == (both <= S.tau)


def test_max_over_cosets_is_longest_run():
    # brute force over every coset through a vertex of the geodesic
    for n in range(0, 7):
        for w in (x for x in ball(n, 2) if len(x) == n):
            cands = {canonicalize(Word(w.codes[:j]), Q) for j in range(n + 1)}
            best = max(proj_distance(Word.identity(), w, Z) for Z in cands)
            assert best == longest_axis_run(str(w))


def test_behrstock_implication_on_ball():
    B = CYC.B
    b4 = ball(4, 2)
    for g in b4:
        gZ = canonicalize(g, Q)
        if not transverse(Y0, gZ, CYC):
            continue
        for h in b4:
            if proj_distance(g, h, Y0) >= B:
                assert proj_distance(Word.identity(), h, gZ) < B


def test_batch_helpers_match_scalar():
    rng = np.random.default_rng(6)
    xs = [random_reduced_word(int(rng.integers(0, 12)), 2, rng) for _ in range(200)]
    X, lens = pack(xs)
    y = W("bAAb")
    for Z in (Y0, coset("bb"), canonicalize(W("aB"), QS)):
        G, gl = batch_gates(X, lens, Z)
        D = batch_proj_distance(X, lens, y, Z)
        for i, x in enumerate(xs):
            assert Word.from_array(G[i, : gl[i]]) == gate(x, Z)
            assert D[i] == proj_distance(x, y, Z)


def test_coset_serialization():
    Z = coset("bA")
    assert Z.to_json() == [Q.id, "b"]
    assert str(Y0) == "Q"
    assert CYC.to_json()["flavor"] == "cyclic"


def test_stallings_tau_calibrated():
    S = ProjectionSystem.stallings(QS, 3, 4, 2)
    assert S.tau == 4
    assert not transverse(S.base, S.base, S)
