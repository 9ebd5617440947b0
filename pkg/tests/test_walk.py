import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import all_reduced_code_arrays, first_passage_drift, longest_axis_run, longest_run_codes
from projwalk.projection import ProjectionSystem, canonicalize, pack, proj_distance
from projwalk.subgroup import SubgroupGraph
from projwalk.walk import (
    batch_sup, checkpoint_sups, default_checkpoints, final_word_array, increments, map_trials, rep_label,
    run_walk, sup_value, track_sup, window_projection,
)
from projwalk.words import StepMeasure, Word, ball, mul, random_reduced_word

W = Word.parse
CYC = ProjectionSystem.cyclic()
STALL = ProjectionSystem.stallings(SubgroupGraph.from_generators(["ab", "baB"]), 3, 4, 2)
UNIFORM = StepMeasure.uniform()


def test_point_mass_walk():
    tr = run_walk(StepMeasure.point_mass("a"), 5, seed=1)
    assert tr.final == W("aaaaa")


def test_replay_determinism():
    t1 = run_walk(UNIFORM, 100_000, seed=7, trial=3)
    t2 = run_walk(UNIFORM, 100_000, seed=7, trial=3)
    assert np.array_equal(t1.increments, t2.increments)
    assert t1.final == t2.final
    assert run_walk(UNIFORM, 1000, seed=7, trial=4).final != run_walk(UNIFORM, 1000, seed=7, trial=3).final


def test_streams_are_prefix_stable():
    # the first m steps of a longer walk are the m-step walk
    assert np.array_equal(increments(UNIFORM, 500, 3, 9), increments(UNIFORM, 2000, 3, 9)[:500])


def test_worker_count_does_not_change_results():
    fn = lambda t: str(Word.from_array(final_word_array(UNIFORM, 300, 11, t)))
    assert map_trials(fn, 40, 1) == map_trials(fn, 40, 4) == map_trials(fn, 40, 16)


def test_drift_matches_distance_chain():
    n, trials = 100_000, 1000
    ratios = np.array([len(final_word_array(UNIFORM, n, 2, t)) / n for t in range(trials)])
    inside = np.mean((ratios >= 0.45) & (ratios <= 0.55))
    assert inside >= 0.99
    ref = first_passage_drift(n, trials, 2)
    assert np.mean((ref >= 0.45) & (ref <= 0.55)) >= 0.99
    # two-sample agreement of the means
    se = np.sqrt(ratios.var() / trials + ref.var() / trials)
    assert abs(ratios.mean() - ref.mean()) <= 4 * se


def test_checkpoint_spacing_and_consistency():
    n = 1000
    tr = run_walk(UNIFORM, n, seed=5)
    assert sorted(tr.checkpoints) == default_checkpoints(n)
    assert default_checkpoints(n)[1] == 16
    rng = np.random.default_rng(0)
    for _ in range(200):
        i, j = sorted(rng.integers(0, n + 1, size=2))
        assert mul(tr.prefix(int(i)), tr.segment(int(i), int(j))) == tr.prefix(int(j))


def test_prefix_without_replay():
    tr = run_walk(UNIFORM, 100, seed=5, checkpoint_steps=[0, 50, 100])
    assert tr.prefix(50, allow_replay=False) == tr.prefix(50)
    with pytest.raises(KeyError):
        tr.prefix(51, allow_replay=False)
    with pytest.raises(KeyError):
        window_projection(tr, 10, 50, CYC.base, allow_replay=False)
    with pytest.raises(ValueError):
        run_walk(UNIFORM, 0, seed=1)


# --- sup tracking ------------------------------------------------------------


def test_track_sup_examples():
    s = track_sup(W("aabAAAba"), CYC)
    assert s.value == 3
    assert s.arg_coset == canonicalize(W("aab"), CYC.subgroup)
    assert track_sup(Word.identity(), CYC).value == 0
    assert track_sup(Word.identity(), CYC).arg_coset is None
    assert track_sup(W("baaab"), CYC).value == 3


def test_separated_cosets_are_exact():
    w = W("aabAAAbaBBa")
    sep = track_sup(w, CYC).separated()
    for Z, d in sep.items():
        assert proj_distance(Word.identity(), w, Z) == d
    # every coset through the geodesic with positive separation is listed
    for j in range(len(w) + 1):
        Z = canonicalize(Word(w.codes[:j]), CYC.subgroup)
        d = proj_distance(Word.identity(), w, Z)
        assert (d > 0) == (Z in sep)


@pytest.mark.parametrize("length", range(0, 9))
def test_streaming_sup_equals_chain_sup_exhaustive(length):
    X = all_reduced_code_arrays(length)
    lens = np.full(X.shape[0], length, dtype=np.int64)
    chain = batch_sup(X, lens, CYC)
    stream_ = np.array([sup_value(np.ascontiguousarray(x), length, CYC)[0] for x in X])
    assert np.array_equal(chain, stream_)
    assert np.array_equal(chain, longest_run_codes(X, lens))


def test_streaming_sup_on_random_traces():
    for t in range(300):
        arr = final_word_array(UNIFORM, 1000, 21, t)
        oracle = longest_axis_run(str(Word.from_array(arr)))
        assert sup_value(arr, len(arr), CYC)[0] == oracle
        cs = checkpoint_sups(UNIFORM, CYC, [1000], 21, t)
        assert cs.sups[0] == oracle


def test_stallings_sup_matches_brute_force():
    Q = STALL.subgroup
    for w in ball(5, 2):
        best = 0
        for j in range(len(w) + 1):
            pre = Word(w.codes[:j])
            for v in range(Q.num_vertices):
                Z = canonicalize(mul(pre, Q.path_word(v)), Q)
                best = max(best, proj_distance(Word.identity(), w, Z))
        assert track_sup(w, STALL).value == best
        assert sup_value(w.array(), len(w), STALL)[0] == best


def test_checkpoint_sups_agree_with_track_sup():
    steps = [10, 100, 400]
    for system in (CYC, STALL):
        for t in range(20):
            cs = checkpoint_sups(UNIFORM, system, steps, 4, t)
            tr = run_walk(UNIFORM, 400, 4, t, checkpoint_steps=steps)
            for c, n in enumerate(steps):
                s = track_sup(tr.prefix(n), system)
                assert cs.sups[c] == s.value
                if s.value and not cs.arg_reps[c].startswith("#"):
                    # the label names a coset attaining the sup
                    Z = canonicalize(W(cs.arg_reps[c]), system.subgroup)
                    assert proj_distance(Word.identity(), tr.prefix(n), Z) == s.value
                elif not s.value:
                    assert cs.arg_reps[c] == ""


def test_rep_label_digest():
    short = W("abAB").array()
    assert rep_label(short) == "abAB"
    long = random_reduced_word(100, 2, np.random.default_rng(0)).array()
    lab = rep_label(long)
    assert lab.startswith("#100:") and len(lab) == len("#100:") + 16


# --- windows -----------------------------------------------------------------


def test_window_projection_examples():
    tr = run_walk(StepMeasure.point_mass("a"), 5, seed=0)
    assert window_projection(tr, 1, 4, CYC.base) == 3
    assert window_projection(tr, 2, 2, CYC.base) == 0
    with pytest.raises(IndexError):
        window_projection(tr, 4, 1, CYC.base)


def test_window_projection_recomputation():
    tr = run_walk(UNIFORM, 2000, seed=8)
    rng = np.random.default_rng(1)
    Zs = [canonicalize(W(s), CYC.subgroup) for s in ["", "b", "Ba", "bb"]]
    # from scratch: no checkpoints beyond the endpoints, so prefixes are rebuilt from raw increments
    fresh = run_walk(UNIFORM, 2000, seed=8, checkpoint_steps=[])
    for k in range(1000):
        i, j = sorted(int(x) for x in rng.integers(0, 2001, size=2))
        Z = Zs[int(rng.integers(len(Zs)))]
        direct = proj_distance(Word.identity(), tr.segment(i, j), Z)
        assert window_projection(tr, i, j, Z) == direct
        if k < 100:
            assert window_projection(fresh, i, j, Z) == direct


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(0, 50))
def test_segment_equals_prefix_quotient(seed, trial):
    tr = run_walk(UNIFORM, 200, seed, trial)
    assert tr.segment(37, 160) == mul(tr.prefix(37).inverse(), tr.prefix(160))


def test_export_jsonl():
    tr = run_walk(UNIFORM, 128, seed=3)
    lines = tr.export_jsonl(CYC).splitlines()
    assert len(lines) == len(tr.checkpoints)
    recs = [json.loads(x) for x in lines]
    assert recs[0] == {"step": 0, "prefix": "1", "sup": 0}
    last = recs[-1]
    assert last["step"] == 128 and last["prefix"] == str(tr.final)
    assert last["sup"] == longest_axis_run(last["prefix"])


def test_batch_sup_on_packed_words():
    rng = np.random.default_rng(12)
    ws = [random_reduced_word(int(rng.integers(0, 40)), 2, rng) for _ in range(500)]
    X, lens = pack(ws)
    got = batch_sup(X, lens, CYC)
    assert list(got) == [longest_axis_run(str(w)) for w in ws]
