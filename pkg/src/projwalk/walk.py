"""Seeded random walks with incremental reduction and sup tracking.

Randomness is counter-based: trial ``t`` of master seed ``s`` draws its
``i``-th step from a Philox stream keyed by ``(s, t)`` at counter position
``i``.  Nothing is shared between trials, so any partition of trials over
workers replays bit-exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels as K
from .projection import Coset, ProjectionSystem, canonical_rep_array, canonicalize, proj_distance
from .words import StepMeasure, Word, mul

MASK64 = (1 << 64) - 1


def stream(seed: int, trial: int) -> np.random.Generator:
    key = np.array([seed & MASK64, trial & MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def increments(measure: StepMeasure, n: int, seed: int, trial: int) -> np.ndarray:
    """Support indices of the first n steps of a trial."""
    u = stream(seed, trial).random(n)
    out = np.empty(n, dtype=np.int64)
    K.walk_increments(u, measure.cdf, out)
    return out


def map_trials(fn: Callable[[int], object], trials: int, workers: int = 1) -> list:
    """fn over trial indices; results come back in trial order for any worker count."""
    if workers <= 1 or trials <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials), chunksize=max(1, trials // (8 * workers))))


@dataclass
class WalkTrace:
    """One trial's walk: its increments plus sparse reduced prefixes."""

    seed: int
    trial: int
    measure: StepMeasure
    n: int
    increments: np.ndarray
    checkpoints: dict[int, Word] = field(default_factory=dict)

    @property
    def final(self) -> Word:
        return self.prefix(self.n)

    def prefix(self, i: int, allow_replay: bool = True) -> Word:
        if not 0 <= i <= self.n:
            raise IndexError(f"step {i} outside [0, {self.n}]")
        if i in self.checkpoints:
            return self.checkpoints[i]
        if not allow_replay:
            raise KeyError(f"no checkpoint at step {i} and replay not permitted")
        j = max(c for c in self.checkpoints if c <= i) if self.checkpoints else 0
        start = self.checkpoints.get(j, Word.identity())
        return mul(start, _product(self.measure, self.increments[j:i]))

    def segment(self, i: int, j: int) -> Word:
        """w_i^-1 w_j straight from the increments."""
        return _product(self.measure, self.increments[i:j])

    def export_jsonl(self, system: ProjectionSystem | None = None) -> str:
        lines = []
        for step in sorted(self.checkpoints):
            w = self.checkpoints[step]
            rec = {"step": step, "prefix": str(w)}
            if system is not None:
                rec["sup"] = track_sup(w, system).value
            lines.append(json.dumps(rec))
        return "\n".join(lines) + ("\n" if lines else "")


def _product(measure: StepMeasure, idx: np.ndarray) -> Word:
    steps, slens = measure.step_table()
    stack = np.empty(len(idx) * steps.shape[1] + 1, dtype=np.int8)
    top = K.apply_steps(np.ascontiguousarray(idx, dtype=np.int64), steps, slens, stack, 0)
    return Word.from_array(stack[:top])


def default_checkpoints(n: int) -> list[int]:
    step = max(1, math.ceil(n / 64))
    return sorted(set(range(0, n + 1, step)) | {n})


def run_walk(measure: StepMeasure, n: int, seed: int, trial: int = 0,
             checkpoint_steps: Iterable[int] | None = None) -> WalkTrace:
    if n < 1:
        raise ValueError("n must be >= 1")
    idx = increments(measure, n, seed, trial)
    steps = sorted(set(default_checkpoints(n) if checkpoint_steps is None else checkpoint_steps) | {0, n})
    if steps[0] < 0 or steps[-1] > n:
        raise ValueError("checkpoint outside [0, n]")
    table, slens = measure.step_table()
    stack = np.empty(n * table.shape[1] + 1, dtype=np.int8)
    top = 0
    prev = 0
    cps: dict[int, Word] = {}
    for c in steps:
        top = K.apply_steps(idx[prev:c], table, slens, stack, top)
        cps[c] = Word.from_array(stack[:top])
        prev = c
    return WalkTrace(seed, trial, measure, n, idx, cps)


def final_word_array(measure: StepMeasure, n: int, seed: int, trial: int) -> np.ndarray:
    idx = increments(measure, n, seed, trial)
    table, slens = measure.step_table()
    stack = np.empty(n * table.shape[1] + 1, dtype=np.int8)
    top = K.apply_steps(idx, table, slens, stack, 0)
    return stack[:top].copy()


@dataclass
class SupTracker:
    """sup over cosets Z of d_Z(1, w), its maximizing coset, and the separating cosets.

    ``chains`` rows are (j0, v0, j1, v1, d): the geodesic [1, w] runs through
    the hull of one coset between prefix positions j0 and j1.
    """

    value: int
    arg_coset: Coset | None
    word: Word
    system: ProjectionSystem
    chains: np.ndarray

    def separated(self) -> dict[Coset, int]:
        """Cosets with d_Z(1, w) > 0 keyed by canonical coset."""
        Q = self.system.subgroup
        out = {}
        for j0, v0, _j1, _v1, d in self.chains:
            if d > 0:
                Z = canonicalize(mul(Word(self.word.codes[:j0]), Q.path_word(int(v0))), Q)
                out[Z] = int(d)
        return out


def track_sup(trace: WalkTrace | Word, system: ProjectionSystem) -> SupTracker:
    w = trace.final if isinstance(trace, WalkTrace) else trace
    delta, paths, plens = system.subgroup.tables
    arr = w.array()
    chains = K.coset_chains(arr, len(w), delta, paths, plens)
    best, arg = 0, None
    for j0, v0, _j1, _v1, d in chains:
        if d > best:
            best = int(d)
            arg = (int(j0), int(v0))
    Z = None
    if arg is not None:
        Z = canonicalize(mul(Word(w.codes[: arg[0]]), system.subgroup.path_word(arg[1])), system.subgroup)
    return SupTracker(best, Z, w, system, chains)


def sup_value(arr: np.ndarray, n: int, system: ProjectionSystem) -> tuple[int, int, int]:
    """(sup, j0, v0) for a raw code array; streaming run scan for the cyclic flavor."""
    axis = system.subgroup.cyclic_axis
    if axis is not None:
        best, start = K.axis_run_sup(arr, n, axis)
        return int(best), int(start), 0
    delta, paths, plens = system.subgroup.tables
    best, j0, v0 = K.chain_sup(arr, n, delta, paths, plens)
    return int(best), int(j0), int(v0)


def batch_sup(X: np.ndarray, lens: np.ndarray, system: ProjectionSystem) -> np.ndarray:
    """sup over cosets of d_Z(1, w) for every row of a padded word array."""
    delta, paths, plens = system.subgroup.tables
    out = np.zeros(X.shape[0], dtype=np.int64)
    K.batch_chain_sup(np.ascontiguousarray(X, dtype=np.int8), lens, delta, paths, plens, out)
    return out


def window_projection(trace: WalkTrace, i: int, j: int, Z: Coset, allow_replay: bool = True) -> int:
    """d_Z(1, w_i^-1 w_j)."""
    if not 0 <= i <= j <= trace.n:
        raise IndexError("need 0 <= i <= j <= n")
    if i == j:
        return 0
    wi = trace.prefix(i, allow_replay)
    wj = trace.prefix(j, allow_replay)
    return proj_distance(Word.identity(), mul(wi.inverse(), wj), Z)


# --------------------------------------------------------------------------
# checkpointed sups for the scaling experiment


@dataclass
class CheckpointSups:
    sups: np.ndarray          # (len(steps),)
    arg_reps: list[str]       # coset rep per checkpoint ("" when sup = 0)


REP_INLINE_LIMIT = 64


def rep_label(rep: np.ndarray) -> str:
    """Coset rep as a string; long reps are abbreviated to length + digest."""
    if len(rep) <= REP_INLINE_LIMIT:
        return str(Word.from_array(rep))
    digest = hashlib.sha256(rep.tobytes()).hexdigest()[:16]
    return f"#{len(rep)}:{digest}"


def checkpoint_sups(measure: StepMeasure, system: ProjectionSystem, steps: Sequence[int],
                    seed: int, trial: int) -> CheckpointSups:
    steps = np.asarray(sorted(steps), dtype=np.int64)
    nmax = int(steps[-1])
    idx = increments(measure, nmax, seed, trial)
    table, slens = measure.step_table()
    width = nmax * table.shape[1] + 1
    snaps = np.zeros((len(steps), width), dtype=np.int8)
    snaplens = np.zeros(len(steps), dtype=np.int64)
    sups = np.zeros(len(steps), dtype=np.int64)
    starts = np.zeros(len(steps), dtype=np.int64)
    axis = system.subgroup.cyclic_axis
    K.walk_sup_checkpoints(idx, table, slens, -1 if axis is None else axis, steps,
                           snaps, snaplens, sups, starts)
    Q = system.subgroup
    delta, paths, plens = Q.tables
    labels = []
    for c in range(len(steps)):
        arr = snaps[c]
        n = int(snaplens[c])
        v0 = 0
        if axis is None:
            best, j0, v0 = K.chain_sup(arr, n, delta, paths, plens)
            sups[c], starts[c] = best, j0
        if sups[c] == 0:
            labels.append("")
            continue
        j0 = int(starts[c])
        head = np.concatenate([arr[:j0], paths[v0, : plens[v0]]]).astype(np.int8)
        labels.append(rep_label(canonical_rep_array(head, len(head), Q)))
    return CheckpointSups(sups.copy(), labels)
