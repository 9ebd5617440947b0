"""Interval decomposition along a geodesic and the linear bound on large projections."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as K
from .projection import Coset, ProjectionSystem, canonical_rep_array
from .walk import rep_label
from .words import Word, as_word


@dataclass
class Interval:
    coset: str
    i: int
    t: int
    d: int                  # d_Z(1, h)
    d_interval: int         # d_Z(h_i, h_t)
    j0: int
    j1: int


@dataclass
class DistanceFormulaReport:
    length: int
    K: int
    C: int
    intervals: list[Interval]
    overlap_histogram: dict[int, int]
    max_overlap: int
    total: int              # sum of d_Z(1, h) over Z with d_Z(1, h) >= K
    bound: int              # C |h|
    large_cosets: int
    interval_violations: list[str] = field(default_factory=list)
    claim_violations: list[str] = field(default_factory=list)
    overlap_ok: bool = True
    sum_ok: bool = True
    cyclic_sum_ok: bool | None = None

    @property
    def ok(self) -> bool:
        return (not self.interval_violations and not self.claim_violations and self.overlap_ok
                and self.sum_ok and self.cyclic_sum_ok is not False)

    def to_json(self) -> dict:
        d = asdict(self)
        d["overlap_histogram"] = {str(k): v for k, v in self.overlap_histogram.items()}
        d["ok"] = self.ok
        return d


def _check_K(system: ProjectionSystem, K_: int):
    if K_ < system.K:
        raise ValueError(f"K must be at least 5B + 3L = {system.K}")


def large_chains(arr: np.ndarray, system: ProjectionSystem, K_: int) -> np.ndarray:
    delta, paths, plens = system.subgroup.tables
    rows = K.coset_chains(arr, len(arr), delta, paths, plens)
    return rows[rows[:, 4] >= K_]


def interval_decomposition(h: Word | str | np.ndarray, system: ProjectionSystem, K_: int | None = None,
                           check_claim: bool = True) -> DistanceFormulaReport:
    """Intervals I_Z = [i_Z, t_Z] for every coset with d_Z(1, h) >= K.

    i_Z is the last prefix index k with d_Z(h_0, h_k) <= 2B + L and t_Z the
    first index after it with d_Z(h_k, h_N) <= 2B + L.  Only chains of the
    geodesic can carry such cosets: a coset whose hull meets [1, h] in at
    most a point has d_Z(1, h) = 0.
    """
    K_ = system.K if K_ is None else int(K_)
    _check_K(system, K_)
    arr = h if isinstance(h, np.ndarray) else as_word(h).array()
    arr = np.ascontiguousarray(arr, dtype=np.int8)
    N = len(arr)
    Q = system.subgroup
    delta, paths, plens = Q.tables
    cut = 2 * system.B + system.L
    C = 5 * system.s * system.L
    intervals, cosets, bad_iv = [], [], []
    for j0, v0, j1, v1, d in large_chains(arr, system, K_):
        states, fwd, bwd = K.chain_profile(arr, j0, v0, j1, delta, paths, plens)
        qi = int(np.flatnonzero(fwd <= cut).max())
        later = np.flatnonzero(bwd[qi + 1:] <= cut)
        qt = qi + 1 + int(later[0])
        head = np.concatenate([arr[:j0], paths[v0, : plens[v0]]]).astype(np.int8)
        rep = canonical_rep_array(head, len(head), Q)
        label = rep_label(rep)
        scratch = np.empty(N + 2 * paths.shape[1] + 2, dtype=np.int8)
        d_iv = int(K._chain_value(arr, j0 + qi, states[qi], j0 + qt, states[qt], paths, plens, scratch))
        iv = Interval(label, int(j0 + qi), int(j0 + qt), int(d), d_iv, int(j0), int(j1))
        if d_iv < system.B + system.L:
            bad_iv.append(f"{label}: d_Z(h_i, h_t) = {d_iv} < B + L")
        intervals.append(iv)
        cosets.append(Coset(Q, Word.from_array(rep)))

    claim = []
    if check_claim:
        for a in range(len(intervals)):
            for b in range(a + 1, len(intervals)):
                A, B = intervals[a], intervals[b]
                if A.t < B.i or B.t < A.i:
                    continue
                if system.transverse(cosets[a], cosets[b]):
                    claim.append(f"{A.coset} [{A.i},{A.t}] meets {B.coset} [{B.i},{B.t}]")

    cover = np.zeros(N + 2, dtype=np.int64)
    for iv in intervals:
        cover[iv.i] += 1
        cover[iv.t + 1] -= 1
    depth = np.cumsum(cover)[: N + 1]
    values, counts = np.unique(depth, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(values, counts)}
    max_overlap = int(depth.max()) if N >= 0 else 0
    total = int(sum(iv.d for iv in intervals))
    cyclic_ok = (total <= N) if system.flavor == "cyclic" else None
    return DistanceFormulaReport(
        length=N, K=K_, C=C, intervals=intervals, overlap_histogram=hist, max_overlap=max_overlap,
        total=total, bound=C * N, large_cosets=len(intervals), interval_violations=bad_iv,
        claim_violations=claim, overlap_ok=max_overlap <= system.s, sum_ok=total <= C * N,
        cyclic_sum_ok=cyclic_ok,
    )


def large_coset_count(h: Word | str | np.ndarray, system: ProjectionSystem, K_: int | None = None) -> int:
    """|{Z : d_Z(1, h) >= K}|, checked against C |h|."""
    K_ = system.K if K_ is None else int(K_)
    _check_K(system, K_)
    arr = h if isinstance(h, np.ndarray) else as_word(h).array()
    count = len(large_chains(np.ascontiguousarray(arr, dtype=np.int8), system, K_))
    C = 5 * system.s * system.L
    if count > C * len(arr):
        raise AssertionError(f"{count} large cosets exceeds C|h| = {C * len(arr)}")
    return count
