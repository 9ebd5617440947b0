"""Projection systems on F_k built from cosets of a subgroup.

Two flavors share one implementation:

* ``cyclic``: Q = <a> (a single loop); cosets are the a-lines of the Cayley
  tree and transversality is just "distinct".
* ``stallings``: Q is any finitely generated infinite-index subgroup given by
  its folded core graph; transversality means both mutual projections have
  diameter at most ``tau``.

``C(Z)`` carries the restriction of the tree metric to the coset, which for a
line is exactly its induced-subgraph metric.  ``pi_Z(x)`` is the closest coset
element to ``x``: the gate of ``x`` on the coset's convex hull, followed by a
fixed shortest path in the core graph when the gate is not itself a coset
element.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import _kernels as K
from .subgroup import SubgroupGraph
from .words import Word, as_word, mul, word_distance

Flavor = Literal["cyclic", "stallings"]


@dataclass(frozen=True)
class Coset:
    """Left coset rep*Q; ``rep`` is always the shortlex-least element."""

    subgroup: SubgroupGraph
    rep: Word

    def __str__(self) -> str:
        return f"{self.rep}Q" if len(self.rep) else "Q"

    def to_json(self) -> list:
        return [self.subgroup.id, str(self.rep)]


def _strip(g: Word, Q: SubgroupGraph) -> tuple[Word, int]:
    """g = u*s with s^-1 readable from the basepoint, s maximal; returns (u, end vertex)."""
    m, v = Q.read(g.inverse())
    return Word(g.codes[: len(g) - m]), v


def canonicalize(g: Word | str, Q: SubgroupGraph) -> Coset:
    """Canonical coset of g*Q.

    The nearest coset elements to 1 are u*p for every shortest graph path p
    from the stripped vertex back to the basepoint; u*p is reduced, so the
    shortlex minimum is u followed by the greedy path.
    """
    g = as_word(g)
    u, v = _strip(g, Q)
    return Coset(Q, Word(u.codes + Q.path_word(v).codes))


def canonical_rep_array(word: np.ndarray, n: int, Q: SubgroupGraph) -> np.ndarray:
    """canonicalize on a raw code array (used for long walk prefixes)."""
    j, v = K.strip_suffix(word, n, Q.delta)
    paths, plens = Q.path_table
    return np.concatenate([word[:j], paths[v, : plens[v]]]).astype(np.int8)


def _nearest(y: Word, Q: SubgroupGraph) -> Word:
    """Closest element of Q to y."""
    m, v = Q.read(y)
    return mul(Word(y.codes[:m]), Q.path_word(v))


def gate(x: Word | str, Z: Coset) -> Word:
    """Closest element of Z to x."""
    x = as_word(x)
    r = Z.rep
    return mul(r, _nearest(mul(r.inverse(), x), Z.subgroup))


def proj_distance(x: Word | str, y: Word | str, Z: Coset) -> int:
    """d_Z(x, y) = distance in C(Z) between the gates of x and y."""
    rinv = Z.rep.inverse()
    a = _nearest(mul(rinv, as_word(x)), Z.subgroup)
    b = _nearest(mul(rinv, as_word(y)), Z.subgroup)
    return word_distance(a, b)


def translate(g: Word | str, Z: Coset) -> Coset:
    return canonicalize(mul(as_word(g), Z.rep), Z.subgroup)


def projection_diameter(Y: Coset, Z: Coset, depth_limit: int | None = None) -> float:
    """Diameter of the projection of hull(Y) to Z, or inf when unbounded.

    Works in Z-coordinates (Z = Q, Y = gQ).  The hulls are the subtrees of
    words readable from the basepoint (resp. g times those).  Their
    intersection is explored breadth-first with a pair of graph states; a
    non-backtracking path longer than |V|^2 repeats a state pair, which makes
    the intersection infinite.  An empty intersection projects to one point.
    """
    Q = Z.subgroup
    g = mul(Z.rep.inverse(), Y.rep)
    m, va = Q.read(g)
    tail = Word(g.codes[m:])
    mb, vb = Q.read(tail.inverse())
    if mb != len(tail):
        return 0.0
    p0 = Word(g.codes[:m])
    nv = Q.num_vertices
    limit = depth_limit if depth_limit is not None else nv * nv
    delta = Q.delta
    points = [mul(p0, Q.path_word(va))]
    queue = deque([(p0, va, vb, -1, 0)])
    while queue:
        w, a, b, last, depth = queue.popleft()
        for c in range(2 * Q.rank):
            if last >= 0 and c == last ^ 1:
                continue
            na, nb = delta[a, c], delta[b, c]
            if na < 0 or nb < 0:
                continue
            if depth + 1 >= limit:
                return float("inf")
            nw = mul(w, Word((c,)))
            points.append(mul(nw, Q.path_word(int(na))))
            queue.append((nw, int(na), int(nb), c, depth + 1))
    return float(max(word_distance(p, q) for p in points for q in points))


@dataclass(frozen=True)
class ProjectionSystem:
    """(S, Y0, {pi_Z}, transversality) with declared constants L, B, s."""

    subgroup: SubgroupGraph
    L: int = 1
    B: int = 1
    s: int = 2
    flavor: Flavor = "cyclic"
    tau: float | None = None
    _memo: dict = field(default_factory=dict, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.flavor not in ("cyclic", "stallings"):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.flavor == "cyclic" and self.subgroup.cyclic_axis is None:
            raise ValueError("cyclic flavor needs a single-loop subgroup graph")
        if min(self.L, self.B, self.s) < 0:
            raise ValueError("constants must be nonnegative")

    @classmethod
    def cyclic(cls, axis: int = 0, rank: int = 2, L: int = 1, B: int = 1, s: int = 2) -> "ProjectionSystem":
        return cls(SubgroupGraph.cyclic(axis, rank), L, B, s, "cyclic")

    @classmethod
    def stallings(cls, subgroup: SubgroupGraph, L: int, B: int, s: int, tau: float | None = None,
                  calibration_radius: int = 3) -> "ProjectionSystem":
        system = cls(subgroup, L, B, s, "stallings", tau)
        if tau is None:
            tau = calibrate_tau(system, calibration_radius)
            system = cls(subgroup, L, B, s, "stallings", tau)
        return system

    @property
    def rank(self) -> int:
        return self.subgroup.rank

    @property
    def base(self) -> Coset:
        return Coset(self.subgroup, Word.identity())

    @property
    def K(self) -> int:
        """Threshold K = 5B + 3L used by the distance-formula lower bound."""
        return 5 * self.B + 3 * self.L

    def coset(self, g: Word | str) -> Coset:
        return canonicalize(g, self.subgroup)

    def transverse(self, Y: Coset, Z: Coset) -> bool:
        return transverse(Y, Z, self)

    def to_json(self) -> dict:
        return {
            "flavor": self.flavor,
            "subgroup": self.subgroup.to_json(),
            "L": self.L,
            "B": self.B,
            "s": self.s,
            "tau": self.tau,
        }


def transverse(Y: Coset, Z: Coset, system: ProjectionSystem) -> bool:
    if Y.subgroup != Z.subgroup or Y.subgroup != system.subgroup:
        raise ValueError("transverse: cosets of different subgroups (flavor mismatch)")
    if Y == Z:
        return False
    if system.flavor == "cyclic":
        return True
    # equivariance: only the relative position Z^-1 Y matters
    rel = canonicalize(mul(Z.rep.inverse(), Y.rep), system.subgroup)
    hit = system._memo.get(("tr", rel.rep))
    if hit is None:
        base = system.base
        tau = np.inf if system.tau is None else system.tau
        d1 = projection_diameter(rel, base)
        d2 = projection_diameter(base, rel)
        hit = bool(d1 <= tau and d2 <= tau)
        system._memo[("tr", rel.rep)] = hit
    return hit


def calibrate_tau(system: ProjectionSystem, radius: int) -> float:
    """Largest finite mutual projection diameter between Y0 and cosets meeting the ball, plus 1."""
    from .words import ball

    Q = system.subgroup
    base = system.base
    worst = 0.0
    seen = set()
    for g in ball(radius, Q.rank):
        Y = canonicalize(g, Q)
        if Y in seen or Y == base:
            continue
        seen.add(Y)
        d = max(projection_diameter(Y, base), projection_diameter(base, Y))
        if np.isfinite(d):
            worst = max(worst, d)
    return worst + 1.0


# --------------------------------------------------------------------------
# batch helpers over padded word arrays


def pack(words: list[Word]) -> tuple[np.ndarray, np.ndarray]:
    width = max(1, max((len(w) for w in words), default=0))
    arr = np.zeros((len(words), width), dtype=np.int8)
    lens = np.zeros(len(words), dtype=np.int64)
    for i, w in enumerate(words):
        arr[i, : len(w)] = w.codes
        lens[i] = len(w)
    return arr, lens


def batch_gates(X: np.ndarray, xlens: np.ndarray, Z: Coset) -> tuple[np.ndarray, np.ndarray]:
    delta, paths, plens = Z.subgroup.tables
    rep = Z.rep.array()
    width = X.shape[1] + len(rep) + paths.shape[1] + 1
    out = np.zeros((X.shape[0], width), dtype=np.int8)
    outlens = np.zeros(X.shape[0], dtype=np.int64)
    K.batch_gate(rep, len(rep), X, xlens, delta, paths, plens, out, outlens)
    return out, outlens


def batch_proj_distance(X: np.ndarray, xlens: np.ndarray, y: Word, Z: Coset) -> np.ndarray:
    delta, paths, plens = Z.subgroup.tables
    rep = Z.rep.array()
    out = np.zeros(X.shape[0], dtype=np.int64)
    K.batch_proj_dist(rep, len(rep), X, xlens, y.array(), len(y), delta, paths, plens, out)
    return out
