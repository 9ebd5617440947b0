"""Brute-force certification of projection-system constants on a finite ball,
and the witness checks that make a step measure admissible."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import networkx as nx
import numpy as np
from statsmodels.stats.proportion import proportion_confint

from . import _kernels as K
from .projection import ProjectionSystem, batch_proj_distance, canonicalize, pack, proj_distance
from .walk import final_word_array, map_trials
from .words import StepMeasure, Word, as_word, ball, mul

MAX_VIOLATIONS = 20


@dataclass
class Violation:
    axiom: str
    g: str
    h: str
    Z: str
    value: float

    def __str__(self) -> str:
        return f"{self.axiom}: g={self.g} h={self.h} Z={self.Z} value={self.value:g}"


@dataclass
class AxiomCertificate:
    radius: int
    flavor: str
    declared: dict
    L_emp: int
    B_emp: int
    s_emp: int
    tau: float | None
    ball_size: int
    cosets_checked: int
    transverse_pairs_checked: int
    passed: bool
    violations: list[Violation] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["violations"] = [asdict(v) for v in self.violations]
        return d


def _ball_tables(radius: int, rank: int):
    words = ball(radius, rank)
    X, lens = pack(words)
    return words, X, lens


def _nearest_all(X, lens, system: ProjectionSystem):
    delta, paths, plens = system.subgroup.tables
    out = np.zeros((X.shape[0], X.shape[1] + paths.shape[1] + 1), dtype=np.int8)
    outlens = np.zeros(X.shape[0], dtype=np.int64)
    K.batch_nearest(X, lens, delta, paths, plens, out, outlens)
    return out, outlens


def verify_axioms(system: ProjectionSystem, radius: int) -> AxiomCertificate:
    """Exhaustive check of the Lipschitz, Behrstock and anti-chain constants on the ball.

    L_emp is the largest projection jump across an edge of the ball, B_emp is
    one more than the largest min{d_Y0(g, h), d_gY0(1, h)} over transverse
    pairs, and s_emp is one more than the largest family of pairwise
    non-transverse cosets meeting the ball.
    """
    if radius < 4:
        raise ValueError("ball radius must be >= 4")
    words, X, lens = _ball_tables(radius, system.rank)
    base = system.base
    Q = system.subgroup
    violations: list[Violation] = []

    # (i) Lipschitz, edge by edge (geodesics in the tree are edge paths)
    G, glens = _nearest_all(X, lens, system)
    index = {w.codes: i for i, w in enumerate(words)}
    L_emp = 0
    for i, w in enumerate(words[1:], start=1):
        p = index[w.codes[:-1]]
        d = K.dist(G[i], glens[i], G[p], glens[p])
        L_emp = max(L_emp, int(d))
        if d > system.L and len(violations) < MAX_VIOLATIONS:
            violations.append(Violation("lipschitz", str(words[p]), str(w), str(base), d))

    # (ii) Behrstock over every g in the ball with Y0 transverse to gY0
    B_emp = 0
    pairs = 0
    ident = Word.identity()
    for gi, g in enumerate(words):
        Z = canonicalize(g, Q)
        if not system.transverse(base, Z):
            continue
        pairs += 1
        a = K.batch_dist_to(G, glens, gi)                       # d_Y0(g, h)
        b = batch_proj_distance(X, lens, ident, Z)              # d_gY0(1, h)
        m = np.minimum(a, b)
        top = int(m.max())
        B_emp = max(B_emp, top + 1)
        if top >= system.B:
            for hi in np.flatnonzero(m >= system.B)[: MAX_VIOLATIONS - len(violations)]:
                violations.append(Violation("behrstock", str(g), str(words[hi]), str(Z), float(m[hi])))

    # (iii) largest pairwise non-transverse family among cosets meeting the ball
    cosets = sorted({canonicalize(w, Q) for w in words}, key=lambda c: c.rep.shortlex_key())
    if system.flavor == "cyclic":
        clique = 1
    else:
        graph = nx.Graph()
        graph.add_nodes_from(range(len(cosets)))
        for i in range(len(cosets)):
            for j in range(i + 1, len(cosets)):
                if not system.transverse(cosets[i], cosets[j]):
                    graph.add_edge(i, j)
        members, clique = nx.max_weight_clique(graph, weight=None)
        if clique + 1 > system.s and len(violations) < MAX_VIOLATIONS:
            violations.append(Violation("antichain", "", "", ",".join(str(cosets[i]) for i in members),
                                        float(clique)))
    s_emp = clique + 1

    passed = L_emp <= system.L and B_emp <= system.B and s_emp <= system.s
    return AxiomCertificate(
        radius=radius,
        flavor=system.flavor,
        declared={"L": system.L, "B": system.B, "s": system.s},
        L_emp=L_emp,
        B_emp=B_emp,
        s_emp=s_emp,
        tau=system.tau,
        ball_size=len(words),
        cosets_checked=len(cosets),
        transverse_pairs_checked=pairs,
        passed=passed,
        violations=violations,
    )


# --------------------------------------------------------------------------
# admissibility witnesses


@dataclass
class WitnessItem:
    name: str
    passed: bool
    detail: dict
    counterexample: str | None = None


@dataclass
class WitnessReport:
    radius: int
    measure: dict
    items: list[WitnessItem]
    reflected_items: list[WitnessItem] | None

    @property
    def passed(self) -> bool:
        items = self.items + (self.reflected_items or [])
        return all(it.passed for it in items)

    def failed(self) -> list[str]:
        items = self.items + (self.reflected_items or [])
        return [it.name for it in items if not it.passed]

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "measure": self.measure,
            "passed": self.passed,
            "items": [asdict(it) for it in self.items],
            "reflected_items": None if self.reflected_items is None else [asdict(it) for it in self.reflected_items],
        }


def _item_transverse_witnesses(system, h1, h2, words) -> WitnessItem:
    Q = system.subgroup
    Y1 = canonicalize(h1, Q)
    Y2 = canonicalize(h2, Q)
    seen = set()
    for w in words:
        Z = canonicalize(w, Q)
        if Z in seen:
            continue
        seen.add(Z)
        if not (system.transverse(Y1, Z) or system.transverse(Y2, Z)):
            return WitnessItem("transverse_witnesses", False, {"cosets": len(seen)}, str(Z))
    return WitnessItem("transverse_witnesses", True, {"cosets": len(seen)})


def _item_twisting_witnesses(system, x1, x2, words) -> WitnessItem:
    X, lens = pack(words)
    delta, paths, plens = system.subgroup.tables
    A, al = pack([mul(x1, h) for h in words])
    Bm, bl = pack([mul(x2, h) for h in words])
    GA = np.zeros((len(words), A.shape[1] + paths.shape[1] + 1), dtype=np.int8)
    GB = np.zeros((len(words), Bm.shape[1] + paths.shape[1] + 1), dtype=np.int8)
    la = np.zeros(len(words), dtype=np.int64)
    lb = np.zeros(len(words), dtype=np.int64)
    K.batch_nearest(A, al, delta, paths, plens, GA, la)
    K.batch_nearest(Bm, bl, delta, paths, plens, GB, lb)
    need = 2 * system.B
    worst = None
    for i in range(len(words)):
        d = K.dist(GA[i], la[i], GB[i], lb[i])
        if worst is None or d < worst[0]:
            worst = (int(d), i)
    ok = worst[0] >= need
    return WitnessItem("twisting_witnesses", ok, {"min_distance": worst[0], "required": need},
                       None if ok else str(words[worst[1]]))


def _item_linear_progress(system, measure, x1, n) -> WitnessItem:
    Q = system.subgroup
    base = system.base
    if canonicalize(x1, Q) != base:
        return WitnessItem("linear_progress", False, {}, f"{x1} does not stabilize Y0")
    step = proj_distance(Word.identity(), x1, base)
    if step <= 0:
        return WitnessItem("linear_progress", False, {"displacement": 0}, str(x1))
    # d_Y0(1, x1^m) along the explicit path; C0 bounds n / displacement
    worst = min(proj_distance(Word.identity(), Word.power(x1, m), base) / m for m in range(1, n + 1))
    C0 = max(1.0, 1.0 / worst) if worst > 0 else float("inf")
    p = measure.prob(x1)
    return WitnessItem("linear_progress", bool(np.isfinite(C0)),
                       {"C0": C0, "path": f"({x1})^n", "path_log_prob_per_step": float(np.log(p)),
                        "prob_lower_bound_at_n": p ** n, "n": n})


def _item_exp_decay(system, measure, n, trials, seed, threshold, workers) -> WitnessItem:
    Q = system.subgroup
    base = system.base

    def one(t):
        arr = final_word_array(measure, n, seed, t)
        j, v = K.strip_suffix(arr, len(arr), Q.delta)
        if j == 0 and v == 0:
            return 1                                   # w_n in Q, same coset
        Z = canonicalize(Word.from_array(arr), Q)
        return 0 if system.transverse(base, Z) else 1

    hits = int(sum(map_trials(one, trials, workers)))
    lo, hi = proportion_confint(hits, trials, alpha=0.05, method="wilson")
    p = hits / trials
    return WitnessItem("rare_nontransverse", p <= threshold,
                       {"n": n, "trials": trials, "hits": hits, "p_hat": p, "ci_lo": float(lo),
                        "ci_hi": float(hi), "threshold": threshold})


def check_admissibility(measure: StepMeasure, system: ProjectionSystem, h1, h2, x1, x2,
                        radius: int, n: int = 100, trials: int = 10_000, seed: int = 0,
                        threshold: float = 0.01, workers: int = 1) -> WitnessReport:
    """Witness checks for the four admissibility items.

    The universal quantifiers (over all cosets, over all h) are checked on
    the ball of the given radius only; the report records that radius.
    """
    h1, h2, x1, x2 = (as_word(x) for x in (h1, h2, x1, x2))
    for name, w in (("h1", h1), ("h2", h2), ("x1", x1), ("x2", x2)):
        if measure.prob(w) <= 0:
            raise ValueError(f"witness {name}={w} is not in the support")
    words = ball(radius, system.rank)

    def items_for(mu: StepMeasure, a1, a2, b1, b2) -> list[WitnessItem]:
        return [
            _item_transverse_witnesses(system, a1, a2, words),
            _item_twisting_witnesses(system, b1, b2, words),
            _item_linear_progress(system, mu, b1, n),
            _item_exp_decay(system, mu, n, trials, seed, threshold, workers),
        ]

    items = items_for(measure, h1, h2, x1, x2)
    reflected = None
    if not measure.require_symmetric:
        # the reflected walk has the inverted witnesses in its support
        reflected = items_for(measure.reflected(), h1.inverse(), h2.inverse(), x1.inverse(), x2.inverse())
    return WitnessReport(radius, measure.to_json(), items, reflected)
