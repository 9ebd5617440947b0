"""Monte Carlo experiments: projection tails, log-window scaling of the largest
projection, and second-moment diagnostics for the twisting-word count."""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats
from statsmodels.stats.proportion import proportion_confint

from . import _kernels as K
from .projection import Coset, ProjectionSystem, proj_distance
from .walk import checkpoint_sups, final_word_array, increments, map_trials
from .words import StepMeasure, Word, mul

MIN_HITS = 20


def wilson(count: int, nobs: int, alpha: float = 0.05) -> tuple[float, float]:
    if nobs == 0:
        return float("nan"), float("nan")
    lo, hi = proportion_confint(count, nobs, alpha=alpha, method="wilson")
    return float(lo), float(hi)


def _chunks(trials: int, size: int) -> list[tuple[int, int]]:
    return [(lo, min(trials, lo + size)) for lo in range(0, trials, size)]


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x: float) -> str:
    return "nan" if x is None or not math.isfinite(x) else repr(float(x))


# --------------------------------------------------------------------------
# tails


def projection_samples(system: ProjectionSystem, measure: StepMeasure, Z: Coset, n: int,
                       trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """d_Z(1, w_n) for each trial."""
    delta, paths, plens = Z.subgroup.tables
    rep = Z.rep.array()
    empty = np.zeros(1, dtype=np.int8)

    def run(chunk):
        lo, hi = chunk
        out = np.empty(hi - lo, dtype=np.int64)
        for t in range(lo, hi):
            w = final_word_array(measure, n, seed, t)
            width = len(w) + len(rep) + paths.shape[1] + 2
            b1, b2, b3 = (np.empty(width, dtype=np.int8) for _ in range(3))
            out[t - lo] = K.coset_proj_dist(rep, len(rep), empty, 0, w, len(w), delta, paths, plens, b1, b2, b3)
        return out

    parts = map_trials(lambda i: run(chunks[i]), len(chunks := _chunks(trials, 256)), workers)
    return np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)


@dataclass
class TailFit:
    R: int
    bins: int
    slope: float
    intercept: float
    r2: float
    insufficient: bool


@dataclass
class TailReport:
    coset: str
    n: int
    trials: int
    seed: int
    R_grid: list[int]
    t_grid: list[int]
    rows: list[dict]
    fits: list[TailFit]
    M_hat: float
    degenerate: bool
    monotone: bool
    histogram: dict[int, int]
    flags: list[str] = field(default_factory=list)

    def fit_for(self, R: int) -> TailFit:
        return next(f for f in self.fits if f.R == R)

    def to_json(self) -> dict:
        d = asdict(self)
        d["histogram"] = {str(k): v for k, v in self.histogram.items()}
        return d

    def to_csv(self) -> str:
        cols = ["R", "t", "count_cond", "count_hit", "p_hat", "ci_lo", "ci_hi"]
        return _csv(cols, [[r["R"], r["t"], r["count_cond"], r["count_hit"], _fmt(r["p_hat"]),
                            _fmt(r["ci_lo"]), _fmt(r["ci_hi"])] for r in self.rows])


def _fit_tail(R: int, rows: list[dict]) -> TailFit:
    use = [r for r in rows if r["count_hit"] >= MIN_HITS]
    if len(use) < 3:
        return TailFit(R, len(use), float("nan"), float("nan"), float("nan"), True)
    t = np.array([r["t"] for r in use], dtype=float)
    y = np.log([r["p_hat"] for r in use])
    res = stats.linregress(t, y)
    return TailFit(R, len(use), float(res.slope), float(res.intercept), float(res.rvalue ** 2), False)


def tail_report(samples: np.ndarray, coset: str, n: int, seed: int, R_grid, t_grid) -> TailReport:
    trials = len(samples)
    if trials < 100:
        raise ValueError("tail experiment needs at least 100 trials")
    R_grid = [int(r) for r in R_grid]
    t_grid = [int(t) for t in t_grid]
    rows, fits, flags = [], [], []
    for R in R_grid:
        cond = int(np.count_nonzero(samples >= R))
        mine = []
        for t in t_grid:
            hit = int(np.count_nonzero(samples >= R + t))
            lo, hi = wilson(hit, cond)
            mine.append({"R": R, "t": t, "count_cond": cond, "count_hit": hit,
                         "p_hat": hit / cond if cond else float("nan"), "ci_lo": lo, "ci_hi": hi})
        rows.extend(mine)
        fit = _fit_tail(R, mine)
        fits.append(fit)
        if fit.insufficient:
            flags.append(f"insufficient conditioning events for R={R}")
    degenerate = bool(samples.min() == samples.max())
    if degenerate:
        flags.append("degenerate: every trial gives the same projection")
    monotone = all(
        rows[i]["count_hit"] >= rows[i + 1]["count_hit"]
        for i in range(len(rows) - 1)
        if rows[i]["R"] == rows[i + 1]["R"] and rows[i]["t"] <= rows[i + 1]["t"]
    )
    base = fits[R_grid.index(0)] if 0 in R_grid else fits[0]
    if base.insufficient or degenerate or base.slope >= 0:
        M_hat = float("nan")
    else:
        # smallest M with M exp(-t/M) above the fitted line for all t >= 0
        M_hat = max(1.0, -1.0 / base.slope, math.exp(base.intercept))
    values, counts = np.unique(samples, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(values, counts)}
    return TailReport(coset, n, trials, seed, R_grid, t_grid, rows, fits, M_hat, degenerate, monotone, hist, flags)


def tail_experiment(system: ProjectionSystem, measure: StepMeasure, Z: Coset, n: int, trials: int,
                    R_grid, t_grid, seed: int, workers: int = 1) -> TailReport:
    samples = projection_samples(system, measure, Z, n, trials, seed, workers)
    return tail_report(samples, str(Z), n, seed, R_grid, t_grid)


# --------------------------------------------------------------------------
# scaling window


@dataclass
class ScalingReport:
    n_list: list[int]
    trials: int
    C: float
    seed: int
    sups: dict[int, np.ndarray]
    arg_cosets: dict[int, list[str]]
    coverage: list[float]
    coverage_ci: list[tuple[float, float]]
    mean: list[float]
    mean_over_log3: list[float]
    slope: float
    slope_se: float
    intercept: float
    nondecreasing: bool
    degenerate: list[int]

    def to_json(self) -> dict:
        d = asdict(self)
        d["sups"] = {str(n): v.tolist() for n, v in self.sups.items()}
        d.pop("arg_cosets")
        return d

    def csv_for(self, n: int) -> str:
        return _csv(["n", "trial", "sup", "arg_coset", "seed"],
                    [[n, t, int(s), a, self.seed] for t, (s, a) in enumerate(zip(self.sups[n], self.arg_cosets[n]))])


def scaling_experiment(system: ProjectionSystem, measure: StepMeasure, n_list, trials: int, C: float = 4.0,
                       seed: int = 0, workers: int = 1) -> ScalingReport:
    """Largest projection along one walk per trial, read off at every n in n_list."""
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])) or not n_list or n_list[0] < 1:
        raise ValueError("n_list must be increasing positive integers")
    if C <= 1:
        raise ValueError("C must exceed 1")
    res = map_trials(lambda t: checkpoint_sups(measure, system, n_list, seed, t), trials, workers)
    sups = {n: np.array([r.sups[j] for r in res], dtype=np.int64) for j, n in enumerate(n_list)}
    args = {n: [r.arg_reps[j] for r in res] for j, n in enumerate(n_list)}
    coverage, ci, mean, m3, degenerate = [], [], [], [], []
    for n in n_list:
        s = sups[n]
        ln = math.log(n)
        if ln == 0:
            degenerate.append(n)
            coverage.append(float("nan"))
            ci.append((float("nan"), float("nan")))
        else:
            inside = int(np.count_nonzero((s >= ln / C) & (s <= C * ln)))
            coverage.append(inside / trials)
            ci.append(wilson(inside, trials))
        mean.append(float(s.mean()))
        m3.append(float(s.mean() / math.log(n, 3)) if n > 1 else float("nan"))
    fit_n = [(math.log(n), mu) for n, mu in zip(n_list, mean) if n > 1]
    if len(fit_n) >= 2:
        r = stats.linregress(*zip(*fit_n))
        slope, se, icpt = float(r.slope), float(r.stderr), float(r.intercept)
    else:
        slope = se = icpt = float("nan")
    usable = [i for i, n in enumerate(n_list) if n not in degenerate]
    nondec = all(ci[b][1] >= ci[a][0] for a, b in zip(usable, usable[1:]))
    return ScalingReport(n_list, trials, C, seed, sups, args, coverage, ci, mean, m3, slope, se, icpt,
                         nondec, degenerate)


# --------------------------------------------------------------------------
# second moment


def axis_word(system: ProjectionSystem) -> Word:
    """Shortest generator of Q (the axis letter for the cyclic flavor)."""
    gens = sorted(system.subgroup.generators(), key=Word.shortlex_key)
    return gens[0]


def walk_law(measure: StepMeasure, k: int) -> dict[Word, float]:
    """Exact distribution of w_k by convolution."""
    law = {Word.identity(): 1.0}
    for _ in range(k):
        nxt: dict[Word, float] = {}
        for w, p in law.items():
            for s, q in zip(measure.support, measure.probs):
                u = mul(w, s)
                nxt[u] = nxt.get(u, 0.0) + p * q
        law = nxt
    return law


def choose_xn(system: ProjectionSystem, measure: StepMeasure, n: float, eps1: float) -> tuple[Word, float]:
    """x_n = axis^k with k = floor(eps1 log n) and p_n = P(w_k = x_n) exactly."""
    c = measure.min_prob
    top = math.inf if c >= 1.0 else 1.0 / math.log(1.0 / c)
    if not 0 < eps1 < top:
        raise ValueError(f"eps1 must lie in (0, 1/log(1/c)) = (0, {top:.6g})")
    k = int(math.floor(eps1 * math.log(n) + 1e-12))
    if k < 1:
        raise ValueError("n too small: k = floor(eps1 log n) is 0")
    x = Word.power(axis_word(system), k)
    if system.coset(x) != system.base:
        raise AssertionError("x_n does not stabilize Y0")
    p = walk_law(measure, k).get(x, 0.0)
    if p < c ** k * (1 - 1e-12):
        raise AssertionError(f"p_n = {p} below c^k = {c ** k}")
    return x, p


def window_table(measure: StepMeasure, k: int, target: Word) -> np.ndarray:
    """Boolean table over base-m codes of k-tuples of support indices: product == target."""
    m = len(measure.support)
    if m ** k > 50_000_000:
        raise ValueError("window table too large; lower k or the support size")
    table = np.zeros(m ** k, dtype=np.bool_)
    for code, combo in enumerate(itertools.product(range(m), repeat=k)):
        w = Word.identity()
        for i in combo:
            w = mul(w, measure.support[i])
        table[code] = w == target
    return table


@dataclass
class SecondMomentReport:
    n: int
    trials: int
    seed: int
    k: int
    eps1: float
    eps2: float
    threshold: float
    x_n: str
    p_n: float
    gap: int
    ratio_y: float
    ratio_y_min: float
    ratio_y_max: float
    ratio_pair: float
    ratio_w_pair: float
    ratio_w_pair_ci: tuple[float, float]
    p_L: float
    p_R: float
    p_x_positive: float
    mean_x: float
    mean_x2: float
    bound: float
    bound_se: float
    method_ok: bool
    w_events: int
    undersampled: bool
    per_i_ratio_deciles: list[float]
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    def to_csv(self) -> str:
        keys = ["n", "trials", "k", "x_n", "p_n", "ratio_y", "ratio_pair", "ratio_w_pair", "p_x_positive",
                "bound", "bound_se", "undersampled"]
        d = self.to_json()
        return _csv(keys, [[_fmt(d[k]) if isinstance(d[k], float) else d[k] for k in keys]])


def _pair_total(m: int, gap: int) -> int:
    """Number of pairs 1 <= i < j <= m with j - i >= gap."""
    r = m - gap
    return r * (r + 1) // 2 if r > 0 else 0


def second_moment_experiment(system: ProjectionSystem, measure: StepMeasure, n: int, trials: int,
                             eps1: float, eps2: float | None = None, seed: int = 0, workers: int = 1,
                             bootstrap: int = 200) -> SecondMomentReport:
    x, p = choose_xn(system, measure, n, eps1)
    k = int(math.floor(eps1 * math.log(n) + 1e-12))
    disp = proj_distance(Word.identity(), x, system.base)
    if eps2 is None:
        eps2 = disp / math.log(n)
    if eps2 * math.log(n) > disp + 1e-9:
        raise ValueError("eps2 too large: d_Y0(1, x_n) < eps2 log n")
    if eps2 * math.log(n) < 3 - 1e-9:
        raise ValueError("need eps2 log n >= 3 (raise eps1 or n)")
    threshold = eps2 * math.log(n) / 3.0
    thresh = int(math.floor(threshold + 1e-9))
    gap = int(math.ceil(math.log(n)))
    table = window_table(measure, k, x)
    steps, slens = measure.step_table()
    delta, paths, plens = system.subgroup.tables
    m = n - k
    mpow = len(measure.support)

    def run(chunk):
        lo, hi = chunk
        yc = np.zeros(m, dtype=np.int64)
        wc = np.zeros(m, dtype=np.int64)
        lc = np.zeros(m, dtype=np.int64)
        rc = np.zeros(m, dtype=np.int64)
        xs = np.zeros(hi - lo, dtype=np.int64)
        yp_t = np.zeros(hi - lo, dtype=np.int64)
        wp_t = np.zeros(hi - lo, dtype=np.int64)
        for t in range(lo, hi):
            idx = increments(measure, n, seed, t)
            xv, yp, wp = K.second_moment_trial(idx, steps, slens, k, table, mpow, thresh, delta, paths, plens,
                                               gap, k, yc, wc, lc, rc)
            xs[t - lo] = xv
            yp_t[t - lo] = yp
            wp_t[t - lo] = wp
        return yc, wc, lc, rc, xs, yp_t, wp_t

    chunks = _chunks(trials, 64)
    parts = map_trials(lambda i: run(chunks[i]), len(chunks), workers)
    yc = sum(pt[0] for pt in parts)
    wc = sum(pt[1] for pt in parts)
    lc = sum(pt[2] for pt in parts)
    rc = sum(pt[3] for pt in parts)
    xs = np.concatenate([pt[4] for pt in parts])
    yp_t = np.concatenate([pt[5] for pt in parts])
    wp_t = np.concatenate([pt[6] for pt in parts])
    ypairs, wpairs = int(yp_t.sum()), int(wp_t.sum())

    w_events = int(wc.sum())
    flags = []
    y_events = int(yc.sum())
    undersampled = w_events == 0 or y_events < MIN_HITS or ypairs < MIN_HITS
    if w_events == 0:
        flags.append("undersampled: no twisting-word events observed; p_n too small for the trial budget")
    elif undersampled:
        flags.append(f"undersampled: {y_events} Y events and {ypairs} Y pairs, fewer than {MIN_HITS} "
                     "needed for the ratio statistics")
    per_i = yc / (trials * p)
    ratio_y = float(yc.sum() / (trials * m * p))
    npairs_y = _pair_total(m, gap)
    npairs_w = _pair_total(m, k)
    ratio_pair = float(ypairs / (trials * npairs_y * p * p)) if npairs_y else float("nan")
    ratio_w = float(wpairs / (trials * npairs_w * p * p)) if npairs_w else float("nan")
    w_ci = _pair_ratio_ci(wp_t, npairs_w, p)
    xf = xs.astype(np.float64)
    mean_x = float(xf.mean())
    mean_x2 = float((xf * xf).mean())
    bound = mean_x ** 2 / mean_x2 if mean_x2 > 0 else float("nan")
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0xB0075], dtype=np.uint64)))
    boots = []
    for _ in range(bootstrap):
        s = xf[rng.integers(0, trials, size=trials)]
        q = (s * s).mean()
        if q > 0:
            boots.append(s.mean() ** 2 / q)
    bound_se = float(np.std(boots, ddof=1)) if len(boots) > 1 else float("nan")
    p_pos = float(np.count_nonzero(xs > 0) / trials)
    method_ok = bool(undersampled or p_pos >= bound - 3 * bound_se)
    deciles = [float(v) for v in np.quantile(per_i, np.linspace(0, 1, 11))] if m > 0 else []
    return SecondMomentReport(
        n=n, trials=trials, seed=seed, k=k, eps1=eps1, eps2=eps2, threshold=threshold, x_n=str(x), p_n=p,
        gap=gap, ratio_y=ratio_y, ratio_y_min=float(per_i.min()), ratio_y_max=float(per_i.max()),
        ratio_pair=ratio_pair, ratio_w_pair=ratio_w, ratio_w_pair_ci=w_ci,
        p_L=float(lc.sum() / (trials * m)), p_R=float(rc.sum() / (trials * m)),
        p_x_positive=p_pos, mean_x=mean_x, mean_x2=mean_x2, bound=bound, bound_se=bound_se,
        method_ok=method_ok, w_events=w_events, undersampled=undersampled,
        per_i_ratio_deciles=deciles, flags=flags,
    )


def _pair_ratio_ci(per_trial: np.ndarray, npairs: int, p: float) -> tuple[float, float]:
    # trials are iid, so the CLT over per-trial pair counts gives the interval
    if npairs == 0 or len(per_trial) < 2:
        return float("nan"), float("nan")
    scale = npairs * p * p
    r = per_trial.mean() / scale
    se = per_trial.std(ddof=1) / math.sqrt(len(per_trial)) / scale
    return float(r - 1.96 * se), float(r + 1.96 * se)
