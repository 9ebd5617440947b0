"""Complex coefficient of a curve and the resulting length estimate for mapping tori.

Only the real length is estimated; the rotational part is not modeled.
Coefficient profiles are synthetic: the annular coefficient grows like
c log n while the complementary coefficients stay below K2.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

D1_DEFAULT = math.e
K2_DEFAULT = 5.0
K3_DEFAULT = 5.0
M_THRESHOLD_DEFAULT = 10.0


def truncate(x: float, K: float) -> float:
    """{{x}}_K: x when x >= K, else 0."""
    return x if x >= K else 0.0


@dataclass(frozen=True)
class CoefficientProfile:
    d_alpha: float
    complements: tuple[float, ...] = ()
    K3: float = K3_DEFAULT
    K2: float = K2_DEFAULT

    def __post_init__(self):
        if self.d_alpha < 0 or any(c < 0 for c in self.complements):
            raise ValueError("coefficients must be nonnegative")
        if self.K3 < self.K2:
            raise ValueError(f"K3 = {self.K3} must be at least K2 = {self.K2}")

    @property
    def S_alpha(self) -> float:
        return 1.0 + sum(truncate(c, self.K3) for c in self.complements)


def omega(profile: CoefficientProfile) -> complex:
    return complex(profile.d_alpha, profile.S_alpha)


@dataclass(frozen=True)
class LengthEstimate:
    point: float
    lower: float
    upper: float
    regime_valid: bool
    D1: float
    M_threshold: float


def length_from(d_alpha: float, S_alpha: float, D1: float = D1_DEFAULT,
                M_threshold: float = M_THRESHOLD_DEFAULT) -> LengthEstimate:
    if D1 < 1:
        raise ValueError("D1 must be >= 1")
    if S_alpha < 1:
        raise ValueError("S_alpha is at least 1")
    point = 2 * math.pi * S_alpha / (d_alpha * d_alpha + S_alpha * S_alpha)
    return LengthEstimate(point, point / D1, point * D1, abs(complex(d_alpha, S_alpha)) >= M_threshold,
                          D1, M_threshold)


def length_estimate(profile: CoefficientProfile, D1: float = D1_DEFAULT,
                    M_threshold: float = M_THRESHOLD_DEFAULT) -> LengthEstimate:
    return length_from(profile.d_alpha, profile.S_alpha, D1, M_threshold)


@dataclass
class LogGrowthProfiles:
    """d_alpha = c log n + noise; complements uniform in [0, K2]."""

    c: float = 1.0
    noise: float = 0.0
    complements: int = 0
    K2: float = K2_DEFAULT
    K3: float = K3_DEFAULT

    def __post_init__(self):
        if self.K2 > self.K3:
            raise ValueError(f"generator complements bounded by K2 = {self.K2} exceed K3 = {self.K3}")
        if self.c <= 0:
            raise ValueError("growth rate c must be positive")

    def sample(self, n: int, rng: np.random.Generator) -> CoefficientProfile:
        d = self.c * math.log(n)
        if self.noise > 0:
            d = max(0.0, d + self.noise * rng.standard_normal())
        comps = tuple(float(x) for x in rng.uniform(0.0, self.K2, size=self.complements))
        return CoefficientProfile(d, comps, self.K3, self.K2)


@dataclass
class SystoleReport:
    n_list: list[int]
    trials: int
    seed: int
    c: float
    D1: float
    K2: float
    K3: float
    delta: float
    M_threshold: float
    rows: list[dict]
    concentration_band: tuple[float, float]
    concentrated: bool
    systole_C: float
    min_ell_times_log2n: dict[int, float]
    min_band_ok: bool
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["min_ell_times_log2n"] = {str(k): v for k, v in self.min_ell_times_log2n.items()}
        return d

    def to_csv(self) -> str:
        cols = ["n", "trial", "d_alpha", "S_alpha", "ell_lower", "ell_point", "ell_upper", "ell_times_log2n"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.rows:
            w.writerow([r["n"], r["trial"]] + [repr(float(r[c])) for c in cols[2:]])
        return buf.getvalue()


def rivin_scaling(n_list: Sequence[int], generator: LogGrowthProfiles, D1: float = D1_DEFAULT,
                  trials: int = 1, seed: int = 0, delta: float = 0.05,
                  M_threshold: float = M_THRESHOLD_DEFAULT) -> SystoleReport:
    """Length estimates along n_list and the 1/log^2 n band they should follow."""
    if generator.K2 > generator.K3:
        raise ValueError("generator violates K2 <= K3")
    rows = []
    c = generator.c
    lo = 2 * math.pi / (c * c * D1 * (1 + delta))
    hi = 2 * math.pi * D1 * (1 + delta) / (c * c)
    concentrated = True
    mins: dict[int, float] = {}
    for n in n_list:
        n = int(n)
        rng = np.random.Generator(np.random.Philox(key=np.array([seed, n], dtype=np.uint64)))
        best = math.inf
        for t in range(trials):
            prof = generator.sample(n, rng)
            est = length_estimate(prof, D1, M_threshold)
            l2 = math.log(n) ** 2
            rows.append({"n": n, "trial": t, "d_alpha": prof.d_alpha, "S_alpha": prof.S_alpha,
                         "ell_lower": est.lower, "ell_point": est.point, "ell_upper": est.upper,
                         "ell_times_log2n": est.point * l2})
            best = min(best, est.point * l2)
            if n >= 1000 and not lo <= est.point * l2 <= hi:
                concentrated = False
        mins[n] = best
    # band [1/C, C] for l * log^2 n: the D1 band, widened by the largest S_alpha the generator allows
    S_max = 1.0 + generator.complements * (generator.K2 if generator.K2 >= generator.K3 else 0.0)
    C = max(1.0 / lo, hi * S_max)
    band_ok = all(1.0 / C <= v <= C for n, v in mins.items() if n >= 1000)
    return SystoleReport([int(n) for n in n_list], trials, seed, c, D1, generator.K2, generator.K3, delta,
                         M_threshold, rows, (lo, hi), concentrated, C, mins, band_ok)
