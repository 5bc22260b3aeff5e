"""Descriptive statistics and hypothesis tests over the corpus and metrics.

Covers seat/director proportions by country, sector and industry, multiple-
directorship rates, age distributions with moment-matched Gaussian fits and
a chi-square normality check, Welch's unequal-variance t-test, the 2x2
two-proportion chi-square test, and log-transformed centrality comparisons
restricted to the largest component. All tests report two-sided p-values.
"""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import Corpus, FEMALE, MALE, MISSING
from .graph import GENDER_CODE
from .special import chi2_sf, normal_cdf, student_t_two_sided_p

GLOBAL_SCOPE = "global"
UNKNOWN_KEY = "unknown"

# Ingest keeps implausible ages; analysis drops them (default threshold 10
# generalizes dropping placeholder ages like 1).
DEFAULT_MIN_AGE = 10


@dataclass
class TestResult:
    statistic: float
    dof: float
    p_value: float
    test_name: str


@dataclass
class ProportionRow:
    key_type: str
    key: str
    n_seats: int
    female_seats: int
    seat_proportion: float
    n_directors: int
    female_directors: int
    director_proportion: float


@dataclass
class AgeSample:
    gender: str
    values: np.ndarray
    mean: float
    sd: float


def _modal_key(values: list) -> Optional[str]:
    """Most common non-missing value, ties to the lexicographically
    smallest (the same rule used to infer a director's country)."""
    counts = Counter(v for v in values if v is not None)
    if not counts:
        return None
    top = max(counts.values())
    return min(k for k, c in counts.items() if c == top)


def proportions_by(corpus: Corpus, key: str, gendered_only: bool = False) -> list:
    """Female seat and director proportions grouped by company country,
    sector or industry. Missing keys group under "unknown"; rows sort by
    seat proportion descending. Directors are attributed to the modal key
    among their companies."""
    if key not in ("country", "sector", "industry"):
        raise ValueError(f"key must be country, sector or industry, not {key!r}")
    by_id = {d.director_id: d for d in corpus.directors}
    seats = defaultdict(lambda: [0, 0])      # key -> [seats, female seats]
    dirs = defaultdict(lambda: [0, 0])       # key -> [directors, female directors]
    company_key = {c.company_id: (getattr(c, key) or UNKNOWN_KEY)
                   for c in corpus.companies}

    for c in corpus.companies:
        k = company_key[c.company_id]
        for did in c.board:
            g = by_id[did].gender
            if gendered_only and g == MISSING:
                continue
            seats[k][0] += 1
            if g == FEMALE:
                seats[k][1] += 1

    for d in corpus.directors:
        if gendered_only and d.gender == MISSING:
            continue
        k = _modal_key([company_key[cid] for cid in d.seats]) or UNKNOWN_KEY
        dirs[k][0] += 1
        if d.gender == FEMALE:
            dirs[k][1] += 1

    rows = []
    for k in set(seats) | set(dirs):
        n_s, f_s = seats.get(k, [0, 0])
        n_d, f_d = dirs.get(k, [0, 0])
        rows.append(ProportionRow(
            key_type=key, key=k,
            n_seats=n_s, female_seats=f_s,
            seat_proportion=f_s / n_s if n_s else 0.0,
            n_directors=n_d, female_directors=f_d,
            director_proportion=f_d / n_d if n_d else 0.0,
        ))
    rows.sort(key=lambda r: (-r.seat_proportion, r.key))
    return rows


def sector_industry_proportions(corpus: Corpus, gendered_only: bool = False) -> list:
    """Female seat proportion per (sector, industry) pair plus one aggregate
    row per sector (industry=""), each sector's industries following it in
    descending order. Returns (sector, industry, n_seats, proportion)."""
    by_id = {d.director_id: d for d in corpus.directors}
    seats = defaultdict(lambda: [0, 0])
    for c in corpus.companies:
        sector = c.sector or UNKNOWN_KEY
        industry = c.industry or UNKNOWN_KEY
        for did in c.board:
            g = by_id[did].gender
            if gendered_only and g == MISSING:
                continue
            for key in ((sector, ""), (sector, industry)):
                seats[key][0] += 1
                if g == FEMALE:
                    seats[key][1] += 1

    def prop(key):
        n, f = seats[key]
        return f / n if n else 0.0

    rows = []
    sectors = sorted({s for s, i in seats if i == ""},
                     key=lambda s: (-prop((s, "")), s))
    for sector in sectors:
        inds = sorted({i for s, i in seats if s == sector and i != ""},
                      key=lambda i: (-prop((sector, i)), i))
        for industry in [""] + inds:
            n, f = seats[(sector, industry)]
            rows.append((sector, industry, n, f / n if n else 0.0))
    return rows


def seat_vs_director_gap(corpus: Corpus, scope: str = GLOBAL_SCOPE,
                         gendered_only: bool = False) -> float:
    """|female seat share - female director share| within a scope (a country
    by inferred membership, or global)."""
    by_id = {d.director_id: d for d in corpus.directors}
    n_seats = f_seats = 0
    for c in corpus.companies:
        if scope != GLOBAL_SCOPE and c.country != scope:
            continue
        for did in c.board:
            g = by_id[did].gender
            if gendered_only and g == MISSING:
                continue
            n_seats += 1
            if g == FEMALE:
                f_seats += 1
    n_dir = f_dir = 0
    for d in corpus.directors:
        if scope != GLOBAL_SCOPE and d.inferred_country != scope:
            continue
        if gendered_only and d.gender == MISSING:
            continue
        n_dir += 1
        if d.gender == FEMALE:
            f_dir += 1
    if n_seats == 0 or n_dir == 0:
        raise ValueError(f"no seats or directors in scope {scope!r}")
    return abs(f_seats / n_seats - f_dir / n_dir)


MULTI_THRESHOLDS = (1, 2, 3, 5)


def multi_directorship_rates(corpus: Corpus) -> dict:
    """Fraction of directors holding more than 1/2/3/5 seats, overall and by
    gender: {stratum: {threshold: rate}}."""
    counts = {"all": [], MALE: [], FEMALE: []}
    for d in corpus.directors:
        k = len(d.seats)
        counts["all"].append(k)
        if d.gender in (MALE, FEMALE):
            counts[d.gender].append(k)
    out = {}
    for stratum, vals in counts.items():
        arr = np.asarray(vals, dtype=np.int64)
        out[stratum] = {
            t: float((arr > t).mean()) if arr.size else 0.0
            for t in MULTI_THRESHOLDS
        }
    return out


# ── hypothesis tests ────────────────────────────────────────────────────

def welch_t_test(a, b) -> TestResult:
    """Welch's unequal-variance two-sample t-test, two-sided."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ValueError("each sample needs at least two values")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0.0 or vb == 0.0:
        raise ValueError("degenerate sample (zero variance)")
    sa = va / a.size
    sb = vb / b.size
    se = math.sqrt(sa + sb)
    t = (a.mean() - b.mean()) / se
    dof = (sa + sb) ** 2 / (sa ** 2 / (a.size - 1) + sb ** 2 / (b.size - 1))
    return TestResult(statistic=float(t), dof=float(dof),
                      p_value=student_t_two_sided_p(float(t), float(dof)),
                      test_name="welch_t")


def chi2_two_proportion(success_a: int, n_a: int, success_b: int, n_b: int) -> TestResult:
    """Pearson chi-square on the 2x2 table (successes vs failures in two
    groups), 1 dof, no continuity correction."""
    for label, v in (("success_a", success_a), ("n_a", n_a),
                     ("success_b", success_b), ("n_b", n_b)):
        if v < 0:
            raise ValueError(f"{label} must be nonnegative")
    if n_a < 1 or n_b < 1:
        raise ValueError("group sizes must be >= 1")
    if success_a > n_a or success_b > n_b:
        raise ValueError("successes exceed group size")
    a, b = success_a, n_a - success_a
    c, d = success_b, n_b - success_b
    n = n_a + n_b
    row1, row2 = a + c, b + d
    if row1 == 0 or row2 == 0:
        raise ValueError("a contingency table margin is zero")
    stat = n * (a * d - b * c) ** 2 / (n_a * n_b * row1 * row2)
    return TestResult(statistic=float(stat), dof=1.0,
                      p_value=chi2_sf(float(stat), 1.0),
                      test_name="chi2_two_proportion")


def chi2_normality(sample, bins: Optional[int] = None) -> TestResult:
    """Pearson goodness-of-fit of a sample against the moment-matched
    Gaussian. Default binning is unit-width at integers; adjacent bins merge
    until every expected count is >= 5. dof = merged bins - 3 (two fitted
    parameters plus one)."""
    x = np.asarray(sample, dtype=np.float64)
    if x.size < 30:
        raise ValueError("normality test needs at least 30 observations")
    mu = float(x.mean())
    sd = float(x.std(ddof=1))
    if sd == 0.0:
        raise ValueError("sample has zero variance")

    if bins is None:
        lo = math.floor(x.min())
        hi = math.ceil(x.max())
        edges = np.arange(lo - 0.5, hi + 1.5, 1.0)
    else:
        if bins < 4:
            raise ValueError("need at least 4 initial bins")
        edges = np.linspace(x.min(), x.max(), bins + 1)
    observed, _ = np.histogram(x, bins=edges)

    # Expected counts from the fitted Gaussian; the open tails fold into the
    # end bins so totals match.
    cdf = np.array([normal_cdf((e - mu) / sd) for e in edges])
    cdf[0] = 0.0
    cdf[-1] = 1.0
    expected = np.diff(cdf) * x.size

    obs_m, exp_m = _merge_bins(observed, expected, min_expected=5.0)
    if len(obs_m) < 4:
        raise ValueError("fewer than 3 degrees of freedom after merging bins")
    stat = float(sum((o - e) ** 2 / e for o, e in zip(obs_m, exp_m)))
    dof = float(len(obs_m) - 3)
    return TestResult(statistic=stat, dof=dof, p_value=chi2_sf(stat, dof),
                      test_name="chi2_normality")


def _merge_bins(observed, expected, min_expected: float):
    """Merge adjacent bins left to right until each expected count reaches
    the floor; a trailing short bin merges backwards."""
    obs, exp = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs.append(o_acc)
            exp.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0.0 and obs:
        obs[-1] += o_acc
        exp[-1] += e_acc
    return obs, exp


# ── age analysis ────────────────────────────────────────────────────────

@dataclass
class AgeAnalysis:
    samples: dict                 # gender -> AgeSample
    fits: dict                    # gender -> {"mu":, "sigma":}
    normality: dict               # gender -> TestResult or None (n < 30)
    histogram: dict               # plot-ready unit-age counts and fits


def age_analysis(corpus: Corpus, min_age: int = DEFAULT_MIN_AGE) -> AgeAnalysis:
    """Per-gender age distributions after the plausibility filter
    (ages < min_age are dropped), with moment-matched Gaussian fits, the
    chi-square normality check, and fig-ready histogram data."""
    raw = {MALE: [], FEMALE: []}
    for d in corpus.directors:
        if d.gender in raw and d.age is not None and d.age >= min_age:
            raw[d.gender].append(d.age)

    samples = {}
    fits = {}
    normality = {}
    for gender, vals in raw.items():
        if len(vals) < 2:
            raise ValueError(f"fewer than 2 usable ages for stratum {gender}")
        arr = np.asarray(vals, dtype=np.float64)
        samples[gender] = AgeSample(gender=gender, values=arr,
                                    mean=float(arr.mean()),
                                    sd=float(arr.std(ddof=1)))
        fits[gender] = {"mu": samples[gender].mean, "sigma": samples[gender].sd}
        normality[gender] = chi2_normality(arr) if arr.size >= 30 else None

    lo = int(min(s.values.min() for s in samples.values()))
    hi = int(max(s.values.max() for s in samples.values()))
    ages = list(range(lo, hi + 1))
    hist = {"age": ages}
    for gender, label in ((MALE, "male"), (FEMALE, "female")):
        arr = samples[gender].values
        counts, _ = np.histogram(arr, bins=np.arange(lo - 0.5, hi + 1.5, 1.0))
        hist[f"count_{label}"] = counts.tolist()
        mu, sd = fits[gender]["mu"], fits[gender]["sigma"]
        if sd > 0:
            fitted = [arr.size * (normal_cdf((a + 0.5 - mu) / sd)
                                  - normal_cdf((a - 0.5 - mu) / sd))
                      for a in ages]
        else:
            fitted = [float(arr.size) if a == int(mu) else 0.0 for a in ages]
        hist[f"fitted_{label}"] = fitted
    return AgeAnalysis(samples=samples, fits=fits, normality=normality,
                       histogram=hist)


# ── centrality comparisons ──────────────────────────────────────────────

def log_centrality_tests(degrees, betweenness, genders, in_largest) -> dict:
    """Welch tests of male vs female log degree and log betweenness,
    restricted to the largest component and strictly positive values."""
    degrees = np.asarray(degrees, dtype=np.float64)
    betweenness = np.asarray(betweenness, dtype=np.float64)
    genders = np.asarray(genders)
    in_largest = np.asarray(in_largest, dtype=bool)
    out = {}
    for name, values in (("degree", degrees), ("betweenness", betweenness)):
        usable = in_largest & (values > 0)
        male = np.log(values[usable & (genders == GENDER_CODE[MALE])])
        female = np.log(values[usable & (genders == GENDER_CODE[FEMALE])])
        if male.size < 2 or female.size < 2:
            raise ValueError(f"empty or degenerate stratum for log {name} test")
        out[name] = welch_t_test(male, female)
    return out
