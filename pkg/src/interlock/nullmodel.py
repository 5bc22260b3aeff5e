"""Independent-seat null model for female board membership.

Under the model every seat is held by a woman independently with probability
p, so a board of size s contains at least one woman with probability
1 - (1-p)^s. Conditioning on that event shifts weight toward larger boards,
which is what the conditional-mean operation quantifies. Analytic values are
cross-checked by a seeded Monte Carlo harness whose results are independent
of worker count (one substream per scope).
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .corpus import Corpus, FEMALE, MISSING

GLOBAL_SCOPE = "global"


@dataclass(frozen=True)
class BoardSizeDistribution:
    """Board size s -> fraction of boards with s seats."""
    fractions: dict

    def __post_init__(self):
        if not self.fractions:
            raise ValueError("empty board size distribution")
        total = 0.0
        for s, f in self.fractions.items():
            if not (isinstance(s, (int, np.integer)) and s >= 1):
                raise ValueError(f"board size {s!r} must be a positive integer")
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"fraction {f!r} for size {s} outside [0, 1]")
            total += f
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"fractions sum to {total!r}, not 1")

    @classmethod
    def from_counts(cls, counts: dict) -> "BoardSizeDistribution":
        total = sum(counts.values())
        if total <= 0:
            raise ValueError("no boards to build a size distribution from")
        return cls({int(s): c / total for s, c in sorted(counts.items())})

    def arrays(self) -> tuple:
        sizes = np.array(sorted(self.fractions), dtype=np.int64)
        probs = np.array([self.fractions[int(s)] for s in sizes], dtype=np.float64)
        return sizes, probs

    @property
    def mean_size(self) -> float:
        return float(sum(s * f for s, f in self.fractions.items()))


@dataclass
class NullModelResult:
    scope: str
    p: float
    predicted_fraction_with_women: float
    observed_fraction_with_women: float
    mu_null: Optional[float]
    observed_conditional_mean: Optional[float]
    f_s: dict
    simulated_fraction: Optional[float] = None
    simulated_fraction_se: Optional[float] = None
    simulated_mu: Optional[float] = None
    simulated_mu_se: Optional[float] = None

    def to_dict(self) -> dict:
        out = {
            "scope": self.scope,
            "p": self.p,
            "predicted_fraction_with_women": self.predicted_fraction_with_women,
            "observed_fraction_with_women": self.observed_fraction_with_women,
            "mu_null": self.mu_null,
            "observed_conditional_mean": self.observed_conditional_mean,
            "f_s": {str(s): f for s, f in sorted(self.f_s.items())},
        }
        if self.simulated_fraction is not None:
            out.update({
                "simulated_fraction": self.simulated_fraction,
                "simulated_fraction_se": self.simulated_fraction_se,
                "simulated_mu": self.simulated_mu,
                "simulated_mu_se": self.simulated_mu_se,
            })
        return out


def prob_any_woman(p: float, size: int) -> float:
    """Probability a board of the given size seats at least one woman."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p!r} outside [0, 1]")
    if size < 1:
        raise ValueError(f"board size {size} must be >= 1")
    return 1.0 - (1.0 - p) ** size


def expected_fraction_with_women(dist: BoardSizeDistribution, p: float) -> float:
    """Expected fraction of boards with at least one woman."""
    return float(sum(f * prob_any_woman(p, s) for s, f in dist.fractions.items()))


def mean_size_given_woman(dist: BoardSizeDistribution, p: float) -> float:
    """Expected board size conditioned on the board containing at least one
    woman. Undefined at p=0 (the conditioning event has probability zero)."""
    if not 0.0 < p <= 1.0:
        raise ValueError(f"p={p!r} must lie in (0, 1]")
    num = 0.0
    den = 0.0
    for s, f in dist.fractions.items():
        w = f * prob_any_woman(p, s)
        num += s * w
        den += w
    return num / den


@dataclass
class BoardObservation:
    scope: str
    n_boards: int
    n_seats: int
    female_seats: int
    gendered_seats: int
    fraction_with_women: float
    mean_size: float
    mean_size_given_woman: Optional[float]
    mean_size_no_woman: Optional[float]
    dist: BoardSizeDistribution
    p: float


def observed_board_stats(corpus: Corpus, scope: str = GLOBAL_SCOPE,
                         gendered_only: bool = False) -> BoardObservation:
    """Empirical board statistics for one scope (a country or "global").
    Boards without any listed director are excluded. p is the female share
    of all seats; gendered_only=True restricts the denominator to seats with
    a known gender."""
    sizes = []
    with_women = []
    female_seats = 0
    gendered_seats = 0
    n_seats = 0
    by_id = {d.director_id: d for d in corpus.directors}
    for c in corpus.companies:
        if scope != GLOBAL_SCOPE and c.country != scope:
            continue
        if not c.board:
            continue
        s = len(c.board)
        sizes.append(s)
        n_seats += s
        women = 0
        for did in c.board:
            g = by_id[did].gender
            if g == FEMALE:
                women += 1
                female_seats += 1
                gendered_seats += 1
            elif g != MISSING:
                gendered_seats += 1
        with_women.append(women > 0)
    if not sizes:
        raise ValueError(f"no boards in scope {scope!r}")

    sizes_arr = np.array(sizes, dtype=np.float64)
    women_arr = np.array(with_women, dtype=bool)
    counts: dict = {}
    for s in sizes:
        counts[s] = counts.get(s, 0) + 1
    denominator = gendered_seats if gendered_only else n_seats
    p = female_seats / denominator if denominator else 0.0
    return BoardObservation(
        scope=scope,
        n_boards=len(sizes),
        n_seats=n_seats,
        female_seats=female_seats,
        gendered_seats=gendered_seats,
        fraction_with_women=float(women_arr.mean()),
        mean_size=float(sizes_arr.mean()),
        mean_size_given_woman=float(sizes_arr[women_arr].mean()) if women_arr.any() else None,
        mean_size_no_woman=float(sizes_arr[~women_arr].mean()) if (~women_arr).any() else None,
        dist=BoardSizeDistribution.from_counts(counts),
        p=p,
    )


@dataclass
class MonteCarloResult:
    fraction_with_women: float
    fraction_se: float
    mu: float
    mu_se: float
    trials: int


def monte_carlo_null(dist: BoardSizeDistribution, p: float, trials: int,
                     seed) -> MonteCarloResult:
    """Simulate boards under the independence model: draw a size from the
    distribution, then flip one p-biased coin per seat. Deterministic for a
    given seed; estimates converge to the analytic values."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p!r} outside [0, 1]")
    rng = np.random.default_rng(seed)
    sizes, probs = dist.arrays()
    drawn = rng.choice(sizes, size=trials, p=probs)
    women = rng.binomial(drawn, p)
    has_woman = women > 0
    frac = float(has_woman.mean())
    frac_se = float(np.sqrt(frac * (1.0 - frac) / trials))
    hit = drawn[has_woman].astype(np.float64)
    if hit.size:
        mu = float(hit.mean())
        mu_se = float(hit.std(ddof=1) / np.sqrt(hit.size)) if hit.size > 1 else float("nan")
    else:
        mu = float("nan")
        mu_se = float("nan")
    return MonteCarloResult(fraction_with_women=frac, fraction_se=frac_se,
                            mu=mu, mu_se=mu_se, trials=trials)


def _scope_seed(seed: int, scope: str):
    # Counter-based substream per scope: stable under changes to the set of
    # scopes and under any parallel schedule.
    return np.random.SeedSequence([seed, zlib.crc32(scope.encode("utf-8"))])


def _result_for_scope(obs: BoardObservation, trials: Optional[int],
                      seed: int) -> NullModelResult:
    mu = mean_size_given_woman(obs.dist, obs.p) if obs.p > 0 else None
    res = NullModelResult(
        scope=obs.scope,
        p=obs.p,
        predicted_fraction_with_women=expected_fraction_with_women(obs.dist, obs.p),
        observed_fraction_with_women=obs.fraction_with_women,
        mu_null=mu,
        observed_conditional_mean=obs.mean_size_given_woman,
        f_s=dict(obs.dist.fractions),
    )
    if trials:
        mc = monte_carlo_null(obs.dist, obs.p, trials, _scope_seed(seed, obs.scope))
        res.simulated_fraction = mc.fraction_with_women
        res.simulated_fraction_se = mc.fraction_se
        res.simulated_mu = None if np.isnan(mc.mu) else mc.mu
        res.simulated_mu_se = None if np.isnan(mc.mu_se) else mc.mu_se
    return res


def country_null_report(corpus: Corpus, by_country: bool = True,
                        trials: Optional[int] = None, seed: int = 0,
                        gendered_only: bool = False) -> list:
    """Per-country null-model comparisons (observed fraction descending)
    followed by one global row."""
    results = []
    if by_country:
        countries = sorted({c.country for c in corpus.companies
                            if c.country is not None and c.board})
        if not countries:
            raise ValueError("corpus has no company with country data")
        for country in countries:
            obs = observed_board_stats(corpus, country, gendered_only)
            results.append(_result_for_scope(obs, trials, seed))
        results.sort(key=lambda r: (-r.observed_fraction_with_women, r.scope))
    obs = observed_board_stats(corpus, GLOBAL_SCOPE, gendered_only)
    results.append(_result_for_scope(obs, trials, seed))
    return results
