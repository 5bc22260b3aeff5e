"""Seeded synthetic corpus generator with a ground-truth ledger.

Countries are generated independently: board sizes come from a truncated
discrete distribution, each director's seat count is 1 with probability
(1 - multiple_directorship_rate) and otherwise 2 plus a geometric tail, and
seats are dealt into boards by shuffling the seat multiset and repairing
within-board duplicates. Gender labels are drawn per person so that the
female share of seats concentrates on the per-country target and blank
fields stay consistent across a person's rows (what makes exact-match
identity resolution recover the planted partition).

The ledger records both the planted parameters and the realized quantities
(per-scope seat shares, board-size counts, and the person id behind every
emitted seat row) so downstream recovery can be tested exactly.
"""
from __future__ import annotations

import csv
import io
import math
import sys
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .corpus import parse_corpus

_MULTI_TAIL_P = 0.7   # seat count of a multiple director: 1 + Geometric(p)
_MAX_SEATS = 8
_AGE_BOUNDS = (21, 95)


@dataclass
class SynthSpec:
    n_companies: int
    seed: int
    country_weights: dict
    female_seat_probability: dict          # per country
    sector_weights: dict = field(default_factory=lambda: {"General": 1.0})
    industry_weights: dict = field(default_factory=dict)   # sector -> {industry: w}
    board_size_min: int = 1
    board_size_max: int = 40
    board_size_mean: float = 11.0
    board_size_weights: Optional[dict] = None              # explicit override
    multiple_directorship_rate: float = 0.14
    missing_gender_rate: float = 0.0
    missing_age_rate: float = 0.0
    age_mean_male: float = 55.1
    age_mean_female: float = 50.8
    age_sd: float = 8.0
    max_directors: Optional[int] = None                    # hard pool cap

    def __post_init__(self):
        if self.n_companies < 0:
            raise ValueError("n_companies must be >= 0")
        if not 1 <= self.board_size_min <= self.board_size_max:
            raise ValueError("board size support is empty")
        for name, v in (("multiple_directorship_rate", self.multiple_directorship_rate),
                        ("missing_gender_rate", self.missing_gender_rate),
                        ("missing_age_rate", self.missing_age_rate)):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v!r} outside [0, 1]")
        self.country_weights = _normalize(self.country_weights, "country_weights")
        self.sector_weights = _normalize(self.sector_weights, "sector_weights")
        self.industry_weights = {s: _normalize(w, f"industry_weights[{s}]")
                                 for s, w in self.industry_weights.items()}
        for c in self.country_weights:
            if c not in self.female_seat_probability:
                raise ValueError(f"female_seat_probability missing country {c!r}")
        for c, p in self.female_seat_probability.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"female_seat_probability[{c!r}]={p!r} outside [0, 1]")
            if p + self.missing_gender_rate > 1.0 + 1e-12:
                raise ValueError(
                    f"female probability {p} plus missing-gender rate "
                    f"{self.missing_gender_rate} exceeds 1 for {c!r}")
        if self.board_size_weights is not None:
            self.board_size_weights = {int(s): float(w)
                                       for s, w in self.board_size_weights.items()}
            for s in self.board_size_weights:
                if s < 1:
                    raise ValueError(f"board size {s} must be >= 1")
        if self.max_directors is not None and self.max_directors < self.board_size_max:
            raise ValueError("board sizes exceed the director pool cap")

    @classmethod
    def from_toml(cls, path) -> "SynthSpec":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown synth spec keys: {sorted(unknown)}")
        return cls(**data)

    def size_distribution(self) -> tuple:
        """(sizes, probabilities) of the board-size distribution."""
        if self.board_size_weights:
            sizes = np.array(sorted(self.board_size_weights), dtype=np.int64)
            probs = np.array([self.board_size_weights[int(s)] for s in sizes])
        else:
            sizes = np.arange(self.board_size_min, self.board_size_max + 1,
                              dtype=np.int64)
            lam = max(self.board_size_mean - self.board_size_min, 1e-9)
            logpmf = ((sizes - self.board_size_min) * math.log(lam) - lam
                      - np.array([math.lgamma(k + 1.0)
                                  for k in sizes - self.board_size_min]))
            probs = np.exp(logpmf)
        total = probs.sum()
        if total <= 0:
            raise ValueError("board size distribution has no mass")
        return sizes, probs / total


def _normalize(weights: dict, label: str) -> dict:
    if not weights:
        raise ValueError(f"{label} is empty")
    total = float(sum(weights.values()))
    if total <= 0 or any(w < 0 for w in weights.values()):
        raise ValueError(f"{label} must be nonnegative and sum to > 0")
    return {k: float(w) / total for k, w in sorted(weights.items())}


def _weighted_draw(rng, weights: dict, size: int) -> list:
    keys = list(weights)
    probs = np.array([weights[k] for k in keys])
    idx = rng.choice(len(keys), size=size, p=probs)
    return [keys[i] for i in idx]


def _deal_country(rng, board_sizes: np.ndarray, rate: float,
                  max_seats: int, pool_cap: Optional[int]):
    """Assign persons (local ids) to boards; returns (boards, seat_counts).

    Every person holds at least one seat, a fraction `rate` holds several,
    and no board lists the same person twice.
    """
    total_seats = int(board_sizes.sum())
    n_boards = len(board_sizes)
    cap = min(max_seats, n_boards)  # a person sits at most once per board
    if total_seats == 0:
        return [], np.empty(0, dtype=np.int64)

    counts = []
    drawn = 0
    while drawn < total_seats:
        if rate > 0 and cap > 1 and rng.random() < rate:
            c = min(1 + int(rng.geometric(_MULTI_TAIL_P)), cap,
                    total_seats - drawn)
        else:
            c = 1
        counts.append(c)
        drawn += c
    counts = np.array(counts, dtype=np.int64)

    # A board of size s needs s distinct people; downgrade multi seats until
    # the pool is large enough.
    need = int(board_sizes.max())
    while counts.size < need:
        big = int(np.argmax(counts))
        if counts[big] <= 1:
            raise ValueError("board sizes exceed the director pool")
        counts[big] -= 1
        counts = np.append(counts, 1)
    if pool_cap is not None and counts.size > pool_cap:
        raise ValueError("board sizes exceed the director pool")

    boundaries = np.zeros(n_boards + 1, dtype=np.int64)
    np.cumsum(board_sizes, out=boundaries[1:])
    for _attempt in range(8):
        tokens = np.repeat(np.arange(counts.size, dtype=np.int64), counts)
        rng.shuffle(tokens)
        if _repair_duplicates(rng, tokens, boundaries):
            boards = [tokens[boundaries[b]:boundaries[b + 1]].copy()
                      for b in range(n_boards)]
            return boards, counts
    raise ValueError("could not deal seats without duplicate board members")


def _repair_duplicates(rng, tokens: np.ndarray, boundaries: np.ndarray) -> bool:
    """Swap within-board duplicate tokens with positions in other boards."""
    n_boards = boundaries.size - 1
    board_of = np.empty(tokens.size, dtype=np.int64)
    for b in range(n_boards):
        board_of[boundaries[b]:boundaries[b + 1]] = b

    def board_has(b: int, person: int, skip: int) -> bool:
        seg = tokens[boundaries[b]:boundaries[b + 1]]
        for off, t in enumerate(seg):
            if t == person and boundaries[b] + off != skip:
                return True
        return False

    for b in range(n_boards):
        lo, hi = boundaries[b], boundaries[b + 1]
        seen = set()
        for pos in range(lo, hi):
            person = int(tokens[pos])
            if person not in seen:
                seen.add(person)
                continue
            fixed = False
            for _try in range(400):
                j = int(rng.integers(tokens.size))
                other = int(tokens[j])
                ob = int(board_of[j])
                if ob == b or other in seen:
                    continue
                if board_has(ob, person, skip=j):
                    continue
                tokens[pos], tokens[j] = other, person
                seen.add(other)
                fixed = True
                break
            if not fixed:
                return False
    return True


def generate_rows(spec: SynthSpec):
    """(company_rows, director_rows, ledger): CSV-ready tuples plus ground
    truth. Deterministic for a given spec."""
    rng = np.random.default_rng(spec.seed)
    countries = list(spec.country_weights)
    company_country = _weighted_draw(rng, spec.country_weights, spec.n_companies)
    company_sector = _weighted_draw(rng, spec.sector_weights, spec.n_companies)
    sizes_support, sizes_probs = spec.size_distribution()
    board_sizes_all = rng.choice(sizes_support, size=spec.n_companies,
                                 p=sizes_probs) if spec.n_companies else \
        np.empty(0, dtype=np.int64)

    company_rows = []
    for i in range(spec.n_companies):
        sector = company_sector[i]
        ind_weights = spec.industry_weights.get(sector)
        industry = (_weighted_draw(rng, ind_weights, 1)[0] if ind_weights
                    else f"{sector} General")
        revenue = round(float(np.exp(rng.normal(17.0, 1.5))), 2)
        employees = int(np.exp(rng.normal(6.0, 1.5))) + 1
        year = int(rng.integers(1950, 2015))
        month = int(rng.integers(1, 13))
        company_rows.append((
            f"C{i:06d}", f"Synthetic Company {i:06d}", sector, industry,
            company_country[i], f"{revenue}", f"{employees}",
            f"{year:04d}-{month:02d}-01",
        ))

    director_rows = []
    row_person_ids = []
    next_gid = 0
    n_multi = 0
    n_persons = 0
    seats_by_country = {c: 0 for c in countries}
    female_by_country = {c: 0 for c in countries}
    f_s_global: dict = {}
    f_s_by_country: dict = {c: {} for c in countries}

    for country in countries:
        comp_idx = [i for i in range(spec.n_companies)
                    if company_country[i] == country]
        if not comp_idx:
            continue
        board_sizes = board_sizes_all[comp_idx]
        for s in board_sizes.tolist():
            f_s_global[s] = f_s_global.get(s, 0) + 1
            f_s_by_country[country][s] = f_s_by_country[country].get(s, 0) + 1
        boards, counts = _deal_country(rng, board_sizes,
                                       spec.multiple_directorship_rate,
                                       _MAX_SEATS, spec.max_directors)
        n_local = counts.size
        n_persons += n_local
        n_multi += int((counts > 1).sum())

        p = spec.female_seat_probability[country]
        m = spec.missing_gender_rate
        u = rng.random(n_local)
        genders = np.where(u < p, "F", np.where(u < p + m, "", "M"))
        age_missing = rng.random(n_local) < spec.missing_age_rate
        mean_by_gender = {"M": spec.age_mean_male, "F": spec.age_mean_female,
                          "": (spec.age_mean_male + spec.age_mean_female) / 2.0}
        raw_ages = rng.normal(0.0, spec.age_sd, n_local)
        ages = []
        for j in range(n_local):
            if age_missing[j]:
                ages.append("")
            else:
                a = int(round(raw_ages[j] + mean_by_gender[genders[j]]))
                ages.append(str(min(max(a, _AGE_BOUNDS[0]), _AGE_BOUNDS[1])))

        gids = next_gid + np.arange(n_local, dtype=np.int64)
        next_gid += n_local
        names = [f"Person {g:07d}" for g in gids]

        for b, ci in enumerate(comp_idx):
            cid = f"C{ci:06d}"
            for local in boards[b]:
                director_rows.append((cid, names[local], genders[local],
                                      ages[local]))
                row_person_ids.append(int(gids[local]))
                seats_by_country[country] += 1
                if genders[local] == "F":
                    female_by_country[country] += 1

    total_seats = sum(seats_by_country.values())
    total_female = sum(female_by_country.values())
    ledger = {
        "seed": spec.seed,
        "n_companies": spec.n_companies,
        "planted": {
            "female_seat_probability": dict(spec.female_seat_probability),
            "multiple_directorship_rate": spec.multiple_directorship_rate,
            "missing_gender_rate": spec.missing_gender_rate,
            "missing_age_rate": spec.missing_age_rate,
        },
        "realized": {
            "n_directors": n_persons,
            "n_seats": total_seats,
            "multi_director_fraction": (n_multi / n_persons) if n_persons else 0.0,
            "p_global": (total_female / total_seats) if total_seats else 0.0,
            "p_by_country": {
                c: (female_by_country[c] / seats_by_country[c])
                for c in countries if seats_by_country[c]
            },
            "seats_by_country": {c: seats_by_country[c] for c in countries},
            "female_seats_by_country": {c: female_by_country[c] for c in countries},
            "f_s_global": {str(s): n for s, n in sorted(f_s_global.items())},
            "f_s_by_country": {
                c: {str(s): n for s, n in sorted(d.items())}
                for c, d in f_s_by_country.items() if d
            },
        },
        "row_person_ids": row_person_ids,
    }
    return company_rows, director_rows, ledger


def write_synthetic_csvs(spec: SynthSpec, companies_path, directors_path) -> dict:
    company_rows, director_rows, ledger = generate_rows(spec)
    with open(companies_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["company_id", "name", "sector", "industry", "country",
                    "revenue", "employees", "date_incorporated"])
        w.writerows(company_rows)
    with open(directors_path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["company_id", "name", "gender", "age"])
        w.writerows(director_rows)
    return ledger


def synth_corpus(spec: SynthSpec) -> tuple:
    """(Corpus, ledger) built through the regular CSV parser, so the result
    is exactly what ingesting the written files would produce."""
    company_rows, director_rows, ledger = generate_rows(spec)
    cbuf = io.StringIO()
    w = csv.writer(cbuf)
    w.writerow(["company_id", "name", "sector", "industry", "country",
                "revenue", "employees", "date_incorporated"])
    w.writerows(company_rows)
    dbuf = io.StringIO()
    w = csv.writer(dbuf)
    w.writerow(["company_id", "name", "gender", "age"])
    w.writerows(director_rows)
    corpus = parse_corpus(cbuf.getvalue().encode("utf-8"),
                          dbuf.getvalue().encode("utf-8"))
    return corpus, ledger
