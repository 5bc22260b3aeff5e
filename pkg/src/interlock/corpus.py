"""Company/director ingestion and exact-match identity resolution.

Raw data arrives as two CSV files: one row per company and one row per board
seat. Seat rows naming the same (name, gender, age) triple are resolved to a
single individual; blank fields only match blank fields. The result is an
immutable corpus with referential integrity between boards and seats.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Optional, Union

logger = logging.getLogger(__name__)

MALE = "Male"
FEMALE = "Female"
MISSING = "Missing"
GENDERS = (MALE, FEMALE, MISSING)

COMPANIES_HEADER = ["company_id", "name", "sector", "industry", "country",
                    "revenue", "employees", "date_incorporated"]
DIRECTORS_HEADER = ["company_id", "name", "gender", "age"]

_GENDER_TOKENS = {"M": MALE, "F": FEMALE, "": MISSING}
_GENDER_TO_TOKEN = {MALE: "M", FEMALE: "F", MISSING: ""}

# Ages outside this window are kept at ingest but flagged; analysis-time
# filtering is the stats suite's job.
PLAUSIBLE_AGE_RANGE = (10, 120)


class SchemaError(ValueError):
    """Raised for malformed headers, duplicate keys, and broken artifacts."""


@dataclass(frozen=True)
class RawDirectorRow:
    company_id: str
    name: str
    gender: str
    age: Optional[int]

    def identity_key(self) -> tuple:
        return (self.name, self.gender, self.age)


@dataclass
class CompanyRecord:
    company_id: str
    name: str
    sector: Optional[str]
    industry: Optional[str]
    country: Optional[str]
    revenue: Optional[float]
    employees: Optional[int]
    date_incorporated: Optional[str]
    board: list = field(default_factory=list)  # director ids, duplicate-free


@dataclass
class DirectorRecord:
    director_id: int
    name: str
    gender: str
    age: Optional[int]
    seats: list = field(default_factory=list)  # company ids, duplicate-free
    inferred_country: Optional[str] = None


@dataclass
class Corpus:
    companies: list
    directors: list
    missing_stats: dict
    diagnostics: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self._company_index = {c.company_id: c for c in self.companies}

    def company(self, company_id: str) -> CompanyRecord:
        return self._company_index[company_id]

    @property
    def n_seats(self) -> int:
        return sum(len(c.board) for c in self.companies)


def _open_text(source: Union[str, bytes, BinaryIO]) -> io.TextIOBase:
    if isinstance(source, (str,)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    return io.TextIOWrapper(source, encoding="utf-8", newline="")

def _check_header(reader: csv.DictReader, required: list, what: str) -> None:
    fields = reader.fieldnames
    if fields is None:
        raise SchemaError(f"{what}: empty input, header row missing")
    for col in required:
        if col not in fields:
            raise SchemaError(f"{what}: missing column '{col}'")


def _opt(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    value = value.strip()
    return value if value else None


def parse_corpus(companies_source, directors_source) -> Corpus:
    """Parse the two CSV sources into a referentially intact corpus.

    Rows with an empty or unknown company_id are rejected with a row-level
    diagnostic; a duplicate company_id is a hard error. Field-level problems
    (bad gender token, non-numeric age) degrade the field to missing and are
    recorded as diagnostics.
    """
    diagnostics: list = []
    companies: list = []
    seen_ids: set = set()

    with _open_text(companies_source) as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, COMPANIES_HEADER, "companies.csv")
        for lineno, row in enumerate(reader, start=2):
            cid = (row.get("company_id") or "").strip()
            if not cid:
                diagnostics.append(f"companies.csv:{lineno}: empty company_id, row rejected")
                continue
            if cid in seen_ids:
                raise SchemaError(f"companies.csv:{lineno}: duplicate company_id '{cid}'")
            seen_ids.add(cid)
            revenue = _parse_number(row.get("revenue"), float, "revenue", lineno, diagnostics)
            employees = _parse_number(row.get("employees"), int, "employees", lineno, diagnostics)
            companies.append(CompanyRecord(
                company_id=cid,
                name=(row.get("name") or "").strip(),
                sector=_opt(row.get("sector")),
                industry=_opt(row.get("industry")),
                country=_opt(row.get("country")),
                revenue=revenue,
                employees=employees,
                date_incorporated=_opt(row.get("date_incorporated")),
            ))

    rows: list = []
    with _open_text(directors_source) as fh:
        reader = csv.DictReader(fh)
        _check_header(reader, DIRECTORS_HEADER, "directors.csv")
        for lineno, row in enumerate(reader, start=2):
            cid = (row.get("company_id") or "").strip()
            if not cid:
                diagnostics.append(f"directors.csv:{lineno}: empty company_id, row rejected")
                continue
            if cid not in seen_ids:
                diagnostics.append(
                    f"directors.csv:{lineno}: unknown company_id '{cid}', row rejected")
                continue
            token = (row.get("gender") or "").strip()
            gender = _GENDER_TOKENS.get(token)
            if gender is None:
                diagnostics.append(
                    f"directors.csv:{lineno}: gender '{token}' not in {{M,F,blank}}, treated as missing")
                gender = MISSING
            age = _parse_age(row.get("age"), lineno, diagnostics)
            rows.append(RawDirectorRow(
                company_id=cid,
                name=(row.get("name") or "").strip(),
                gender=gender,
                age=age,
            ))

    corpus = _assemble(companies, rows, diagnostics)
    for msg in diagnostics:
        logger.debug("%s", msg)
    return corpus


def _parse_number(raw, kind, label, lineno, diagnostics):
    raw = (raw or "").strip()
    if not raw:
        return None
    try:
        return kind(raw)
    except ValueError:
        diagnostics.append(f"companies.csv:{lineno}: bad {label} '{raw}', treated as missing")
        return None


def _parse_age(raw, lineno, diagnostics) -> Optional[int]:
    raw = (raw or "").strip()
    if not raw:
        return None
    if not raw.isdigit() or int(raw) <= 0:
        diagnostics.append(f"directors.csv:{lineno}: bad age '{raw}', treated as missing")
        return None
    age = int(raw)
    lo, hi = PLAUSIBLE_AGE_RANGE
    if not lo <= age <= hi:
        diagnostics.append(f"directors.csv:{lineno}: implausible age {age}, retained")
    return age


def resolve_identity(rows: Iterable[RawDirectorRow]) -> list:
    """Map each row to a director id: rows share an id iff name, gender and
    age are all equal, where a blank field only equals another blank."""
    ids_by_key: dict = {}
    out = []
    for row in rows:
        key = row.identity_key()
        did = ids_by_key.get(key)
        if did is None:
            did = len(ids_by_key)
            ids_by_key[key] = did
        out.append(did)
    return out


def _assemble(companies, rows, diagnostics) -> Corpus:
    row_ids = resolve_identity(rows)
    n_directors = max(row_ids) + 1 if row_ids else 0
    directors = [None] * n_directors
    company_index = {c.company_id: c for c in companies}

    for row, did in zip(rows, row_ids):
        rec = directors[did]
        if rec is None:
            rec = DirectorRecord(director_id=did, name=row.name,
                                 gender=row.gender, age=row.age)
            directors[did] = rec
        if row.company_id in rec.seats:
            diagnostics.append(
                f"duplicate seat for director '{row.name}' at company "
                f"'{row.company_id}', collapsed")
            continue
        rec.seats.append(row.company_id)
        company_index[row.company_id].board.append(did)

    missing_stats = _missing_stats(companies, directors)
    corpus = Corpus(companies=companies, directors=directors,
                    missing_stats=missing_stats, diagnostics=diagnostics)
    for d in directors:
        d.inferred_country = infer_country(d, corpus)
    return corpus


def infer_country(director: DirectorRecord, corpus: Corpus) -> Optional[str]:
    """Modal country over the director's companies; missing countries are
    ignored, ties break to the lexicographically smallest code."""
    counts = Counter()
    for cid in director.seats:
        country = corpus.company(cid).country
        if country is not None:
            counts[country] += 1
    if not counts:
        return None
    best = max(counts.items(), key=lambda kv: (kv[1], kv[0]))
    top = best[1]
    return min(c for c, k in counts.items() if k == top)


def _missing_stats(companies, directors) -> dict:
    n_c = len(companies)
    n_d = len(directors)

    def entry(missing, total):
        pct = (100.0 * missing / total) if total else 0.0
        return {"missing": missing, "total": total, "pct": pct}

    return {
        "country": entry(sum(1 for c in companies if c.country is None), n_c),
        "sector": entry(sum(1 for c in companies if c.sector is None), n_c),
        "industry": entry(sum(1 for c in companies if c.industry is None), n_c),
        "gender": entry(sum(1 for d in directors if d.gender == MISSING), n_d),
        "age": entry(sum(1 for d in directors if d.age is None), n_d),
    }


def missing_data_report(corpus: Corpus) -> dict:
    """Per-field missing counts and percentages (recomputed, not cached)."""
    return _missing_stats(corpus.companies, corpus.directors)


# ── corpus.json ─────────────────────────────────────────────────────────

def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "companies": [{
            "company_id": c.company_id,
            "name": c.name,
            "sector": c.sector,
            "industry": c.industry,
            "country": c.country,
            "revenue": c.revenue,
            "employees": c.employees,
            "date_incorporated": c.date_incorporated,
            "board": c.board,
        } for c in corpus.companies],
        "directors": [{
            "director_id": d.director_id,
            "name": d.name,
            "gender": d.gender,
            "age": d.age,
            "seats": d.seats,
            "inferred_country": d.inferred_country,
        } for d in corpus.directors],
        "missing_stats": corpus.missing_stats,
    }


def corpus_from_dict(data: dict) -> Corpus:
    try:
        companies = [CompanyRecord(**c) for c in data["companies"]]
        directors = [DirectorRecord(**d) for d in data["directors"]]
        missing_stats = data["missing_stats"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"corpus.json: {exc}") from exc
    return Corpus(companies=companies, directors=directors,
                  missing_stats=missing_stats)


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(corpus_to_dict(corpus), fh, separators=(",", ":"))


def load_corpus(path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        return corpus_from_dict(json.load(fh))


def gender_token(gender: str) -> str:
    """CSV token for a gender value (inverse of parsing)."""
    return _GENDER_TO_TOKEN[gender]


def validate_corpus(corpus: Corpus) -> None:
    """Full referential cross-walk; raises SchemaError on any violation."""
    ids = {c.company_id for c in corpus.companies}
    if len(ids) != len(corpus.companies):
        raise SchemaError("duplicate company_id in corpus")
    seat_total = 0
    for d in corpus.directors:
        if not d.seats:
            raise SchemaError(f"director {d.director_id} holds no seats")
        if len(set(d.seats)) != len(d.seats):
            raise SchemaError(f"director {d.director_id} has duplicate seats")
        for cid in d.seats:
            if cid not in ids:
                raise SchemaError(f"director {d.director_id} references unknown company '{cid}'")
            if d.director_id not in corpus.company(cid).board:
                raise SchemaError(
                    f"seat ({d.director_id}, '{cid}') missing from the company board")
        seat_total += len(d.seats)
    board_total = 0
    n_d = len(corpus.directors)
    for c in corpus.companies:
        if len(set(c.board)) != len(c.board):
            raise SchemaError(f"company '{c.company_id}' lists a director twice")
        for did in c.board:
            if not 0 <= did < n_d:
                raise SchemaError(f"company '{c.company_id}' references unknown director {did}")
            if c.company_id not in corpus.directors[did].seats:
                raise SchemaError(
                    f"board entry ({did}, '{c.company_id}') missing from the director seats")
        board_total += len(c.board)
    if seat_total != board_total:
        raise SchemaError(f"seat totals disagree: {seat_total} != {board_total}")
