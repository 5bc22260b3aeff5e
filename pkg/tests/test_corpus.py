import io

import pytest

from interlock.corpus import (FEMALE, MALE, MISSING, RawDirectorRow,
                              SchemaError, corpus_from_dict, corpus_to_dict,
                              infer_country, missing_data_report, parse_corpus,
                              resolve_identity, validate_corpus)

COMPANIES_HEADER = "company_id,name,sector,industry,country,revenue,employees,date_incorporated\n"
DIRECTORS_HEADER = "company_id,name,gender,age\n"


def make_sources(company_rows, director_rows):
    c = COMPANIES_HEADER + "".join(r + "\n" for r in company_rows)
    d = DIRECTORS_HEADER + "".join(r + "\n" for r in director_rows)
    return c.encode(), d.encode()


def test_single_company_no_directors():
    c, d = make_sources(['C1,Acme,Tech,Software,SG,10.5,25,2001-01-01'], [])
    corpus = parse_corpus(c, d)
    assert len(corpus.companies) == 1
    assert corpus.directors == []
    assert corpus.companies[0].board == []
    validate_corpus(corpus)


def test_same_triple_across_companies_is_one_person():
    c, d = make_sources(
        ['C1,A,,,,,,', 'C2,B,,,,,,'],
        ['C1,Jane Doe,F,52', 'C2,Jane Doe,F,52'])
    corpus = parse_corpus(c, d)
    assert len(corpus.directors) == 1
    assert sorted(corpus.directors[0].seats) == ["C1", "C2"]
    validate_corpus(corpus)


def test_age_mismatch_blocks_merge():
    c, d = make_sources(
        ['C1,A,,,,,,', 'C2,B,,,,,,'],
        ['C1,Jane Doe,F,52', 'C2,Jane Doe,F,'])
    corpus = parse_corpus(c, d)
    assert len(corpus.directors) == 2


def test_resolve_identity_examples():
    rows = [RawDirectorRow("C1", "X", MALE, 40),
            RawDirectorRow("C2", "X", MALE, 40)]
    assert resolve_identity(rows)[0] == resolve_identity(rows)[1]

    rows = [RawDirectorRow("C1", "X", MALE, None),
            RawDirectorRow("C2", "X", MALE, None)]
    ids = resolve_identity(rows)
    assert ids[0] == ids[1]

    rows = [RawDirectorRow("C1", "X", MALE, 40),
            RawDirectorRow("C2", "X", FEMALE, 40)]
    ids = resolve_identity(rows)
    assert ids[0] != ids[1]


def test_resolution_is_permutation_invariant():
    import random
    rows = []
    for i in range(60):
        rows.append(RawDirectorRow(f"C{i % 7}", f"N{i % 11}",
                                   [MALE, FEMALE, MISSING][i % 3],
                                   None if i % 4 == 0 else 30 + i % 5))

    def partition(rs):
        ids = resolve_identity(rs)
        groups = {}
        for r, did in zip(rs, ids):
            groups.setdefault(did, []).append(r)
        return frozenset(frozenset((r.name, r.gender, r.age) for r in g)
                         for g in groups.values())

    base = partition(rows)
    rnd = random.Random(5)
    for _ in range(10):
        shuffled = rows[:]
        rnd.shuffle(shuffled)
        assert partition(shuffled) == base


def test_resolution_is_equivalence_on_exact_triples():
    rows = [RawDirectorRow("C1", "A", MALE, 50),
            RawDirectorRow("C2", "A", MALE, 50),
            RawDirectorRow("C3", "A", MALE, 50)]
    ids = resolve_identity(rows)
    assert ids[0] == ids[1] == ids[2]  # transitivity through equal triples


def test_name_trimmed_but_case_sensitive():
    c, d = make_sources(
        ['C1,A,,,,,,', 'C2,B,,,,,,'],
        ['C1,  Jane Doe ,F,52', 'C2,Jane Doe,F,52', 'C2,jane doe,F,52'])
    corpus = parse_corpus(c, d)
    assert len(corpus.directors) == 2


def test_duplicate_seat_rows_collapse():
    c, d = make_sources(
        ['C1,A,,,,,,'],
        ['C1,Bob,M,44', 'C1,Bob,M,44'])
    corpus = parse_corpus(c, d)
    assert len(corpus.directors) == 1
    assert corpus.directors[0].seats == ["C1"]
    assert corpus.companies[0].board == [0]
    assert any("collapsed" in m for m in corpus.diagnostics)


def test_missing_header_column_is_schema_error():
    bad = b"company_id,name,gender\nC1,Bob,M\n"
    good_c = (COMPANIES_HEADER + "C1,A,,,,,,\n").encode()
    with pytest.raises(SchemaError, match="age"):
        parse_corpus(good_c, bad)
    with pytest.raises(SchemaError, match="sector"):
        parse_corpus(b"company_id,name\nC1,A\n", (DIRECTORS_HEADER).encode())


def test_duplicate_company_id_is_hard_error():
    c, d = make_sources(['C1,A,,,,,,', 'C1,B,,,,,,'], [])
    with pytest.raises(SchemaError, match="duplicate company_id"):
        parse_corpus(c, d)


def test_row_rejection_diagnostics():
    c, d = make_sources(
        ['C1,A,,,,,,', ',NoId,,,,,,'],
        ['C1,Bob,M,44', ',Eve,F,30', 'C9,Zed,M,50'])
    corpus = parse_corpus(c, d)
    assert len(corpus.companies) == 1
    assert len(corpus.directors) == 1
    assert sum("rejected" in m for m in corpus.diagnostics) == 3
    validate_corpus(corpus)


def test_bad_field_values_degrade_with_diagnostics():
    c, d = make_sources(
        ['C1,A,,,,abc,xyz,'],
        ['C1,Bob,Q,44', 'C1,Eve,F,-3', 'C1,Ann,F,nine'])
    corpus = parse_corpus(c, d)
    by_name = {d.name: d for d in corpus.directors}
    assert by_name["Bob"].gender == MISSING
    assert by_name["Eve"].age is None
    assert by_name["Ann"].age is None
    assert corpus.companies[0].revenue is None
    assert corpus.companies[0].employees is None
    assert len(corpus.diagnostics) == 5


def test_implausible_age_flagged_but_retained():
    c, d = make_sources(['C1,A,,,,,,'], ['C1,Kid,M,1'])
    corpus = parse_corpus(c, d)
    assert corpus.directors[0].age == 1
    assert any("implausible" in m for m in corpus.diagnostics)


def test_seat_count_conservation():
    c, d = make_sources(
        ['C1,A,,,,,,', 'C2,B,,,,,,', 'C3,C,,,,,,'],
        ['C1,P,M,40', 'C2,P,M,40', 'C2,Q,F,50', 'C3,R,,', 'C3,Q,F,50'])
    corpus = parse_corpus(c, d)
    n_board = sum(len(co.board) for co in corpus.companies)
    n_seats = sum(len(dd.seats) for dd in corpus.directors)
    assert n_board == n_seats == 5
    validate_corpus(corpus)


def test_infer_country_modal_and_ties():
    c, d = make_sources(
        ['C1,A,,,SG,,,', 'C2,B,,,SG,,,', 'C3,C,,,US,,,', 'C4,D,,,,,,'],
        ['C1,P,M,40', 'C2,P,M,40', 'C3,P,M,40',
         'C3,Q,F,50', 'C4,Q,F,50',
         'C4,R,M,33'])
    corpus = parse_corpus(c, d)
    by_name = {dd.name: dd for dd in corpus.directors}
    assert by_name["P"].inferred_country == "SG"      # modal
    assert by_name["Q"].inferred_country == "US"      # missing ignored
    assert by_name["R"].inferred_country is None      # no evidence


def test_infer_country_tie_breaks_lexicographic_and_order_invariant():
    for order in (['C1,A,,,SG,,,', 'C2,B,,,US,,,'],
                  ['C2,B,,,US,,,', 'C1,A,,,SG,,,']):
        c, d = make_sources(order, ['C1,P,M,40', 'C2,P,M,40'])
        corpus = parse_corpus(c, d)
        assert corpus.directors[0].inferred_country == "SG"


def test_missing_data_report():
    c, d = make_sources(
        ['C1,A,Tech,Soft,SG,1,1,2000-01-01'],
        ['C1,P,M,40', 'C1,Q,F,50', 'C1,R,,33', 'C1,S,M,'])
    corpus = parse_corpus(c, d)
    report = missing_data_report(corpus)
    assert report["gender"]["missing"] == 1
    assert report["gender"]["pct"] == pytest.approx(25.0)
    assert report["age"]["missing"] == 1
    assert report["country"]["missing"] == 0
    assert report == corpus.missing_stats

    all_present = {k: v for k, v in report.items() if k in ("country", "sector", "industry")}
    assert all(v["missing"] == 0 for v in all_present.values())


def test_corpus_json_round_trip(tmp_path):
    c, d = make_sources(
        ['C1,A,Tech,Soft,SG,5.5,10,1999-12-31', 'C2,B,,,,,,'],
        ['C1,P,M,40', 'C2,P,M,40', 'C2,Q,F,'])
    corpus = parse_corpus(c, d)
    data = corpus_to_dict(corpus)
    back = corpus_from_dict(data)
    assert corpus_to_dict(back) == data
    validate_corpus(back)
