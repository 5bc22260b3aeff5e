"""End-to-end orchestration: synth -> ingest -> project -> metrics ->
nullmodel -> stats -> rendered tables.

Every inter-stage artifact is a file, each stage reloads its inputs from
disk, and all randomness is seeded, so a re-run over identical inputs
produces byte-identical outputs. A stage failure aborts the run with the
stage name and cause.
"""
from __future__ import annotations

import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .corpus import FEMALE, MALE, SchemaError, load_corpus, parse_corpus, save_corpus
from .graph import GENDER_CODE, build_bipartite, export_edgelist, load_graph, project, save_graph
from .metrics import TABLE1_ROWS, TABLE2_ROWS, metrics_report, write_per_node_csv
from .nullmodel import country_null_report
from .stats import (age_analysis, chi2_two_proportion, log_centrality_tests,
                    multi_directorship_rates, proportions_by,
                    seat_vs_director_gap, sector_industry_proportions,
                    welch_t_test)
from .synth import SynthSpec, write_synthetic_csvs

CONFIG_DEFAULTS = {
    "companies": None,
    "directors": None,
    "synth_spec": None,
    "betweenness": "sampled",
    "samples": 10_000,
    "subgraph_samples": 2_000,
    "seed": 0,
    "trials": 100_000,
    "min_age": 10,
    "gendered_only": False,
    "export_edgelist": False,
}


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class ReportBundle:
    table1: dict
    table2: dict
    figures: dict      # figure name -> {"path": ..., "rows": ...}
    provenance: dict   # input hashes, seeds, tool version

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path) -> dict:
    """Flat key/value pipeline configuration (TOML scalars only)."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    unknown = set(data) - set(CONFIG_DEFAULTS)
    if unknown:
        raise SchemaError(f"unknown config keys: {sorted(unknown)}")
    for key, value in data.items():
        if isinstance(value, (dict, list)):
            raise SchemaError(f"config key '{key}' must be a scalar")
    config = dict(CONFIG_DEFAULTS)
    config.update(data)
    return config


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _dump_json(obj, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, separators=(",", ":"), sort_keys=True)


def _test_result_dict(tr) -> dict:
    return {"statistic": tr.statistic, "dof": tr.dof,
            "p_value": tr.p_value, "test_name": tr.test_name}


def _csv_rows(path: Path) -> int:
    with open(path, "r", encoding="utf-8") as fh:
        return sum(1 for _ in fh) - 1


# ── individual stages ───────────────────────────────────────────────────

def stage_ingest(companies_path, directors_path, out_path) -> None:
    with open(companies_path, "rb") as cfh, open(directors_path, "rb") as dfh:
        corpus = parse_corpus(cfh, dfh)
    save_corpus(corpus, out_path)


def stage_project(corpus_path, graph_path, edgelist_path=None) -> None:
    corpus = load_corpus(corpus_path)
    pg = project(build_bipartite(corpus), corpus)
    save_graph(pg, graph_path)
    if edgelist_path:
        export_edgelist(pg, edgelist_path)


def stage_metrics(graph_path, out_path, per_node_path, *, mode: str,
                  samples: int, subgraph_samples: int, seed: int) -> None:
    pg = load_graph(graph_path)
    gm = metrics_report(pg, mode=mode, samples=samples,
                        subgraph_samples=subgraph_samples, seed=seed)
    _dump_json(gm.to_dict(), Path(out_path))
    if per_node_path:
        write_per_node_csv(gm, per_node_path)


def stage_nullmodel(corpus_path, out_path, fig4_path=None, *, by_country: bool = True,
                    trials: Optional[int] = None, seed: int = 0,
                    gendered_only: bool = False) -> None:
    corpus = load_corpus(corpus_path)
    results = country_null_report(corpus, by_country=by_country, trials=trials,
                                  seed=seed, gendered_only=gendered_only)
    _dump_json([r.to_dict() for r in results], Path(out_path))
    if fig4_path:
        with open(fig4_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["country", "observed", "predicted"])
            for r in results:
                if r.scope == "global":
                    continue
                w.writerow([r.scope, repr(r.observed_fraction_with_women),
                            repr(r.predicted_fraction_with_women)])


def _load_per_node(path):
    ids, genders, degrees, betw, comp = [], [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            ids.append(int(row["director_id"]))
            genders.append(GENDER_CODE[row["gender"]])
            degrees.append(int(row["degree"]))
            betw.append(float(row["betweenness"]))
            comp.append(int(row["component_id"]))
    return (np.asarray(ids), np.asarray(genders, dtype=np.int8),
            np.asarray(degrees, dtype=np.int64), np.asarray(betw),
            np.asarray(comp, dtype=np.int64))


def stage_stats(corpus_path, metrics_path, per_node_path, out_path,
                plot_dir=None, *, min_age: int = 10,
                gendered_only: bool = False) -> dict:
    corpus = load_corpus(corpus_path)
    with open(metrics_path, "r", encoding="utf-8") as fh:
        metrics = json.load(fh)

    out = {
        "proportions": {
            key: [vars(r) for r in proportions_by(corpus, key, gendered_only)]
            for key in ("country", "sector", "industry")
        },
        "seat_vs_director_gap": {"global": seat_vs_director_gap(corpus, "global",
                                                                gendered_only)},
        "multi_directorship_rates": {
            stratum: {f">{t}": rate for t, rate in rates.items()}
            for stratum, rates in multi_directorship_rates(corpus).items()
        },
    }

    sect_rows = sector_industry_proportions(corpus, gendered_only)
    age = None
    try:
        age = age_analysis(corpus, min_age=min_age)
    except ValueError as exc:
        out["age"] = {"error": str(exc)}
    if age is not None:
        out["age"] = {
            "min_age": min_age,
            "male": _age_stratum_dict(age, MALE),
            "female": _age_stratum_dict(age, FEMALE),
        }
        try:
            mean_test = welch_t_test(age.samples[MALE].values,
                                     age.samples[FEMALE].values)
            out["age"]["mean_test"] = _test_result_dict(mean_test)
        except ValueError as exc:
            out["age"]["mean_test"] = {"error": str(exc)}

    out["metrics_provenance"] = {"mode": metrics.get("mode"),
                                 "samples": metrics.get("samples"),
                                 "seed": metrics.get("seed")}

    if per_node_path:
        ids, genders, degrees, betw, comp = _load_per_node(per_node_path)
        sizes = np.bincount(comp) if comp.size else np.array([0])
        largest = int(np.argmax(sizes))
        in_largest = comp == largest
        male = genders == GENDER_CODE[MALE]
        female = genders == GENDER_CODE[FEMALE]
        if female.any() and male.any():
            out["largest_component_test"] = _test_result_dict(chi2_two_proportion(
                int((female & in_largest).sum()), int(female.sum()),
                int((male & in_largest).sum()), int(male.sum())))
            try:
                tests = log_centrality_tests(degrees, betw, genders, in_largest)
                out["log_centrality_tests"] = {
                    name: _test_result_dict(tr) for name, tr in tests.items()
                }
            except ValueError as exc:
                out["log_centrality_tests"] = {"error": str(exc)}

    _dump_json(out, Path(out_path))

    if plot_dir:
        plot_dir = Path(plot_dir)
        plot_dir.mkdir(parents=True, exist_ok=True)
        with open(plot_dir / "fig2_sector.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["sector", "industry", "proportion"])
            for sector, industry, _n, prop in sect_rows:
                w.writerow([sector, industry, repr(prop)])
        with open(plot_dir / "fig3_country.csv", "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["country", "proportion"])
            for r in out["proportions"]["country"]:
                w.writerow([r["key"], repr(r["seat_proportion"])])
        if age is not None:
            hist = age.histogram
            with open(plot_dir / "fig5_age.csv", "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["age", "count_male", "count_female",
                            "fitted_male", "fitted_female"])
                for i, a in enumerate(hist["age"]):
                    w.writerow([a, hist["count_male"][i], hist["count_female"][i],
                                repr(hist["fitted_male"][i]),
                                repr(hist["fitted_female"][i])])
    return out


def _age_stratum_dict(age, gender) -> dict:
    sample = age.samples[gender]
    norm = age.normality[gender]
    return {
        "n": int(sample.values.size),
        "mean": sample.mean,
        "sd": sample.sd,
        "fit": age.fits[gender],
        "normality": _test_result_dict(norm) if norm is not None else None,
    }


# ── tables and bundle ───────────────────────────────────────────────────

def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _larger_flag(row: dict) -> str:
    male, female = row.get("male"), row.get("female")
    if male is None or female is None:
        return ""
    if male > female:
        return "male"
    if female > male:
        return "female"
    return ""


def render_tables(bundle: ReportBundle, out_dir) -> dict:
    """Write table1/table2 as CSV and aligned text; a structurally missing
    cell is an error naming it, an undefined value renders as an absent
    marker. Returns {name: path}."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for name, rows, table in (("table1", TABLE1_ROWS, bundle.table1),
                              ("table2", TABLE2_ROWS, bundle.table2)):
        for col in ("all", "male", "female"):
            if col not in table:
                raise KeyError(f"{name}: missing column '{col}'")
            for row in rows:
                if row not in table[col]:
                    raise KeyError(f"{name}: missing cell ({row}, {col})")
        csv_path = out_dir / f"{name}.csv"
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["metric", "all", "male", "female", "larger"])
            for row in rows:
                cells = {col: table[col][row] for col in ("all", "male", "female")}
                w.writerow([row, _format_cell(cells["all"]),
                            _format_cell(cells["male"]),
                            _format_cell(cells["female"]), _larger_flag(cells)])
        txt_path = out_dir / f"{name}.txt"
        with open(txt_path, "w", encoding="utf-8") as fh:
            width = max(len(r) for r in rows) + 2
            fh.write(f"{'metric':<{width}}{'all':>16}{'male':>16}{'female':>16}\n")
            for row in rows:
                cells = [table[col][row] for col in ("all", "male", "female")]
                rendered = ["-" if c is None else _short(c) for c in cells]
                flag = _larger_flag({col: table[col][row]
                                     for col in ("all", "male", "female")})
                mark = {"male": 1, "female": 2}.get(flag)
                if mark:
                    rendered[mark] = rendered[mark] + "*"
                fh.write(f"{row:<{width}}{rendered[0]:>16}{rendered[1]:>16}"
                         f"{rendered[2]:>16}\n")
        written[name] = {"csv": str(csv_path), "txt": str(txt_path)}
    return written


def _short(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if v != 0 and (abs(v) < 1e-3 or abs(v) >= 1e7):
        return f"{v:.3e}"
    return f"{v:.4g}"


def parse_table_csv(path) -> dict:
    """Inverse of the CSV rendering: {column: {metric: value}}."""
    out = {"all": {}, "male": {}, "female": {}}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            for col in ("all", "male", "female"):
                raw = row[col]
                if raw == "":
                    value = None
                else:
                    f = float(raw)
                    value = int(f) if "." not in raw and "e" not in raw.lower() else f
                out[col][row["metric"]] = value
    return out


# ── the full pipeline ───────────────────────────────────────────────────

def run_pipeline(config: dict, out_dir) -> ReportBundle:
    """Execute every stage, writing all artifacts under out_dir. The config
    must name either input CSVs (companies/directors) or a synth_spec."""
    cfg = dict(CONFIG_DEFAULTS)
    cfg.update(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inputs = {}

    if cfg["synth_spec"]:
        try:
            spec = SynthSpec.from_toml(cfg["synth_spec"])
            ledger = write_synthetic_csvs(spec, out / "companies.csv",
                                          out / "directors.csv")
            _dump_json(ledger, out / "ledger.json")
        except Exception as exc:
            raise StageError("synth", exc) from exc
        companies, directors = out / "companies.csv", out / "directors.csv"
        inputs["synth_spec"] = _sha256(Path(cfg["synth_spec"]))
    else:
        if not cfg["companies"] or not cfg["directors"]:
            raise StageError("config", ValueError(
                "config needs companies+directors paths or a synth_spec"))
        companies, directors = Path(cfg["companies"]), Path(cfg["directors"])
    inputs["companies"] = _sha256(companies)
    inputs["directors"] = _sha256(directors)

    corpus_path = out / "corpus.json"
    graph_path = out / "graph.bin"
    metrics_path = out / "metrics.json"
    nodes_path = out / "nodes.csv"
    nullmodel_path = out / "nullmodel.json"
    stats_path = out / "stats.json"

    try:
        stage_ingest(companies, directors, corpus_path)
    except Exception as exc:
        raise StageError("ingest", exc) from exc
    try:
        stage_project(corpus_path, graph_path,
                      out / "edges.txt" if cfg["export_edgelist"] else None)
    except Exception as exc:
        raise StageError("project", exc) from exc
    try:
        stage_metrics(graph_path, metrics_path, nodes_path,
                      mode=cfg["betweenness"], samples=cfg["samples"],
                      subgraph_samples=cfg["subgraph_samples"], seed=cfg["seed"])
    except Exception as exc:
        raise StageError("metrics", exc) from exc
    try:
        stage_nullmodel(corpus_path, nullmodel_path, out / "fig4.csv",
                        trials=cfg["trials"], seed=cfg["seed"],
                        gendered_only=cfg["gendered_only"])
    except Exception as exc:
        raise StageError("nullmodel", exc) from exc
    try:
        stage_stats(corpus_path, metrics_path, nodes_path, stats_path,
                    plot_dir=out, min_age=cfg["min_age"],
                    gendered_only=cfg["gendered_only"])
    except Exception as exc:
        raise StageError("stats", exc) from exc

    try:
        with open(metrics_path, "r", encoding="utf-8") as fh:
            metrics = json.load(fh)
        figures = {}
        for name, fname in (("fig2_sector", "fig2_sector.csv"),
                            ("fig3_country", "fig3_country.csv"),
                            ("fig4", "fig4.csv"),
                            ("fig5_age", "fig5_age.csv")):
            path = out / fname
            if path.exists():
                figures[name] = {"path": fname, "rows": _csv_rows(path)}
        bundle = ReportBundle(
            table1=metrics["table1"],
            table2=metrics["table2"],
            figures=figures,
            provenance={
                "version": __version__,
                "inputs": inputs,
                "seed": cfg["seed"],
                "samples": cfg["samples"] if cfg["betweenness"] == "sampled" else None,
                "subgraph_samples": (cfg["subgraph_samples"]
                                     if cfg["betweenness"] == "sampled" else None),
                "betweenness": cfg["betweenness"],
                "trials": cfg["trials"],
            },
        )
        render_tables(bundle, out)
        _dump_json(bundle.to_dict(), out / "bundle.json")
    except Exception as exc:
        raise StageError("render", exc) from exc
    return bundle
