"""Command-line interface.

Exit codes: 0 success, 2 input/schema error, 3 stage failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .corpus import SchemaError
from .pipeline import (CONFIG_DEFAULTS, StageError, load_config, run_pipeline,
                       stage_ingest, stage_metrics, stage_nullmodel,
                       stage_project, stage_stats)
from .synth import SynthSpec, write_synthetic_csvs

logger = logging.getLogger("interlock")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STAGE = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interlock",
        description="Board-interlock network analysis toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse CSVs into corpus.json")
    p.add_argument("--companies", required=True)
    p.add_argument("--directors", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("project", help="build the director projection")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--export-edgelist", metavar="PATH", default=None)

    p = sub.add_parser("metrics", help="compute network metrics")
    p.add_argument("--graph", required=True)
    p.add_argument("--betweenness", choices=["exact", "sampled"], default="sampled")
    p.add_argument("--samples", type=int, default=CONFIG_DEFAULTS["samples"])
    p.add_argument("--subgraph-samples", type=int,
                   default=CONFIG_DEFAULTS["subgraph_samples"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--per-node", metavar="CSV", default=None)

    p = sub.add_parser("nullmodel", help="independent-seat null model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--by-country", action="store_true")
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gendered-only", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data", metavar="CSV", default=None)

    p = sub.add_parser("stats", help="descriptive statistics and tests")
    p.add_argument("--corpus", required=True)
    p.add_argument("--metrics", required=True)
    p.add_argument("--per-node", metavar="CSV", default=None,
                   help="nodes.csv from the metrics stage (enables the "
                        "centrality and largest-component tests)")
    p.add_argument("--out", required=True)
    p.add_argument("--plot-data", metavar="DIR", default=None)
    p.add_argument("--min-age", type=int, default=CONFIG_DEFAULTS["min_age"])
    p.add_argument("--gendered-only", action="store_true")

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True, help="corpus.json destination")
    p.add_argument("--ledger", required=True)
    p.add_argument("--companies-csv", default=None)
    p.add_argument("--directors-csv", default=None)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--betweenness", choices=["exact", "sampled"], default=None)
    return parser


def _cmd_synth(args) -> None:
    from .corpus import parse_corpus, save_corpus
    from .synth import synth_corpus

    spec = SynthSpec.from_toml(args.spec)
    if args.companies_csv and args.directors_csv:
        ledger = write_synthetic_csvs(spec, args.companies_csv, args.directors_csv)
        with open(args.companies_csv, "rb") as cfh, open(args.directors_csv, "rb") as dfh:
            corpus = parse_corpus(cfh, dfh)
    else:
        corpus, ledger = synth_corpus(spec)
    save_corpus(corpus, args.out)
    with open(args.ledger, "w", encoding="utf-8") as fh:
        json.dump(ledger, fh, separators=(",", ":"), sort_keys=True)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "ingest":
            stage_ingest(args.companies, args.directors, args.out)
        elif args.command == "project":
            stage_project(args.corpus, args.out, args.export_edgelist)
        elif args.command == "metrics":
            stage_metrics(args.graph, args.out, args.per_node,
                          mode=args.betweenness, samples=args.samples,
                          subgraph_samples=args.subgraph_samples, seed=args.seed)
        elif args.command == "nullmodel":
            stage_nullmodel(args.corpus, args.out, args.plot_data,
                            by_country=args.by_country, trials=args.trials,
                            seed=args.seed, gendered_only=args.gendered_only)
        elif args.command == "stats":
            stage_stats(args.corpus, args.metrics, args.per_node, args.out,
                        plot_dir=args.plot_data, min_age=args.min_age,
                        gendered_only=args.gendered_only)
        elif args.command == "synth":
            _cmd_synth(args)
        elif args.command == "run":
            config = load_config(args.config)
            for key in ("seed", "samples", "trials", "betweenness"):
                value = getattr(args, key)
                if value is not None:
                    config[key] = value
            run_pipeline(config, args.out_dir)
    except StageError as exc:
        logger.error("%s", exc)
        return EXIT_STAGE
    except (SchemaError, ValueError, OSError, json.JSONDecodeError) as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
