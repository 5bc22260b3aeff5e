"""Board-interlock network analysis toolkit.

Builds the bipartite director-company graph from tabular data, projects it
onto the director social network, computes gender-stratified network
metrics, evaluates the independent-seat null model, and runs the associated
statistical tests. The `interlock` CLI orchestrates the full pipeline.
"""

__version__ = "0.1.0"

from .corpus import (Corpus, CompanyRecord, DirectorRecord, RawDirectorRow,
                     SchemaError, infer_country, load_corpus,
                     missing_data_report, parse_corpus, resolve_identity,
                     save_corpus)
from .graph import (BipartiteGraph, ComponentLabeling, ProjectedGraph,
                    build_bipartite, components, fraction_in_largest,
                    gender_subgraph, graph_from_edges, load_graph, project,
                    save_graph)
from .metrics import (GraphMetrics, avg_path_length_harmonic, betweenness,
                      clustering, degree_stats, density, diameter,
                      harmonic_closeness, like_degree_stats, metrics_report)
from .nullmodel import (BoardSizeDistribution, MonteCarloResult,
                        NullModelResult, country_null_report,
                        expected_fraction_with_women, mean_size_given_woman,
                        monte_carlo_null, observed_board_stats, prob_any_woman)
from .pipeline import ReportBundle, StageError, render_tables, run_pipeline
from .stats import (AgeSample, ProportionRow, TestResult, age_analysis,
                    chi2_normality, chi2_two_proportion, log_centrality_tests,
                    multi_directorship_rates, proportions_by,
                    seat_vs_director_gap, welch_t_test)
from .synth import SynthSpec, synth_corpus, write_synthetic_csvs
