"""Network metrics over the director projection, stratified by gender.

Distance-based metrics (betweenness, harmonic closeness, harmonic mean path
length, diameter) all derive from one per-source BFS pass. The pass runs
either over every node (exact) or over a seeded uniform sample of k sources
whose totals are scaled by n/k. Betweenness is reported unnormalized over
unordered pairs with endpoints excluded; closeness follows the harmonic-mean
formula, so disconnected pairs contribute zero instead of breaking the
average.

Accumulation happens in ascending source order regardless of thread count,
so repeated runs are bit-identical. Graphs above _RELABEL_THRESHOLD nodes
are internally relabeled by BFS order for cache locality before the pass;
outputs are mapped back to the external node order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .graph import (CODE_GENDER, GENDER_CODE, ComponentLabeling, FEMALE, MALE,
                    ProjectedGraph, components, fraction_in_largest,
                    gender_subgraph)

_RELABEL_THRESHOLD = 50_000
_CHUNK = 32

TABLE1_ROWS = [
    "edges",
    "diameter",
    "avg_path_length",
    "density",
    "components",
    "pct_nodes_in_largest_component",
    "pct_edges_in_largest_component",
]

TABLE2_ROWS = [
    "pct_of_all",
    "pct_in_largest_component",
    "max_degree",
    "avg_degree",
    "avg_like_degree",
    "avg_degree_largest_component",
    "max_betweenness",
    "avg_betweenness",
    "avg_betweenness_largest_component",
    "max_closeness",
    "avg_closeness",
    "avg_closeness_largest_component",
    "max_clustering",
    "avg_clustering",
    "avg_clustering_largest_component",
]

COLUMNS = ["all", "male", "female"]


@dataclass
class DistancePassResult:
    """Aggregates of one BFS pass over a set of sources."""
    n: int
    k: int
    exact: bool
    betweenness: Optional[np.ndarray]  # unordered-pair convention, scaled n/k
    closeness: np.ndarray              # harmonic closeness (estimate if not exact)
    sum_inv_dist: float                # estimate of sum over ordered pairs of 1/d
    diameter: int                      # max ecc over sources (exact iff k == n)

    @property
    def avg_path_length(self) -> float:
        if self.n < 2:
            raise ValueError("path length needs at least two nodes")
        if self.sum_inv_dist == 0.0:
            return float("inf")
        return self.n * (self.n - 1) / self.sum_inv_dist


def _relabel_for_locality(pg: ProjectedGraph):
    """Permute node ids by BFS order from the max-degree node; returns the
    permuted CSR plus old->new and new->old maps."""
    deg = pg.degrees()
    start = int(np.argmax(deg))
    order = _kernels.bfs_relabel_order(pg.indptr, pg.indices, start)  # new -> old
    lab = np.empty(pg.n, dtype=np.int64)                              # old -> new
    lab[order] = np.arange(pg.n)
    u = np.repeat(np.arange(pg.n, dtype=np.int64), deg)
    rows = lab[u]
    cols = lab[pg.indices]
    sort = np.argsort(rows * pg.n + cols, kind="stable")
    indptr = np.zeros(pg.n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=pg.n), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols[sort].astype(np.int32)), lab, order


def _distance_pass(pg: ProjectedGraph, sources: np.ndarray,
                   with_delta: bool) -> DistancePassResult:
    n = pg.n
    k = int(sources.size)
    exact = k == n
    if n == 0 or k == 0:
        return DistancePassResult(n=n, k=k, exact=exact,
                                  betweenness=np.zeros(n) if with_delta else None,
                                  closeness=np.zeros(n), sum_inv_dist=0.0,
                                  diameter=0)

    lab = None
    if n > _RELABEL_THRESHOLD:
        indptr, indices, lab, order = _relabel_for_locality(pg)
        sources = np.sort(lab[sources])
    else:
        indptr, indices = pg.indptr, pg.indices
        sources = np.sort(np.asarray(sources, dtype=np.int64))

    delta_sum = np.zeros(n, dtype=np.float64)
    invd_sum = np.zeros(n, dtype=np.float64)
    chunk = min(_CHUNK, k)
    delta_buf = np.zeros((chunk, n)) if with_delta else np.zeros((1, 1))
    invd_buf = np.zeros((chunk, n))
    sum_invd = np.empty(chunk, dtype=np.float64)
    ecc = np.empty(chunk, dtype=np.int64)
    reached = np.empty(chunk, dtype=np.int64)

    total_inv = 0.0
    diam = 0
    for off in range(0, k, chunk):
        batch = sources[off:off + chunk]
        c = batch.size
        _kernels.distance_pass(indptr, indices, batch,
                               delta_sum, invd_sum,
                               sum_invd[:c], ecc[:c], reached[:c],
                               delta_buf[:c], invd_buf[:c], with_delta)
        for x in sum_invd[:c]:
            total_inv += float(x)
        d = int(ecc[:c].max())
        if d > diam:
            diam = d

    scale = 1.0 if exact else n / k
    in_sources = np.zeros(n, dtype=np.int64)
    in_sources[sources] = 1
    peers = (k - in_sources).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        closeness = np.where(peers > 0, invd_sum / peers, np.nan)
    betw = delta_sum * (scale / 2.0) if with_delta else None

    if lab is not None:
        closeness = closeness[lab]
        if betw is not None:
            betw = betw[lab]
    return DistancePassResult(n=n, k=k, exact=exact, betweenness=betw,
                              closeness=closeness,
                              sum_inv_dist=total_inv * scale, diameter=diam)


def _pick_sources(pg: ProjectedGraph, samples: Optional[int], seed: int) -> np.ndarray:
    if samples is None:
        return np.arange(pg.n, dtype=np.int64)
    if not 1 <= samples <= max(pg.n, 1):
        raise ValueError(f"sample count {samples} outside [1, {pg.n}]")
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(pg.n, size=samples, replace=False).astype(np.int64))


# ── public operations ───────────────────────────────────────────────────

def betweenness(pg: ProjectedGraph, samples: Optional[int] = None,
                seed: int = 0) -> np.ndarray:
    """Unnormalized betweenness: for node v the sum over unordered pairs
    {s,t} (both != v) of the fraction of shortest s-t paths through v.
    samples=None runs every source; otherwise k seeded sources are averaged
    and scaled by n/k."""
    if pg.n == 0:
        return np.zeros(0)
    sources = _pick_sources(pg, samples, seed)
    return _distance_pass(pg, sources, with_delta=True).betweenness


def harmonic_closeness(pg: ProjectedGraph) -> np.ndarray:
    """Per node i: (1/(n-1)) * sum over j != i of 1/d(i,j), zero for
    unreachable pairs; values lie in [0, 1]."""
    if pg.n < 2:
        raise ValueError("harmonic closeness needs at least two nodes")
    sources = np.arange(pg.n, dtype=np.int64)
    return _distance_pass(pg, sources, with_delta=False).closeness


def avg_path_length_harmonic(pg: ProjectedGraph) -> float:
    """Harmonic mean path length n(n-1) / sum over ordered pairs of 1/d;
    unreachable pairs contribute zero, an edgeless graph returns inf."""
    if pg.n < 2:
        raise ValueError("path length needs at least two nodes")
    sources = np.arange(pg.n, dtype=np.int64)
    return _distance_pass(pg, sources, with_delta=False).avg_path_length


def diameter(pg: ProjectedGraph) -> int:
    """Maximum finite shortest-path distance over all components."""
    if pg.m == 0:
        raise ValueError("diameter is undefined on an edgeless graph")
    sources = np.arange(pg.n, dtype=np.int64)
    return _distance_pass(pg, sources, with_delta=False).diameter


def density(pg: ProjectedGraph) -> float:
    if pg.n < 2:
        raise ValueError("density needs at least two nodes")
    return 2.0 * pg.m / (pg.n * (pg.n - 1))


def degree_stats(pg: ProjectedGraph):
    """(per-node degree, {stratum: {mean, max}}) with strata all/male/female."""
    deg = pg.degrees().astype(np.int64)
    return deg, _stratum_mean_max(deg.astype(np.float64), pg.genders)


def like_degree_stats(pg: ProjectedGraph):
    """(per-node same-gender neighbor count, {stratum: mean}). The per-node
    value is NaN for nodes with missing gender."""
    counts = _kernels.like_degree_counts(pg.indptr, pg.indices, pg.genders)
    like = counts.astype(np.float64)
    like[pg.genders == GENDER_CODE["Missing"]] = np.nan
    out = {}
    for stratum, mask in _strata(pg.genders).items():
        vals = like[mask]
        vals = vals[~np.isnan(vals)]
        out[stratum] = {"mean": float(vals.mean()) if vals.size else None}
    return like, out


def clustering(pg: ProjectedGraph):
    """(per-node local clustering, {stratum: mean over defined nodes}).
    c_v = triangles(v) / (deg(v) choose 2); NaN where deg < 2."""
    deg = pg.degrees().astype(np.float64)
    tri = _kernels.triangle_counts(pg.indptr, pg.indices).astype(np.float64)
    denom = deg * (deg - 1.0) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(denom > 0, tri / denom, np.nan)
    out = {}
    for stratum, mask in _strata(pg.genders).items():
        vals = c[mask]
        vals = vals[~np.isnan(vals)]
        out[stratum] = {"mean": float(vals.mean()) if vals.size else None,
                        "max": float(vals.max()) if vals.size else None}
    return c, out


def _strata(genders: np.ndarray) -> dict:
    return {
        "all": np.ones(genders.size, dtype=bool),
        "male": genders == GENDER_CODE[MALE],
        "female": genders == GENDER_CODE[FEMALE],
    }


def _stratum_mean_max(values: np.ndarray, genders: np.ndarray) -> dict:
    out = {}
    for stratum, mask in _strata(genders).items():
        vals = values[mask]
        out[stratum] = {
            "mean": float(vals.mean()) if vals.size else None,
            "max": float(vals.max()) if vals.size else None,
        }
    return out


# ── full report ─────────────────────────────────────────────────────────

@dataclass
class GraphMetrics:
    table1: dict
    table2: dict
    mode: str
    samples: Optional[int]
    subgraph_samples: Optional[int]
    seed: int
    per_node: dict = field(repr=False, default_factory=dict)
    labeling: Optional[ComponentLabeling] = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "table1": self.table1,
            "table2": self.table2,
            "mode": self.mode,
            "samples": self.samples,
            "subgraph_samples": self.subgraph_samples,
            "seed": self.seed,
        }


def _subgraph_cells(sub: ProjectedGraph, labeling: ComponentLabeling,
                    samples: Optional[int], seed: int) -> dict:
    cells = dict.fromkeys(TABLE1_ROWS)
    cells["edges"] = sub.m
    cells["components"] = labeling.n_components
    if sub.n:
        node_frac, edge_frac = fraction_in_largest(sub, labeling, None)
        cells["pct_nodes_in_largest_component"] = 100.0 * node_frac
        if not np.isnan(edge_frac):
            cells["pct_edges_in_largest_component"] = 100.0 * edge_frac
    if sub.n >= 2:
        cells["density"] = density(sub)
        k = None if samples is None else min(samples, sub.n)
        res = _distance_pass(sub, _pick_sources(sub, k, seed), with_delta=False)
        if sub.m > 0:
            cells["diameter"] = res.diameter
        apl = res.avg_path_length
        cells["avg_path_length"] = None if apl == float("inf") else apl
    return cells


def metrics_report(pg: ProjectedGraph, subgraphs: Optional[dict] = None,
                   labelings: Optional[dict] = None, *, mode: str = "exact",
                   samples: int = 10_000, subgraph_samples: int = 2_000,
                   seed: int = 0) -> GraphMetrics:
    """Every table cell in one structure: per-subgraph topology (table1,
    columns all/male/female as induced subgraphs) and full-graph per-stratum
    node metrics (table2). mode="sampled" estimates the distance metrics
    from seeded source samples; mode="exact" sweeps every source."""
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    sampled = mode == "sampled"
    if subgraphs is None:
        subgraphs = {MALE: gender_subgraph(pg, MALE),
                     FEMALE: gender_subgraph(pg, FEMALE)}
    if labelings is None:
        labelings = {name: components(g) for name, g in subgraphs.items()}
    labeling = components(pg)

    table1 = {
        "all": _subgraph_cells(pg, labeling,
                               samples if sampled else None, seed),
        "male": _subgraph_cells(subgraphs[MALE], labelings[MALE],
                                subgraph_samples if sampled else None, seed),
        "female": _subgraph_cells(subgraphs[FEMALE], labelings[FEMALE],
                                  subgraph_samples if sampled else None, seed),
    }

    # Full-graph per-node metrics, stratified.
    deg = pg.degrees().astype(np.float64)
    like, like_agg = like_degree_stats(pg)
    clus, _ = clustering(pg)
    if pg.n >= 2:
        k = min(samples, pg.n) if sampled else None
        res = _distance_pass(pg, _pick_sources(pg, k, seed), with_delta=True)
        betw = res.betweenness
        close = res.closeness
    else:
        betw = np.zeros(pg.n)
        close = np.full(pg.n, np.nan)

    in_largest = labeling.in_largest() if pg.n else np.zeros(0, dtype=bool)
    table2 = {}
    for stratum, mask in _strata(pg.genders).items():
        cells = dict.fromkeys(TABLE2_ROWS)
        n_s = int(mask.sum())
        if pg.n:
            cells["pct_of_all"] = 100.0 * n_s / pg.n
        if n_s:
            cells["pct_in_largest_component"] = \
                100.0 * int((mask & in_largest).sum()) / n_s
            cells["max_degree"] = int(deg[mask].max())
            cells["avg_degree"] = float(deg[mask].mean())
            lk = like[mask]
            lk = lk[~np.isnan(lk)]
            if stratum != "all" and lk.size:
                cells["avg_like_degree"] = float(lk.mean())
            cells["max_betweenness"] = float(betw[mask].max())
            cells["avg_betweenness"] = float(betw[mask].mean())
            cl = close[mask]
            cl = cl[~np.isnan(cl)]
            if cl.size:
                cells["max_closeness"] = float(cl.max())
                cells["avg_closeness"] = float(cl.mean())
            cs = clus[mask]
            cs = cs[~np.isnan(cs)]
            if cs.size:
                cells["max_clustering"] = float(cs.max())
                cells["avg_clustering"] = float(cs.mean())
            big = mask & in_largest
            if big.any():
                cells["avg_degree_largest_component"] = float(deg[big].mean())
                cells["avg_betweenness_largest_component"] = float(betw[big].mean())
                cb = close[big]
                cb = cb[~np.isnan(cb)]
                if cb.size:
                    cells["avg_closeness_largest_component"] = float(cb.mean())
                cg = clus[big]
                cg = cg[~np.isnan(cg)]
                if cg.size:
                    cells["avg_clustering_largest_component"] = float(cg.mean())
        table2[stratum] = cells

    per_node = {
        "director_id": pg.node_ids,
        "gender": pg.genders,
        "degree": deg.astype(np.int64),
        "like_degree": like,
        "betweenness": betw,
        "harmonic_closeness": close,
        "clustering": clus,
        "component_id": labeling.labels if pg.n else np.empty(0, dtype=np.int32),
    }
    return GraphMetrics(table1=table1, table2=table2, mode=mode,
                        samples=samples if sampled else None,
                        subgraph_samples=subgraph_samples if sampled else None,
                        seed=seed, per_node=per_node, labeling=labeling)


def _cell_float(x) -> str:
    x = float(x)
    return "" if np.isnan(x) else repr(x)


def write_per_node_csv(gm: GraphMetrics, path) -> None:
    """Per-node dump: director_id, gender, degree, like_degree, betweenness,
    harmonic_closeness, clustering, component_id (blank where undefined)."""
    pn = gm.per_node
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("director_id,gender,degree,like_degree,betweenness,"
                 "harmonic_closeness,clustering,component_id\n")
        for i in range(pn["director_id"].size):
            like = pn["like_degree"][i]
            fh.write(",".join([
                str(int(pn["director_id"][i])),
                CODE_GENDER[int(pn["gender"][i])],
                str(int(pn["degree"][i])),
                "" if np.isnan(like) else str(int(like)),
                repr(float(pn["betweenness"][i])),
                _cell_float(pn["harmonic_closeness"][i]),
                _cell_float(pn["clustering"][i]),
                str(int(pn["component_id"][i])),
            ]) + "\n")
