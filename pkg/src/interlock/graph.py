"""Bipartite director-company graph, one-mode projection, and components.

The projection is a simple undirected graph: two directors are adjacent iff
they share at least one board, so every board contributes a clique and
co-service on several boards still yields a single binary edge. Adjacency is
stored in compressed sorted (CSR) form; graphs are immutable once built.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .corpus import Corpus, FEMALE, MALE, MISSING, SchemaError

GENDER_CODE = {MALE: 0, FEMALE: 1, MISSING: 2}
CODE_GENDER = {v: k for k, v in GENDER_CODE.items()}

_MAGIC = b"ILKGRAPH"
_FORMAT_VERSION = 1


@dataclass
class BipartiteGraph:
    """Director-company incidence; one edge per seat."""
    n_directors: int
    n_companies: int
    board_indptr: np.ndarray   # company -> member directors (CSR)
    board_members: np.ndarray
    seat_indptr: np.ndarray    # director -> companies held (CSR)
    seat_companies: np.ndarray

    @property
    def n_edges(self) -> int:
        return int(self.board_members.size)

    def board(self, company: int) -> np.ndarray:
        return self.board_members[self.board_indptr[company]:self.board_indptr[company + 1]]

    def seats(self, director: int) -> np.ndarray:
        return self.seat_companies[self.seat_indptr[director]:self.seat_indptr[director + 1]]


@dataclass
class ProjectedGraph:
    """One-mode director graph with per-node attributes."""
    n: int
    indptr: np.ndarray    # int64, length n+1
    indices: np.ndarray   # int32, sorted within each row
    genders: np.ndarray   # int8 codes per GENDER_CODE
    ages: np.ndarray      # float64, NaN where missing
    countries: list       # str or None per node
    node_ids: np.ndarray  # director ids (identity on the full graph)

    @property
    def m(self) -> int:
        return int(self.indices.size // 2)

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def edge_array(self) -> tuple:
        """(u, v) arrays with u < v, one entry per undirected edge."""
        u = np.repeat(np.arange(self.n, dtype=np.int32), np.diff(self.indptr))
        v = self.indices
        keep = u < v
        return u[keep], v[keep]


@dataclass
class ComponentLabeling:
    labels: np.ndarray          # dense component id per node
    sizes: np.ndarray           # nodes per component
    largest_component_id: int

    @property
    def n_components(self) -> int:
        return int(self.sizes.size)

    def in_largest(self) -> np.ndarray:
        return self.labels == self.largest_component_id


def build_bipartite(corpus: Corpus) -> BipartiteGraph:
    """One incidence edge per (director, company) seat; companies are
    numbered in corpus order, directors by their dense ids."""
    n_c = len(corpus.companies)
    n_d = len(corpus.directors)
    board_sizes = np.fromiter((len(c.board) for c in corpus.companies),
                              dtype=np.int64, count=n_c)
    board_indptr = np.zeros(n_c + 1, dtype=np.int64)
    np.cumsum(board_sizes, out=board_indptr[1:])
    board_members = np.empty(board_indptr[-1], dtype=np.int32)
    pos = 0
    for c in corpus.companies:
        board_members[pos:pos + len(c.board)] = c.board
        pos += len(c.board)

    company_idx = {c.company_id: i for i, c in enumerate(corpus.companies)}
    seat_sizes = np.fromiter((len(d.seats) for d in corpus.directors),
                             dtype=np.int64, count=n_d)
    seat_indptr = np.zeros(n_d + 1, dtype=np.int64)
    np.cumsum(seat_sizes, out=seat_indptr[1:])
    seat_companies = np.empty(seat_indptr[-1], dtype=np.int32)
    pos = 0
    for d in corpus.directors:
        for cid in d.seats:
            seat_companies[pos] = company_idx[cid]
            pos += 1

    return BipartiteGraph(n_directors=n_d, n_companies=n_c,
                          board_indptr=board_indptr, board_members=board_members,
                          seat_indptr=seat_indptr, seat_companies=seat_companies)


def _attrs_from_corpus(corpus: Corpus):
    n = len(corpus.directors)
    genders = np.empty(n, dtype=np.int8)
    ages = np.full(n, np.nan, dtype=np.float64)
    countries = [None] * n
    for d in corpus.directors:
        genders[d.director_id] = GENDER_CODE[d.gender]
        if d.age is not None:
            ages[d.director_id] = d.age
        countries[d.director_id] = d.inferred_country
    return genders, ages, countries


def _csr_from_pairs(u: np.ndarray, v: np.ndarray, n: int) -> tuple:
    """Symmetric CSR from unique undirected pairs (u < v)."""
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    order = np.argsort(rows.astype(np.int64) * n + cols, kind="stable")
    rows = rows[order]
    cols = cols[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return indptr, np.ascontiguousarray(cols.astype(np.int32))


def project(bg: BipartiteGraph, corpus: Optional[Corpus] = None) -> ProjectedGraph:
    """One-mode projection: each board becomes a clique, overlapping cliques
    are unioned without multiplicity."""
    n = bg.n_directors
    keys = _kernels.board_pair_keys(bg.board_indptr, bg.board_members, n)
    keys = np.unique(keys)
    u = (keys // n).astype(np.int32)
    v = (keys % n).astype(np.int32)
    indptr, indices = _csr_from_pairs(u, v, n)

    if corpus is not None:
        genders, ages, countries = _attrs_from_corpus(corpus)
    else:
        genders = np.full(n, GENDER_CODE[MISSING], dtype=np.int8)
        ages = np.full(n, np.nan, dtype=np.float64)
        countries = [None] * n
    return ProjectedGraph(n=n, indptr=indptr, indices=indices,
                          genders=genders, ages=ages, countries=countries,
                          node_ids=np.arange(n, dtype=np.int64))


def graph_from_edges(n: int, edges, genders=None, ages=None, countries=None) -> ProjectedGraph:
    """Build a projection-shaped graph directly from an undirected edge list
    (self-loops rejected, duplicates collapsed)."""
    if len(edges):
        arr = np.asarray(edges, dtype=np.int64)
        u = np.minimum(arr[:, 0], arr[:, 1])
        v = np.maximum(arr[:, 0], arr[:, 1])
        if np.any(u == v):
            raise ValueError("self-loops are not allowed")
        if np.any((u < 0) | (v >= n)):
            raise ValueError("edge endpoint out of range")
        keys = np.unique(u * n + v)
        u = (keys // n).astype(np.int32)
        v = (keys % n).astype(np.int32)
    else:
        u = np.empty(0, dtype=np.int32)
        v = np.empty(0, dtype=np.int32)
    indptr, indices = _csr_from_pairs(u, v, n)
    if genders is None:
        genders = np.full(n, GENDER_CODE[MISSING], dtype=np.int8)
    else:
        genders = np.asarray(genders, dtype=np.int8)
    if ages is None:
        ages = np.full(n, np.nan, dtype=np.float64)
    else:
        ages = np.asarray(ages, dtype=np.float64)
    if countries is None:
        countries = [None] * n
    return ProjectedGraph(n=n, indptr=indptr, indices=indices,
                          genders=genders, ages=ages, countries=list(countries),
                          node_ids=np.arange(n, dtype=np.int64))


def gender_subgraph(pg: ProjectedGraph, gender: str) -> ProjectedGraph:
    """Induced subgraph on the nodes of one gender."""
    if gender not in (MALE, FEMALE):
        raise ValueError(f"gender must be {MALE!r} or {FEMALE!r}, got {gender!r}")
    code = GENDER_CODE[gender]
    keep = pg.genders == code
    return induced_subgraph(pg, keep)


def induced_subgraph(pg: ProjectedGraph, keep: np.ndarray) -> ProjectedGraph:
    nodes = np.flatnonzero(keep)
    n = int(nodes.size)
    remap = np.full(pg.n, -1, dtype=np.int64)
    remap[nodes] = np.arange(n)
    u, v = pg.edge_array()
    mask = keep[u] & keep[v]
    u = remap[u[mask]].astype(np.int32)
    v = remap[v[mask]].astype(np.int32)
    indptr, indices = _csr_from_pairs(u, v, n)
    return ProjectedGraph(n=n, indptr=indptr, indices=indices,
                          genders=pg.genders[nodes],
                          ages=pg.ages[nodes],
                          countries=[pg.countries[i] for i in nodes],
                          node_ids=pg.node_ids[nodes])


def components(pg: ProjectedGraph) -> ComponentLabeling:
    """Connected components by undirected reachability. Labels are dense,
    ordered by each component's smallest node index; the largest component
    wins ties by the smaller label."""
    if pg.n == 0:
        return ComponentLabeling(labels=np.empty(0, dtype=np.int32),
                                 sizes=np.empty(0, dtype=np.int64),
                                 largest_component_id=-1)
    labels = _kernels.connected_components_labels(pg.indptr, pg.indices)
    sizes = np.bincount(labels).astype(np.int64)
    largest = int(np.argmax(sizes))  # argmax returns the first maximum
    return ComponentLabeling(labels=labels, sizes=sizes,
                             largest_component_id=largest)


def fraction_in_largest(pg: ProjectedGraph, labeling: ComponentLabeling,
                        gender: Optional[str] = None) -> tuple:
    """(node_fraction, edge_fraction) of the gender-filtered graph inside the
    largest component. With gender=None all nodes/edges count; fractions are
    NaN when the filtered set is empty."""
    if gender is None:
        node_mask = np.ones(pg.n, dtype=bool)
    else:
        node_mask = pg.genders == GENDER_CODE[gender]
    in_largest = labeling.in_largest()

    n_nodes = int(node_mask.sum())
    node_frac = float(np.count_nonzero(node_mask & in_largest) / n_nodes) if n_nodes else float("nan")

    u, v = pg.edge_array()
    emask = node_mask[u] & node_mask[v]
    n_edges = int(np.count_nonzero(emask))
    if n_edges:
        edge_frac = float(np.count_nonzero(emask & in_largest[u]) / n_edges)
    else:
        edge_frac = float("nan")
    return node_frac, edge_frac


# ── binary graph format ─────────────────────────────────────────────────
# graph.bin: magic, version, n, 2m, indptr int64[n+1], indices int32[2m]
# graph.bin.json sidecar: node/edge counts plus the attribute table.

def save_graph(pg: ProjectedGraph, path) -> None:
    path = str(path)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQ", _FORMAT_VERSION, pg.n, pg.indices.size))
        fh.write(pg.indptr.astype("<i8").tobytes())
        fh.write(pg.indices.astype("<i4").tobytes())
    sidecar = {
        "n": pg.n,
        "edges": pg.m,
        "attributes": {
            "director_id": [int(x) for x in pg.node_ids],
            "gender": [CODE_GENDER[int(c)] for c in pg.genders],
            "age": [None if np.isnan(a) else int(a) for a in pg.ages],
            "country": list(pg.countries),
        },
    }
    with open(path + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, separators=(",", ":"))


def load_graph(path) -> ProjectedGraph:
    path = str(path)
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise SchemaError(f"{path}: not a graph file")
        version, n, nnz = struct.unpack("<IQQ", fh.read(20))
        if version != _FORMAT_VERSION:
            raise SchemaError(f"{path}: unsupported format version {version}")
        indptr = np.frombuffer(fh.read(8 * (n + 1)), dtype="<i8").astype(np.int64)
        indices = np.frombuffer(fh.read(4 * nnz), dtype="<i4").astype(np.int32)
    if indptr.size != n + 1 or indices.size != nnz:
        raise SchemaError(f"{path}: truncated graph file")
    with open(path + ".json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    attrs = sidecar["attributes"]
    genders = np.array([GENDER_CODE[g] for g in attrs["gender"]], dtype=np.int8)
    ages = np.array([np.nan if a is None else float(a) for a in attrs["age"]],
                    dtype=np.float64)
    if genders.size != n:
        raise SchemaError(f"{path}.json: attribute table length mismatch")
    return ProjectedGraph(n=int(n), indptr=indptr, indices=indices,
                          genders=genders, ages=ages,
                          countries=list(attrs["country"]),
                          node_ids=np.asarray(attrs["director_id"], dtype=np.int64))


def export_edgelist(pg: ProjectedGraph, path) -> None:
    """Plain two-column whitespace-separated edge list (u < v)."""
    u, v = pg.edge_array()
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in zip(u.tolist(), v.tolist()):
            fh.write(f"{a} {b}\n")
