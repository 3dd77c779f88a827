"""Shared builders for tests: hypergraphs from plain sets, named fixtures."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from hyperholes.hypergraph import CollapsedHypergraph, collapse_edges, from_edge_map
from hyperholes.ingest import FlowRecord

# Two singletons inside the intersection of two triples.
SQUARE = [{1}, {2}, {1, 2, 3}, {1, 2, 4}]
# Three large edges pairwise meeting in one vertex, plus those three singletons.
HEXAGON = [{"a", "b", "x"}, {"b", "c", "y"}, {"a", "c", "z"}, {"b"}, {"c"}, {"a"}]
NEST = [{1}, {1, 2}, {1, 2, 3}]
HOLLOW_TRIANGLE = [{1, 2}, {2, 3}, {1, 3}]
FILLED_TRIANGLE = HOLLOW_TRIANGLE + [{1, 2, 3}]
TETRA_BOUNDARY = [{1, 2, 3}, {1, 2, 4}, {1, 3, 4}, {2, 3, 4}]


def edge_map(edge_sets: Iterable[Iterable]) -> dict:
    """``{("e0",): {("1",), ...}, ...}``; empty sets are skipped."""
    out = {}
    for i, s in enumerate(edge_sets):
        s = set(s)
        if s:
            out[(f"e{i}",)] = {(str(v),) for v in s}
    return out


def collapsed(edge_sets: Iterable[Iterable]) -> CollapsedHypergraph:
    return collapse_edges(from_edge_map(edge_map(edge_sets), ("host",), ("dest_ip",)))


def member_sets(ch: CollapsedHypergraph) -> list[frozenset]:
    return [frozenset(n.members) for n in ch.nodes]


def random_edge_sets(rng: np.random.Generator, max_vertices=8, max_edges=8, p=0.4) -> list[set[int]]:
    n_v = int(rng.integers(1, max_vertices + 1))
    n_e = int(rng.integers(1, max_edges + 1))
    incidence = rng.random((n_e, n_v)) < p
    return [set(np.nonzero(row)[0].tolist()) for row in incidence if row.any()]


def records_from_sets(edge_sets: Sequence[Iterable[int]], t: float = 0.0) -> list[FlowRecord]:
    """One flow per (vertex, edge) incidence; edge i is 10.9.x.y port 443."""
    out = []
    for i, s in enumerate(edge_sets):
        for v in sorted(s):
            out.append(
                FlowRecord(
                    timestamp=t,
                    host=f"H{v:04d}",
                    dest_ip=f"10.9.{i // 250}.{i % 250 + 1}",
                    src_ip=f"10.0.{v // 250}.{v % 250 + 1}",
                    dest_port=443,
                )
            )
    return out
