"""Topological translations of a collapsed hypergraph.

Two complexes are produced:

* the *closure*: every hyperedge of size k becomes a solid (k-1)-simplex,
  vertices are hypergraph vertices;
* the *nesting complex*: clique complex of the hyperedge containment graph,
  vertices are collapsed hyperedges.  Pairwise comparable sets form a
  chain, so its simplices are exactly the containment chains.

Simplices of dimension d are stored as a sorted array of integer keys,
``key = sum(v_i * radix**(d - i))`` over the increasing vertex tuple, which
makes key order equal to lexicographic tuple order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Any, Iterable, Sequence

import networkx as nx
import numpy as np

from .hypergraph import CollapsedHypergraph

DEFAULT_SUBSET_BUDGET = 10**8
_INT64_MAX = np.iinfo(np.int64).max
_ROW_CACHE_LIMIT = 200_000


class BudgetError(RuntimeError):
    """Closure enumeration would exceed the subset budget."""

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


def _key_dtype(radix: int, dim: int):
    return np.int64 if radix ** (dim + 1) <= _INT64_MAX else object


def encode(rows: np.ndarray | Sequence[Sequence[int]], radix: int, dim: int) -> np.ndarray:
    """Integer keys for an (n, dim+1) array of increasing vertex tuples."""
    dtype = _key_dtype(radix, dim)
    arr = np.asarray(rows, dtype=np.int64).reshape(-1, dim + 1)
    keys = np.zeros(arr.shape[0], dtype=dtype)
    for i in range(dim + 1):
        keys = keys * radix + arr[:, i].astype(dtype)
    return keys


def decode(keys: np.ndarray, radix: int, dim: int) -> np.ndarray:
    out = np.empty((len(keys), dim + 1), dtype=np.int64)
    rest = keys.copy()
    for i in range(dim, -1, -1):
        out[:, i] = rest % radix
        rest = rest // radix
    return out


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    mode: str
    dim_cap: int
    radix: int
    keys: tuple[np.ndarray, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_simplices(
        cls,
        mode: str,
        dim_cap: int,
        simplices: Iterable[Sequence[int]],
        radix: int | None = None,
        *,
        close: bool = True,
    ) -> "SimplicialComplex":
        """Build from explicit simplices; ``close`` adds every face up to ``dim_cap``."""
        levels: list[set[tuple[int, ...]]] = [set() for _ in range(dim_cap + 1)]
        for s in simplices:
            s = tuple(sorted(set(s)))
            if close:
                for k in range(1, min(len(s), dim_cap + 1) + 1):
                    levels[k - 1].update(combinations(s, k))
            elif len(s) <= dim_cap + 1:
                levels[len(s) - 1].add(s)
        if radix is None:
            radix = 1 + max((s[0] for s in levels[0]), default=0)
        keys = tuple(
            np.unique(encode(sorted(level), radix, d)) if level else np.zeros(0, _key_dtype(radix, d))
            for d, level in enumerate(levels)
        )
        return cls(mode, dim_cap, radix, keys)

    @property
    def top_dim(self) -> int:
        """Highest dimension that actually holds simplices (-1 if empty)."""
        for d in range(self.dim_cap, -1, -1):
            if len(self.keys[d]):
                return d
        return -1

    def count(self, d: int) -> int:
        return len(self.keys[d]) if 0 <= d <= self.dim_cap else 0

    @property
    def cell_counts(self) -> list[int]:
        return [len(k) for k in self.keys]

    def rows(self, d: int) -> np.ndarray:
        cached = self._cache.get(("rows", d))
        if cached is not None:
            return cached
        rows = decode(self.keys[d], self.radix, d)
        if len(rows) <= _ROW_CACHE_LIMIT:
            self._cache[("rows", d)] = rows
        return rows

    def simplices(self, d: int) -> list[tuple[int, ...]]:
        if not 0 <= d <= self.dim_cap:
            return []
        return [tuple(r) for r in self.rows(d).tolist()]

    def simplex(self, d: int, i: int) -> tuple[int, ...]:
        return tuple(int(x) for x in decode(self.keys[d][i : i + 1], self.radix, d)[0])

    def index(self, d: int, simplices: Sequence[Sequence[int]]) -> np.ndarray:
        """Positions of the given d-simplices in canonical order (KeyError if absent)."""
        wanted = encode(simplices, self.radix, d)
        pos = np.searchsorted(self.keys[d], wanted)
        ok = pos < len(self.keys[d])
        ok[ok] = self.keys[d][pos[ok]] == wanted[ok]
        if not ok.all():
            raise KeyError(f"simplices not in complex: {np.asarray(simplices)[~ok].tolist()[:5]}")
        return pos

    def is_downward_closed(self) -> bool:
        for d in range(1, self.dim_cap + 1):
            rows = self.rows(d)
            for drop in range(d + 1):
                faces = np.delete(rows, drop, axis=1)
                try:
                    self.index(d - 1, faces)
                except KeyError:
                    return False
        return True

    def to_json(self) -> dict[str, Any]:
        return {
            "mode": self.mode,
            "dim_cap": self.dim_cap,
            "simplices": {str(d): [list(s) for s in self.simplices(d)] for d in range(self.dim_cap + 1)},
        }


# -- containment ------------------------------------------------------------


@dataclass(frozen=True)
class ContainmentDag:
    """Proper-subset order on collapsed nodes (transitively closed).

    ``supersets[a]`` lists every b with members(a) a proper subset of members(b).
    """

    n_nodes: int
    supersets: tuple[tuple[int, ...], ...]
    sizes: tuple[int, ...]

    @cached_property
    def arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple((a, b) for a in range(self.n_nodes) for b in self.supersets[a])

    def has_arc(self, a: int, b: int) -> bool:
        return b in self.supersets[a]


def _bitmask(members: Iterable[int]) -> int:
    mask = 0
    for v in members:
        mask |= 1 << v
    return mask


def containment_relation(ch: CollapsedHypergraph) -> ContainmentDag:
    n = len(ch.nodes)
    masks = [_bitmask(node.members) for node in ch.nodes]
    sizes = [len(node.members) for node in ch.nodes]
    order = sorted(range(n), key=lambda i: sizes[i])
    sup: list[list[int]] = [[] for _ in range(n)]
    for pos, a in enumerate(order):
        ma, sa = masks[a], sizes[a]
        for b in order[pos + 1 :]:
            if sizes[b] > sa and masks[b] & ma == ma:
                sup[a].append(b)
    return ContainmentDag(n, tuple(tuple(sorted(s)) for s in sup), tuple(sizes))


def hcg(dag: ContainmentDag) -> nx.Graph:
    """Hyperedge containment graph: nodes joined when one contains the other."""
    g = nx.Graph()
    g.add_nodes_from(range(dag.n_nodes))
    g.add_edges_from(dag.arcs)
    return g


def enumerate_chains(dag: ContainmentDag, max_len: int) -> list[tuple[int, ...]]:
    """All containment chains of length 1..max_len, smallest set first.

    Sorted lexicographically by the node-id tuple.
    """
    if max_len < 1:
        raise ValueError("max_len must be at least 1")
    out: list[tuple[int, ...]] = []
    stack = [(a,) for a in range(dag.n_nodes)]
    while stack:
        chain = stack.pop()
        out.append(chain)
        if len(chain) < max_len:
            stack.extend(chain + (b,) for b in dag.supersets[chain[-1]])
    out.sort()
    return out


def nesting_complex(
    ch: CollapsedHypergraph,
    dim_cap: int = 2,
    dag: ContainmentDag | None = None,
) -> SimplicialComplex:
    if dim_cap < 1:
        raise ValueError("dim_cap must be at least 1")
    dag = dag or containment_relation(ch)
    radix = max(dag.n_nodes, 1)
    levels: list[list[tuple[int, ...]]] = [[] for _ in range(dim_cap + 1)]
    for chain in enumerate_chains(dag, dim_cap + 1) if dag.n_nodes else []:
        levels[len(chain) - 1].append(tuple(sorted(chain)))
    keys = tuple(
        np.unique(encode(level, radix, d)) if level else np.zeros(0, _key_dtype(radix, d))
        for d, level in enumerate(levels)
    )
    return SimplicialComplex("nesting", dim_cap, radix, keys)


def _subset_keys(members: np.ndarray, k: int, radix: int, dtype) -> np.ndarray:
    """Keys of all k-subsets of a sorted member array, in lexicographic order."""
    s = len(members)
    keys = members.astype(dtype)
    last = np.arange(s)
    for _ in range(k - 1):
        counts = s - 1 - last
        total = int(counts.sum())
        if total == 0:
            return np.zeros(0, dtype=dtype)
        starts = np.cumsum(counts) - counts
        within = np.arange(total) - np.repeat(starts, counts)
        last = np.repeat(last, counts) + 1 + within
        keys = np.repeat(keys, counts) * radix + members[last].astype(dtype)
    return keys


def closure_subset_count(ch: CollapsedHypergraph, dim_cap: int) -> int:
    return sum(math.comb(len(n.members), dim_cap + 1) for n in ch.nodes)


def closure_complex(
    ch: CollapsedHypergraph,
    dim_cap: int = 2,
    budget: int = DEFAULT_SUBSET_BUDGET,
) -> SimplicialComplex:
    if dim_cap < 1:
        raise ValueError("dim_cap must be at least 1")
    running = 0
    for i, node in enumerate(ch.nodes):
        running += math.comb(len(node.members), dim_cap + 1)
        if running > budget:
            raise BudgetError(
                f"closure needs more than {budget} subsets of size {dim_cap + 1}; "
                f"budget crossed at node {i} ({len(node.members)} members, "
                f"labels {list(node.labels[:3])})",
                node=i,
            )
    radix = max(len(ch.vertices), 1)
    keys = []
    for d in range(dim_cap + 1):
        dtype = _key_dtype(radix, d)
        parts = [
            _subset_keys(np.asarray(node.members, dtype=np.int64), d + 1, radix, dtype)
            for node in ch.nodes
            if len(node.members) > d
        ]
        keys.append(np.unique(np.concatenate(parts)) if parts else np.zeros(0, dtype))
    return SimplicialComplex("closure", dim_cap, radix, tuple(keys))


__all__ = [
    "BudgetError",
    "ContainmentDag",
    "DEFAULT_SUBSET_BUDGET",
    "SimplicialComplex",
    "closure_complex",
    "closure_subset_count",
    "containment_relation",
    "enumerate_chains",
    "hcg",
    "nesting_complex",
]
