"""Map homology representatives back to labeled sub-hypergraphs and tag them."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .homology import CycleRep
from .hypergraph import CollapsedHypergraph, Hypergraph, Label, from_edge_map, induced_subhypergraph
from .topology import ContainmentDag


class MotifError(ValueError):
    """Cycle and hypergraph do not belong together."""


@dataclass(frozen=True)
class MotifEdge:
    labels: tuple[Label, ...]
    members: tuple[Label, ...]


@dataclass(frozen=True)
class Motif:
    window_id: int | None
    mode: str
    dimension: int
    node_ids: tuple[int, ...]
    hyperedges: tuple[MotifEdge, ...]
    cycle_support: tuple[tuple[Any, ...], ...]
    vertex_fields: tuple[str, ...] = ()
    edge_fields: tuple[str, ...] = ()

    def hypergraph(self) -> Hypergraph:
        edge_map = {label: e.members for e in self.hyperedges for label in e.labels}
        return from_edge_map(edge_map, self.vertex_fields, self.edge_fields)

    @property
    def n_edge_labels(self) -> int:
        return sum(len(e.labels) for e in self.hyperedges)

    def to_json(self) -> dict[str, Any]:
        return {
            "window_id": self.window_id,
            "mode": self.mode,
            "dimension": self.dimension,
            "hyperedges": [
                {"labels": [list(l) for l in e.labels], "members": [list(m) for m in e.members]}
                for e in self.hyperedges
            ],
            "cycle_support": [[_jsonable(x) for x in s] for s in self.cycle_support],
        }


def _jsonable(x):
    if isinstance(x, tuple):
        return [_jsonable(y) for y in x]
    return x


def _motif(
    ch: CollapsedHypergraph,
    node_ids: Iterable[int],
    mode: str,
    cycle: CycleRep,
    support: tuple,
    window_id: int | None,
) -> Motif:
    ids = tuple(sorted(set(node_ids)))
    edges = tuple(
        MotifEdge(
            ch.nodes[i].labels,
            tuple(sorted(ch.vertices[v] for v in ch.nodes[i].members)),
        )
        for i in ids
    )
    edges = tuple(sorted(edges, key=lambda e: e.labels))
    return Motif(window_id, mode, cycle.dimension, ids, edges, support, ch.vertex_fields, ch.edge_fields)


def motif_from_nesting_cycle(
    ch: CollapsedHypergraph,
    cycle: CycleRep,
    *,
    window_id: int | None = None,
    expand: int = 0,
    dag: ContainmentDag | None = None,
) -> Motif:
    """Edge-induced motif on the collapsed nodes touched by a nesting-complex cycle.

    ``expand=1`` also pulls in every node adjacent to those in the
    containment graph (needs ``dag``).
    """
    if not cycle.support:
        raise MotifError("cycle has empty support")
    nodes = {i for s in cycle.support for i in s}
    bad = [i for i in nodes if not 0 <= i < len(ch.nodes)]
    if bad:
        raise MotifError(f"cycle references nodes {sorted(bad)} absent from the hypergraph")
    if expand:
        if dag is None:
            raise MotifError("expanding a motif needs the containment relation")
        for _ in range(expand):
            grown = set(nodes)
            for a, b in dag.arcs:
                if a in nodes or b in nodes:
                    grown.update((a, b))
            nodes = grown
    support = tuple(tuple(ch.nodes[i].labels for i in s) for s in cycle.support)
    return _motif(ch, nodes, "nesting", cycle, support, window_id)


def motif_from_closure_cycle(
    ch: CollapsedHypergraph,
    cycle: CycleRep,
    *,
    window_id: int | None = None,
) -> Motif:
    """Motif made of every collapsed node containing a whole support simplex."""
    if not cycle.support:
        raise MotifError("cycle has empty support")
    n = len(ch.vertices)
    if any(not 0 <= v < n for s in cycle.support for v in s):
        raise MotifError("cycle references vertices absent from the hypergraph")
    member_sets = [frozenset(node.members) for node in ch.nodes]
    chosen = [
        i for i, ms in enumerate(member_sets)
        if any(ms.issuperset(s) for s in cycle.support)
    ]
    if not chosen:
        raise MotifError("no hyperedge contains any simplex of the cycle")
    support = tuple(tuple(ch.vertices[v] for v in s) for s in cycle.support)
    return _motif(ch, chosen, "closure", cycle, support, window_id)


def motif_subhypergraph(ch: CollapsedHypergraph, motif: Motif) -> Hypergraph:
    return induced_subhypergraph(ch, motif.node_ids)


# -- watchlists -------------------------------------------------------------


@dataclass(frozen=True)
class WatchEntry:
    """One matcher plus the tag it emits.

    kind:
      ``edge_field``   an edge label field is in ``values`` (or matches ``pattern``)
      ``vertex_field`` same, on vertex labels
      ``edge_size``    member count compared to ``size`` with ``op``
    """

    tag: str
    kind: str
    field: str | None = None
    values: frozenset[str] = frozenset()
    pattern: str | None = None
    size: int | None = None
    op: str = "=="

    def __post_init__(self):
        if not self.tag:
            raise ValueError("watchlist tags must be nonempty")
        if self.kind not in ("edge_field", "vertex_field", "edge_size"):
            raise ValueError(f"unknown matcher kind {self.kind!r}")
        if self.kind == "edge_size":
            if self.size is None or self.op not in _OPS:
                raise ValueError("edge_size matcher needs size and op in ==, <=, >=, <, >")
        elif self.field is None:
            raise ValueError(f"{self.kind} matcher needs a field name")
        if self.pattern is not None:
            re.compile(self.pattern)
        object.__setattr__(self, "values", frozenset(str(v) for v in self.values))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WatchEntry":
        return cls(
            tag=data["tag"],
            kind=data["kind"],
            field=data.get("field"),
            values=frozenset(data.get("values", ())),
            pattern=data.get("pattern"),
            size=data.get("size"),
            op=data.get("op", "=="),
        )

    def match_value(self, value: str) -> bool:
        if value in self.values:
            return True
        return self.pattern is not None and re.fullmatch(self.pattern, value) is not None


_OPS = {
    "==": lambda a, b: a == b,
    "<=": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
}


@dataclass(frozen=True)
class Watchlist:
    entries: tuple[WatchEntry, ...] = ()

    @classmethod
    def from_json(cls, data: Sequence[Mapping[str, Any]] | Mapping[str, Any]) -> "Watchlist":
        if isinstance(data, Mapping):
            data = data.get("entries", [])
        return cls(tuple(WatchEntry.from_dict(d) for d in data))

    @classmethod
    def load(cls, path: str) -> "Watchlist":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    @property
    def tags(self) -> list[str]:
        seen: dict[str, None] = {}
        for e in self.entries:
            seen.setdefault(e.tag)
        return list(seen)


def default_watchlist() -> Watchlist:
    """Tags that need no site knowledge: single-vertex hyperedges and RDP."""
    return Watchlist(
        (
            WatchEntry("singleton", "edge_size", size=1),
            WatchEntry("RDP", "edge_field", field="dest_port", values=frozenset({"3389"})),
        )
    )


@dataclass(frozen=True)
class AnnotatedMotif:
    motif: Motif
    tags: frozenset[tuple[str, tuple]] = field(default_factory=frozenset)

    def tag_counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for tag, _ in self.tags:
            out[tag] = out.get(tag, 0) + 1
        return dict(sorted(out.items()))

    def to_json(self) -> dict[str, Any]:
        data = self.motif.to_json()
        data["tags"] = [
            {"tag": tag, "element": elem[0], "label": list(elem[1])}
            for tag, elem in sorted(self.tags)
        ]
        return data


def _field_value(label: Label, fields: Sequence[str], name: str) -> str | None:
    try:
        return label[list(fields).index(name)]
    except (ValueError, IndexError):
        return None


def annotate_motif(m: Motif, w: Watchlist) -> AnnotatedMotif:
    """Tag every (entry, motif element) match; elements are ``("edge", label)`` or ``("vertex", label)``."""
    tags: set[tuple[str, tuple]] = set()
    vertices = sorted({v for e in m.hyperedges for v in e.members})
    for entry in w.entries:
        if entry.kind == "vertex_field":
            for v in vertices:
                value = _field_value(v, m.vertex_fields, entry.field)
                if value is not None and entry.match_value(value):
                    tags.add((entry.tag, ("vertex", v)))
            continue
        for e in m.hyperedges:
            for label in e.labels:
                if entry.kind == "edge_size":
                    hit = _OPS[entry.op](len(e.members), entry.size)
                else:
                    value = _field_value(label, m.edge_fields, entry.field)
                    hit = value is not None and entry.match_value(value)
                if hit:
                    tags.add((entry.tag, ("edge", label)))
    return AnnotatedMotif(m, frozenset(tags))


__all__ = [
    "AnnotatedMotif",
    "Motif",
    "MotifEdge",
    "MotifError",
    "WatchEntry",
    "Watchlist",
    "annotate_motif",
    "default_watchlist",
    "motif_from_closure_cycle",
    "motif_from_nesting_cycle",
    "motif_subhypergraph",
]
