"""Labeled hypergraphs built from flow records by a (vertex fields, edge fields) pair."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

from .ingest import FLOW_FIELDS, ConfigError, FlowRecord

Label = tuple[str, ...]
NONE_LABEL = "none"


class Hyperedge(NamedTuple):
    label: Label
    members: tuple[int, ...]


class Node(NamedTuple):
    """A distinct vertex set together with every edge label that produced it."""

    members: tuple[int, ...]
    labels: tuple[Label, ...]


@dataclass(frozen=True)
class FieldPairConfig:
    vertex_fields: tuple[str, ...] = ("src_ip", "host")
    edge_fields: tuple[str, ...] = ("dest_ip", "dest_port")

    def __post_init__(self):
        object.__setattr__(self, "vertex_fields", tuple(self.vertex_fields))
        object.__setattr__(self, "edge_fields", tuple(self.edge_fields))
        if not self.vertex_fields or not self.edge_fields:
            raise ConfigError("vertex_fields and edge_fields must be nonempty")
        unknown = (set(self.vertex_fields) | set(self.edge_fields)) - set(FLOW_FIELDS)
        if unknown:
            raise ConfigError(f"unknown record fields: {sorted(unknown)}")
        if set(self.vertex_fields) & set(self.edge_fields):
            raise ConfigError("vertex_fields and edge_fields must be disjoint")


def label_of(record: FlowRecord, names: Sequence[str]) -> Label:
    out = []
    for name in names:
        value = getattr(record, name)
        out.append(NONE_LABEL if value is None else str(value))
    return tuple(out)


@dataclass(frozen=True)
class Hypergraph:
    """Vertices and hyperedges, both sorted by label; members are vertex indices."""

    vertices: tuple[Label, ...] = ()
    edges: tuple[Hyperedge, ...] = ()
    vertex_fields: tuple[str, ...] = ()
    edge_fields: tuple[str, ...] = ()

    def __post_init__(self):
        n = len(self.vertices)
        if len(set(self.vertices)) != n:
            raise ValueError("vertex labels must be unique")
        if len({e.label for e in self.edges}) != len(self.edges):
            raise ValueError("edge labels must be unique")
        used = set()
        for e in self.edges:
            if not e.members:
                raise ValueError(f"edge {e.label} is empty")
            if list(e.members) != sorted(set(e.members)) or e.members[-1] >= n or e.members[0] < 0:
                raise ValueError(f"edge {e.label} has invalid member indices {e.members}")
            used.update(e.members)
        if len(used) != n:
            raise ValueError("every vertex must belong to at least one edge")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_map(self) -> dict[Label, frozenset[Label]]:
        """Edge label -> set of member vertex labels (index-free view)."""
        return {e.label: frozenset(self.vertices[v] for v in e.members) for e in self.edges}

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "vertices": [list(v) for v in self.vertices],
            "edges": [{"label": list(e.label), "members": list(e.members)} for e in self.edges],
        }
        if self.vertex_fields:
            out["vertex_fields"] = list(self.vertex_fields)
            out["edge_fields"] = list(self.edge_fields)
        return out

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "Hypergraph":
        return cls(
            vertices=tuple(tuple(v) for v in data["vertices"]),
            edges=tuple(
                Hyperedge(tuple(e["label"]), tuple(sorted(e["members"]))) for e in data["edges"]
            ),
            vertex_fields=tuple(data.get("vertex_fields", ())),
            edge_fields=tuple(data.get("edge_fields", ())),
        )


def from_edge_map(
    edge_map: Mapping[Label, Iterable[Label]],
    vertex_fields: Sequence[str] = (),
    edge_fields: Sequence[str] = (),
) -> Hypergraph:
    """Canonical hypergraph from ``{edge label: member vertex labels}``."""
    members = {tuple(k): frozenset(tuple(v) for v in vs) for k, vs in edge_map.items()}
    vertices = tuple(sorted(set().union(*members.values()))) if members else ()
    index = {v: i for i, v in enumerate(vertices)}
    edges = tuple(
        Hyperedge(label, tuple(sorted(index[v] for v in members[label])))
        for label in sorted(members)
    )
    return Hypergraph(vertices, edges, tuple(vertex_fields), tuple(edge_fields))


def build_hypergraph(records: Iterable[FlowRecord], cfg: FieldPairConfig | None = None) -> Hypergraph:
    cfg = cfg or FieldPairConfig()
    incidence: dict[Label, set[Label]] = defaultdict(set)
    for rec in records:
        incidence[label_of(rec, cfg.edge_fields)].add(label_of(rec, cfg.vertex_fields))
    return from_edge_map(incidence, cfg.vertex_fields, cfg.edge_fields)


@dataclass(frozen=True)
class CollapsedHypergraph:
    vertices: tuple[Label, ...]
    nodes: tuple[Node, ...]
    vertex_fields: tuple[str, ...] = ()
    edge_fields: tuple[str, ...] = ()

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return sum(len(n.labels) for n in self.nodes)

    @property
    def max_multiplicity(self) -> int:
        return max((len(n.labels) for n in self.nodes), default=0)

    def expand(self) -> Hypergraph:
        return induced_subhypergraph(self, range(len(self.nodes)))


def collapse_edges(h: Hypergraph) -> CollapsedHypergraph:
    groups: dict[tuple[int, ...], list[Label]] = defaultdict(list)
    for e in h.edges:
        groups[e.members].append(e.label)
    nodes = tuple(Node(m, tuple(sorted(groups[m]))) for m in sorted(groups))
    return CollapsedHypergraph(h.vertices, nodes, h.vertex_fields, h.edge_fields)


def induced_subhypergraph(ch: CollapsedHypergraph, node_ids: Iterable[int]) -> Hypergraph:
    """Edge-induced subhypergraph on the chosen collapsed nodes, labels re-expanded."""
    edge_map: dict[Label, set[Label]] = {}
    for i in sorted(set(node_ids)):
        if not 0 <= i < len(ch.nodes):
            raise LookupError(f"no collapsed node {i} (have {len(ch.nodes)})")
        node = ch.nodes[i]
        members = {ch.vertices[v] for v in node.members}
        for label in node.labels:
            edge_map[label] = members
    return from_edge_map(edge_map, ch.vertex_fields, ch.edge_fields)


__all__ = [
    "CollapsedHypergraph",
    "FieldPairConfig",
    "Hyperedge",
    "Hypergraph",
    "Label",
    "Node",
    "build_hypergraph",
    "collapse_edges",
    "from_edge_map",
    "induced_subhypergraph",
    "label_of",
]
