from __future__ import annotations

import io
import json
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperholes.hypergraph import (
    FieldPairConfig,
    Hyperedge,
    Hypergraph,
    build_hypergraph,
    collapse_edges,
    from_edge_map,
    induced_subhypergraph,
)
from hyperholes.ingest import ConfigError, FlowRecord, parse_flow_csv

from test_ingest import EXCERPT, EXCERPT_HEADER


def flow(host, dest, port=443, src=None, t=0.0):
    return FlowRecord(timestamp=t, host=host, dest_ip=dest, dest_port=port, src_ip=src)


incidence = st.lists(
    st.tuples(st.sampled_from("abcdef"), st.sampled_from(["192.0.2.1", "192.0.2.2", "192.0.2.3"]),
              st.sampled_from([53, 443, None])),
    max_size=30,
)


def records_of(rows):
    return [flow(h, d, p) for h, d, p in rows]


class TestBuild:
    def test_excerpt(self):
        records = list(parse_flow_csv(io.StringIO(EXCERPT_HEADER + EXCERPT), default_year=2019))
        h = build_hypergraph(records)
        # two rows share (142.20.59.207, SysClient0974)
        assert h.n_vertices == 3 and h.n_edges == 4
        assert all(len(e.members) == 1 for e in h.edges)
        assert len({e.label for e in h.edges}) == 4

    def test_shared_edge(self):
        h = build_hypergraph([flow("a", "192.0.2.1"), flow("b", "192.0.2.1")])
        assert h.n_edges == 1 and h.edges[0].members == (0, 1)

    def test_empty(self):
        h = build_hypergraph([])
        assert h.n_vertices == 0 and h.n_edges == 0

    def test_duplicates_ignored(self):
        rows = [flow("a", "192.0.2.1"), flow("b", "192.0.2.2")]
        assert build_hypergraph(rows * 3) == build_hypergraph(rows)

    def test_none_sentinel(self):
        h = build_hypergraph([flow("a", "192.0.2.1", None)])
        assert h.edges[0].label == ("192.0.2.1", "none")
        assert h.vertices[0] == ("none", "a")

    def test_labels_sorted(self):
        h = build_hypergraph([flow("b", "192.0.2.9"), flow("a", "192.0.2.1")])
        assert list(h.vertices) == sorted(h.vertices)
        assert [e.label for e in h.edges] == sorted(e.label for e in h.edges)

    def test_other_field_pair(self):
        cfg = FieldPairConfig(("host",), ("dest_port",))
        h = build_hypergraph([flow("a", "192.0.2.1", 53), flow("b", "192.0.2.2", 53)], cfg)
        assert h.vertices == (("a",), ("b",)) and h.edges[0].label == ("53",)

    @settings(max_examples=100, deadline=None)
    @given(incidence, st.data())
    def test_monotone(self, rows, data):
        subset = data.draw(st.lists(st.sampled_from(rows), unique_by=id) if rows else st.just([]))
        small = build_hypergraph(records_of(subset)).edge_map()
        large = build_hypergraph(records_of(rows)).edge_map()
        for label, members in small.items():
            assert members <= large[label]

    @settings(max_examples=100, deadline=None)
    @given(incidence)
    def test_relabeling_invariance(self, rows):
        rename = {h: f"x{ord(h) * 7 % 13}" for h in "abcdef"}
        a = build_hypergraph(records_of(rows)).edge_map()
        b = build_hypergraph(records_of([(rename[h], d, p) for h, d, p in rows])).edge_map()
        mapped = {k: frozenset((s, rename[h]) for s, h in v) for k, v in a.items()}
        assert mapped == b


class TestValidation:
    def test_field_pair(self):
        with pytest.raises(ConfigError):
            FieldPairConfig((), ("dest_ip",))
        with pytest.raises(ConfigError):
            FieldPairConfig(("host",), ("host",))
        with pytest.raises(ConfigError):
            FieldPairConfig(("host",), ("nope",))

    @pytest.mark.parametrize(
        "vertices, edges",
        [
            ((("a",), ("a",)), (Hyperedge(("e",), (0, 1)),)),
            ((("a",),), (Hyperedge(("e",), ()),)),
            ((("a",),), (Hyperedge(("e",), (1,)),)),
            ((("a",), ("b",)), (Hyperedge(("e",), (0,)),)),
            ((("a",),), (Hyperedge(("e",), (0,)), Hyperedge(("e",), (0,)))),
        ],
    )
    def test_invariants(self, vertices, edges):
        with pytest.raises(ValueError):
            Hypergraph(vertices, edges)

    def test_json_round_trip(self):
        h = build_hypergraph([flow("a", "192.0.2.1"), flow("b", "192.0.2.1"), flow("b", "192.0.2.2")])
        data = json.loads(json.dumps(h.to_json()))
        assert Hypergraph.from_json(data) == h


class TestCollapse:
    def test_equal_sets_merge(self):
        h = from_edge_map({("X",): {("1",), ("2",)}, ("Y",): {("1",), ("2",)}})
        ch = collapse_edges(h)
        assert ch.n_nodes == 1 and ch.nodes[0].labels == (("X",), ("Y",))
        assert ch.max_multiplicity == 2

    def test_distinct_sets_untouched(self):
        h = from_edge_map({("X",): {("1",)}, ("Y",): {("2",)}})
        assert collapse_edges(h).n_nodes == 2

    def test_five_edges_three_sets(self):
        sets = [{"1"}, {"1", "2"}, {"1"}, {"2", "3"}, {"1", "2"}]
        h = from_edge_map({(f"e{i}",): {(v,) for v in s} for i, s in enumerate(sets)})
        ch = collapse_edges(h)
        assert ch.n_nodes == len({frozenset(s) for s in sets}) == 3
        assert Counter(l for n in ch.nodes for l in n.labels) == Counter((f"e{i}",) for i in range(5))

    @settings(max_examples=100, deadline=None)
    @given(incidence)
    def test_expand_reproduces_original(self, rows):
        h = build_hypergraph(records_of(rows))
        ch = collapse_edges(h)
        assert ch.expand().edge_map() == h.edge_map()
        assert len({n.members for n in ch.nodes}) == ch.n_nodes
        assert [n.members for n in ch.nodes] == sorted(n.members for n in ch.nodes)


class TestInduced:
    def setup_method(self):
        self.h = from_edge_map(
            {("A",): {("1",), ("2",)}, ("B",): {("3",)}, ("C",): {("4",), ("5",)}, ("D",): {("3",)}}
        )
        self.ch = collapse_edges(self.h)

    def test_all_nodes(self):
        assert induced_subhypergraph(self.ch, range(self.ch.n_nodes)) == self.h

    def test_none(self):
        assert induced_subhypergraph(self.ch, []).n_edges == 0

    def test_disjoint_pair(self):
        ids = [i for i, n in enumerate(self.ch.nodes) if len(n.members) == 2]
        sub = induced_subhypergraph(self.ch, ids)
        assert sub.n_edges == 2 and sub.n_vertices == 4

    def test_labels_re_expanded(self):
        ids = [i for i, n in enumerate(self.ch.nodes) if len(n.labels) == 2]
        sub = induced_subhypergraph(self.ch, ids)
        assert {e.label for e in sub.edges} == {("B",), ("D",)}

    def test_unknown_node(self):
        with pytest.raises(LookupError):
            induced_subhypergraph(self.ch, [99])
