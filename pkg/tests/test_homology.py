from __future__ import annotations

import itertools
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from helpers import SQUARE, FILLED_TRIANGLE, HOLLOW_TRIANGLE, NEST, TETRA_BOUNDARY, collapsed
from hyperholes.homology import (
    DimensionError,
    Gf2Matrix,
    betti_numbers,
    boundary_matrix,
    boundary_rank,
    chain_boundary,
    compute_homology,
    euler_characteristic,
    homology_basis,
    rank_gf2,
)
from hyperholes.topology import SimplicialComplex, closure_complex, nesting_complex

edge_sets = st.lists(st.sets(st.integers(0, 7), min_size=1), min_size=1, max_size=8)


def graph_complex(edges, dim_cap=2):
    """Clique-free complex from a plain graph (no triangles are added)."""
    return SimplicialComplex.from_simplices("closure", dim_cap, [tuple(e) for e in edges])


def in_span(vectors: list[set], target: set) -> bool:
    pivots: dict[int, set] = {}
    for v in vectors:
        v = set(v)
        while v and max(v) in pivots:
            v ^= pivots[max(v)]
        if v:
            pivots[max(v)] = v
    t = set(target)
    while t and max(t) in pivots:
        t ^= pivots[max(t)]
    return not t


class TestBoundaryMatrix:
    def test_hollow_triangle(self):
        m = boundary_matrix(closure_complex(collapsed(HOLLOW_TRIANGLE), 2), 1)
        assert (m.n_rows, m.n_cols) == (3, 3)
        assert m.to_dense().sum(axis=0).tolist() == [2, 2, 2]

    def test_filled_triangle(self):
        m = boundary_matrix(closure_complex(collapsed(FILLED_TRIANGLE), 2), 2)
        assert m.to_dense().tolist() == [[1], [1], [1]]

    def test_no_columns(self):
        m = boundary_matrix(closure_complex(collapsed(HOLLOW_TRIANGLE), 2), 2)
        assert (m.n_rows, m.n_cols) == (3, 0)

    def test_dimension_error(self):
        k = closure_complex(collapsed(HOLLOW_TRIANGLE), 2)
        with pytest.raises(DimensionError):
            boundary_matrix(k, 3)
        with pytest.raises(DimensionError):
            boundary_matrix(k, 0)

    @settings(max_examples=100, deadline=None)
    @given(edge_sets)
    def test_matches_oracle_and_squares_to_zero(self, sets):
        ch = collapsed(sets)
        for k in (closure_complex(ch, 3), nesting_complex(ch, 3)):
            cells = [k.simplices(d) for d in range(4)]
            for d in range(1, 4):
                assert np.array_equal(boundary_matrix(k, d).to_dense(), oracle.boundary(cells, d))
                assert all(len(boundary_matrix(k, d).column(j)) == d + 1 for j in range(k.count(d)))
            for d in range(2, 4):
                assert boundary_matrix(k, d - 1).compose(boundary_matrix(k, d)).is_zero()


class TestRank:
    def test_identity_and_zero(self):
        assert rank_gf2(Gf2Matrix.from_dense(np.eye(3, dtype=int))) == 3
        assert rank_gf2(Gf2Matrix.from_dense(np.zeros((3, 4), dtype=int))) == 0

    def test_hollow_triangle(self):
        assert rank_gf2(boundary_matrix(closure_complex(collapsed(HOLLOW_TRIANGLE), 2), 1)) == 2

    def test_does_not_mutate(self):
        m = Gf2Matrix.from_dense([[1, 1], [1, 1]])
        before = m.indices.copy()
        assert rank_gf2(m) == 1
        assert np.array_equal(m.indices, before)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 9), st.integers(1, 9), st.data())
    def test_matches_dense(self, rows, cols, data):
        bits = data.draw(st.lists(st.booleans(), min_size=rows * cols, max_size=rows * cols))
        dense = np.array(bits, dtype=np.uint8).reshape(rows, cols)
        assert rank_gf2(Gf2Matrix.from_dense(dense)) == oracle.dense_rank(dense)

    def test_validation(self):
        with pytest.raises(ValueError):
            Gf2Matrix(2, 1, np.array([0, 1]), np.array([5]))
        with pytest.raises(ValueError):
            Gf2Matrix(2, 2, np.array([0, 1]), np.array([0]))


class TestBetti:
    def test_hollow_triangle(self):
        assert betti_numbers(closure_complex(collapsed(HOLLOW_TRIANGLE), 2), 1) == [1, 1]

    def test_nest(self):
        assert betti_numbers(nesting_complex(collapsed(NEST), 2), 1) == [1, 0]

    def test_tetrahedron_boundary(self):
        k = closure_complex(collapsed(TETRA_BOUNDARY), 3)
        assert [boundary_rank(k, 1), boundary_rank(k, 2)] == [3, 3]
        assert betti_numbers(k, 2) == [1, 0, 1]

    def test_needs_cap_plus_one(self):
        with pytest.raises(DimensionError):
            betti_numbers(closure_complex(collapsed(HOLLOW_TRIANGLE), 1), 1)
        with pytest.raises(DimensionError):
            betti_numbers(closure_complex(collapsed(HOLLOW_TRIANGLE), 2), -1)

    def test_degenerate(self):
        empty = SimplicialComplex.from_simplices("closure", 1, [])
        assert betti_numbers(empty, 0) == [0]
        assert betti_numbers(SimplicialComplex.from_simplices("closure", 1, [(0,)]), 0) == [1]

    @settings(max_examples=200, deadline=None)
    @given(edge_sets)
    def test_oracle(self, sets):
        ch = collapsed(sets)
        for k, cells in (
            (nesting_complex(ch, 3), oracle.nesting_cells(sets, 3)),
            (closure_complex(ch, 3), oracle.closure_cells(sets, 3)),
        ):
            assert betti_numbers(k, 2) == oracle.betti(cells, 2)

    @settings(max_examples=100, deadline=None)
    @given(edge_sets)
    def test_beta0_is_component_count(self, sets):
        ch = collapsed(sets)
        for k in (nesting_complex(ch, 2), closure_complex(ch, 2)):
            g = nx.Graph()
            g.add_nodes_from(range(k.count(0)))
            g.add_edges_from(k.simplices(1))
            assert betti_numbers(k, 1)[0] == nx.number_connected_components(g)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sets(st.integers(0, 9), min_size=1, max_size=5), min_size=1, max_size=6))
    def test_euler_on_fully_materialized(self, sets):
        top = max(len(s) for s in sets) - 1
        k = closure_complex(collapsed(sets), top + 1)
        betti = betti_numbers(k, top)
        assert euler_characteristic(k) == sum((-1) ** d * b for d, b in enumerate(betti))

    def test_rank_paths_agree_on_big_simplex(self):
        # a single 12-vertex hyperedge: contractible, pairing does real work
        k = closure_complex(collapsed([set(range(12)), {20, 21}, {21, 22}, {20, 22}]), 3)
        for d in (1, 2, 3):
            assert boundary_rank(k, d) == rank_gf2(boundary_matrix(k, d))
        assert betti_numbers(k, 2) == [2, 1, 0]


class TestEuler:
    @pytest.mark.parametrize(
        "sets, cap, chi",
        [(HOLLOW_TRIANGLE, 1, 0), (FILLED_TRIANGLE, 2, 1), (TETRA_BOUNDARY, 2, 2)],
    )
    def test_values(self, sets, cap, chi):
        assert euler_characteristic(closure_complex(collapsed(sets), cap)) == chi


class TestBasis:
    def test_square(self):
        k = graph_complex([(0, 1), (1, 2), (2, 3), (0, 3)])
        (rep,) = homology_basis(k, 1)
        assert set(rep.support) == {(0, 1), (1, 2), (2, 3), (0, 3)}

    def test_filled_triangle_has_none(self):
        assert homology_basis(closure_complex(collapsed(FILLED_TRIANGLE), 2), 1) == []

    def test_two_triangles(self):
        k = graph_complex([(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])
        reps = homology_basis(k, 1)
        assert len(reps) == 2 and all(len(r.support) == 3 for r in reps)
        assert not set(reps[0].support) & set(reps[1].support)

    def test_sphere_void(self):
        (rep,) = homology_basis(closure_complex(collapsed(TETRA_BOUNDARY), 3), 2)
        assert len(rep.support) == 4 and not chain_boundary(rep.support)

    def test_dimension_errors(self):
        k = closure_complex(collapsed(HOLLOW_TRIANGLE), 2)
        with pytest.raises(DimensionError):
            homology_basis(k, 0)
        with pytest.raises(DimensionError):
            homology_basis(k, 2)

    @settings(max_examples=150, deadline=None)
    @given(edge_sets)
    def test_cycles_independent_modulo_boundaries(self, sets):
        ch = collapsed(sets)
        for k in (nesting_complex(ch, 3), closure_complex(ch, 3)):
            for d in (1, 2):
                reps = homology_basis(k, d)
                assert len(reps) == betti_numbers(k, d)[d]
                for rep in reps:
                    assert oracle.chain_is_cycle(rep.support)
                    assert not chain_boundary(rep.support)
                # independence: no nonempty sum of reps lies in the image of the next boundary
                up = boundary_matrix(k, d + 1)
                image = [set(up.column(j).tolist()) for j in range(up.n_cols)]
                vecs = [set(k.index(d, rep.support).tolist()) for rep in reps]
                for r in range(1, len(vecs) + 1):
                    for combo in itertools.combinations(vecs, r):
                        total: set = set()
                        for v in combo:
                            total ^= v
                        assert not in_span(image, total)

    def test_deterministic(self):
        k1 = nesting_complex(collapsed(SQUARE), 2)
        k2 = nesting_complex(collapsed(SQUARE), 2)
        assert homology_basis(k1, 1) == homology_basis(k2, 1)


class TestSummary:
    def test_json(self):
        s = compute_homology(nesting_complex(collapsed(SQUARE), 2), 1)
        data = json.loads(json.dumps(s.to_json()))
        assert data["betti"] == [1, 1] and data["cells"] == [4, 4, 0]
        assert len(data["representatives"]["1"]) == 1 and len(data["representatives"]["1"][0]) == 4

    def test_representatives_match_betti(self):
        s = compute_homology(closure_complex(collapsed(TETRA_BOUNDARY), 3), 2)
        assert [len(s.representatives[d]) for d in (1, 2)] == s.betti[1:]

    def test_skip_representatives(self):
        s = compute_homology(nesting_complex(collapsed(SQUARE), 2), 1, representatives=False)
        assert s.representatives == {}

    def test_chain_boundary(self):
        assert chain_boundary([(0, 1), (1, 2)]) == {(0,), (2,)}
        assert chain_boundary([(0, 1), (1, 2), (0, 2)]) == set()
