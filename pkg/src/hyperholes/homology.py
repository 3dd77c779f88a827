"""Homology over GF(2): boundary matrices, ranks, Betti numbers, cycle representatives.

Ranks of the boundary maps are obtained from the persistence pairing of the
complex under its canonical order (vertices, then edges, ... each block in
lexicographic order).  Dimension 0/1 pairs come from union-find; higher
ones from reducing coboundary columns in reverse order with clearing.  On
a closure complex containing one big simplex almost every coboundary
column is already reduced, which keeps the work proportional to the
number of edges instead of the number of triangles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .topology import SimplicialComplex, encode


class DimensionError(ValueError):
    """Requested dimension is not materialized in the complex."""


@dataclass(frozen=True, eq=False)
class Gf2Matrix:
    """Sparse binary matrix, column-major: column j holds row indices
    ``indices[indptr[j]:indptr[j+1]]`` (sorted, no repeats)."""

    n_rows: int
    n_cols: int
    indptr: np.ndarray
    indices: np.ndarray

    def __post_init__(self):
        if len(self.indptr) != self.n_cols + 1:
            raise ValueError("indptr length must be n_cols + 1")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.n_rows):
            raise ValueError("row index out of range")

    @classmethod
    def from_columns(cls, n_rows: int, columns: Iterable[Iterable[int]]) -> "Gf2Matrix":
        cols = [sorted(set(c)) for c in columns]
        indptr = np.zeros(len(cols) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(c) for c in cols])
        flat = np.fromiter((i for c in cols for i in c), dtype=np.int64, count=int(indptr[-1]))
        return cls(n_rows, len(cols), indptr, flat)

    @classmethod
    def from_dense(cls, array) -> "Gf2Matrix":
        a = np.asarray(array) % 2
        return cls.from_columns(a.shape[0], (np.nonzero(a[:, j])[0].tolist() for j in range(a.shape[1])))

    def column(self, j: int) -> np.ndarray:
        return self.indices[self.indptr[j] : self.indptr[j + 1]]

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols), dtype=np.uint8)
        for j in range(self.n_cols):
            out[self.column(j), j] = 1
        return out

    def compose(self, other: "Gf2Matrix") -> "Gf2Matrix":
        """Matrix product ``self @ other`` over GF(2)."""
        if other.n_rows != self.n_cols:
            raise ValueError("shape mismatch")
        cols = []
        for j in range(other.n_cols):
            acc: set[int] = set()
            for k in other.column(j).tolist():
                acc.symmetric_difference_update(self.column(k).tolist())
            cols.append(acc)
        return Gf2Matrix.from_columns(self.n_rows, cols)

    def is_zero(self) -> bool:
        return len(self.indices) == 0


@dataclass(frozen=True)
class CycleRep:
    dimension: int
    support: tuple[tuple[int, ...], ...]


@dataclass
class HomologySummary:
    betti: list[int]
    representatives: dict[int, list[CycleRep]]
    cells: list[int]

    def to_json(self) -> dict[str, Any]:
        return {
            "betti": list(self.betti),
            "representatives": {
                str(d): [[list(s) for s in rep.support] for rep in reps]
                for d, reps in sorted(self.representatives.items())
            },
            "cells": list(self.cells),
        }


# -- boundary matrices ------------------------------------------------------


def _faces(k: SimplicialComplex, d: int) -> np.ndarray:
    """(n_d, d+1) array of facet indices per d-simplex, ascending within each row."""
    cached = k._cache.get(("faces", d))
    if cached is not None:
        return cached
    rows = k.rows(d)
    out = np.empty((len(rows), d + 1), dtype=np.int64)
    for pos, drop in enumerate(range(d, -1, -1)):
        face_keys = encode(np.delete(rows, drop, axis=1), k.radix, d - 1)
        found = np.searchsorted(k.keys[d - 1], face_keys)
        if len(face_keys) and (
            found.max() >= len(k.keys[d - 1]) or not np.array_equal(k.keys[d - 1][found], face_keys)
        ):
            raise ValueError(f"complex is not downward closed at dimension {d}")
        out[:, pos] = found
    k._cache[("faces", d)] = out
    return out


def _cofaces(k: SimplicialComplex, d: int) -> tuple[np.ndarray, np.ndarray]:
    """CSR (indptr, indices) listing the (d+1)-simplices above each d-simplex."""
    cached = k._cache.get(("cofaces", d))
    if cached is not None:
        return cached
    faces = _faces(k, d + 1)
    flat = faces.ravel()
    order = np.argsort(flat, kind="stable")
    cofaces = order // (d + 2)
    counts = np.bincount(flat, minlength=k.count(d))
    indptr = np.zeros(k.count(d) + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    k._cache[("cofaces", d)] = (indptr, cofaces)
    return indptr, cofaces


def boundary_matrix(k: SimplicialComplex, d: int) -> Gf2Matrix:
    if d < 1:
        raise DimensionError("boundary matrices start at dimension 1")
    if d > k.dim_cap:
        raise DimensionError(f"dimension {d} exceeds materialized cap {k.dim_cap}")
    faces = _faces(k, d)
    indptr = np.arange(0, (d + 1) * (len(faces) + 1), d + 1, dtype=np.int64)
    return Gf2Matrix(k.count(d - 1), k.count(d), indptr, faces.ravel())


# -- reduction --------------------------------------------------------------


def _reduce_column(col: set[int], pivots: dict[int, set[int]]) -> set[int]:
    while col:
        other = pivots.get(max(col))
        if other is None:
            break
        col ^= other
    return col


def rank_gf2(m: Gf2Matrix) -> int:
    """Rank over GF(2) by left-to-right column elimination on the lowest entry."""
    pivots: dict[int, set[int]] = {}
    bound = min(m.n_rows, m.n_cols)
    for j in range(m.n_cols):
        if len(pivots) == bound:
            break
        col = _reduce_column(set(m.column(j).tolist()), pivots)
        if col:
            pivots[max(col)] = col
    return len(pivots)


class _Pairing:
    """Persistence pairs of a complex under its canonical order, per dimension.

    ``pairs[d]`` maps each negative d-simplex (index) to the (d-1)-simplex
    it kills, so ``len(pairs[d]) == rank(boundary_d)``.
    """

    def __init__(self, k: SimplicialComplex):
        self.k = k
        self.pairs: dict[int, dict[int, int]] = {}

    def of(self, d: int) -> dict[int, int]:
        if d in self.pairs:
            return self.pairs[d]
        if d == 1:
            result = self._edges()
        else:
            result = self._cohomology(d, cleared=self.of(d - 1))
        self.pairs[d] = result
        return result

    def _edges(self) -> dict[int, int]:
        k = self.k
        if k.count(1) == 0:
            return {}
        ends = _faces(k, 1)
        parent = list(range(k.count(0)))

        def find(x: int) -> int:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        out = {}
        for e, (a, b) in enumerate(ends.tolist()):
            ra, rb = find(a), find(b)
            if ra != rb:
                # younger root dies, matching the lowest-entry reduction
                young, old = (ra, rb) if ra > rb else (rb, ra)
                parent[young] = old
                out[e] = young
        return out

    def _cohomology(self, d: int, cleared: dict[int, int]) -> dict[int, int]:
        """Reduce coboundary columns of (d-1)-simplices, newest first, on the smallest entry."""
        k = self.k
        if k.count(d) == 0:
            return {}
        indptr, cofaces = _cofaces(k, d - 1)
        # low -> (column owner, reduced column or None when still original)
        reduced: dict[int, tuple[int, set[int] | None]] = {}

        def column(owner: int, col: set[int] | None) -> set[int]:
            if col is not None:
                return col
            return set(cofaces[indptr[owner] : indptr[owner + 1]].tolist())

        for j in range(k.count(d - 1) - 1, -1, -1):
            lo, hi = indptr[j], indptr[j + 1]
            if lo == hi or j in cleared:
                continue
            low = int(cofaces[lo])
            if low not in reduced:
                reduced[low] = (j, None)
                continue
            col = column(j, None)
            while col:
                low = min(col)
                hit = reduced.get(low)
                if hit is None:
                    break
                col ^= column(*hit)
            if col:
                reduced[min(col)] = (j, col)
        return {tau: owner for tau, (owner, _) in reduced.items()}


def _pairing(k: SimplicialComplex) -> _Pairing:
    p = k._cache.get("pairing")
    if p is None:
        p = k._cache["pairing"] = _Pairing(k)
    return p


def boundary_rank(k: SimplicialComplex, d: int) -> int:
    if d < 1 or d > k.dim_cap:
        return 0
    return len(_pairing(k).of(d))


def betti_numbers(k: SimplicialComplex, cap: int) -> list[int]:
    if cap < 0:
        raise DimensionError("cap must be nonnegative")
    if cap + 1 > k.dim_cap:
        raise DimensionError(
            f"Betti numbers through {cap} need simplices through {cap + 1}; complex stops at {k.dim_cap}"
        )
    ranks = [0] + [boundary_rank(k, d) for d in range(1, cap + 2)]
    return [k.count(d) - ranks[d] - ranks[d + 1] for d in range(cap + 1)]


def homology_basis(k: SimplicialComplex, d: int) -> list[CycleRep]:
    """Cycles whose classes form a basis of H_d.

    Kernel vectors of the d-th boundary map come from a tracked column
    reduction; each is reduced against a basis of the boundaries (image of
    the (d+1)-th map) plus the cycles already accepted, and the survivors
    are returned.  Columns known to reduce to zero, or whose cycle is
    already a boundary, are skipped up front.
    """
    if d < 1:
        raise DimensionError("representatives are computed for d >= 1")
    if d + 1 > k.dim_cap:
        raise DimensionError(f"need simplices through {d + 1}; complex stops at {k.dim_cap}")
    beta = betti_numbers(k, d)[d]
    if beta == 0:
        return []
    pairing = _pairing(k)
    negative_d = pairing.of(d)
    negative_up = pairing.of(d + 1)

    # boundaries: reduce the columns of the negative (d+1)-simplices
    up = _faces(k, d + 1)
    image: dict[int, set[int]] = {}
    for tau in sorted(negative_up):
        col = _reduce_column(set(up[tau].tolist()), image)
        if col:
            image[max(col)] = col
    killed = set(image)

    # cycles: tracked reduction of the d-th boundary, skipping columns that
    # reduce to zero and whose cycle class dies
    faces = _faces(k, d)
    pivots: dict[int, tuple[set[int], set[int]]] = {}
    survivors: list[CycleRep] = []
    accepted = dict(image)
    for j in range(k.count(d)):
        if j not in negative_d and j in killed:
            continue
        col, combo = set(faces[j].tolist()), {j}
        while col:
            hit = pivots.get(max(col))
            if hit is None:
                break
            col ^= hit[0]
            combo ^= hit[1]
        if col:
            pivots[max(col)] = (col, combo)
            continue
        rest = _reduce_column(set(combo), accepted)
        if rest:
            accepted[max(rest)] = rest
            rows = k.rows(d)
            support = tuple(sorted(tuple(int(x) for x in rows[i]) for i in combo))
            survivors.append(CycleRep(d, support))
    if len(survivors) != beta:
        raise AssertionError(f"found {len(survivors)} independent cycles, expected {beta}")
    return survivors


def euler_characteristic(k: SimplicialComplex) -> int:
    return sum((-1) ** d * k.count(d) for d in range(k.dim_cap + 1))


def compute_homology(k: SimplicialComplex, cap: int, representatives: bool = True) -> HomologySummary:
    betti = betti_numbers(k, cap)
    reps: dict[int, list[CycleRep]] = {}
    if representatives:
        for d in range(1, cap + 1):
            reps[d] = homology_basis(k, d) if betti[d] else []
    return HomologySummary(betti, reps, k.cell_counts)


def chain_boundary(support: Sequence[Sequence[int]]) -> set[tuple[int, ...]]:
    """Facets appearing an odd number of times in the boundary of a chain."""
    out: set[tuple[int, ...]] = set()
    for s in support:
        for i in range(len(s)):
            out ^= {tuple(s[:i]) + tuple(s[i + 1 :])}
    return out


__all__ = [
    "CycleRep",
    "DimensionError",
    "Gf2Matrix",
    "HomologySummary",
    "betti_numbers",
    "boundary_matrix",
    "boundary_rank",
    "chain_boundary",
    "compute_homology",
    "euler_characteristic",
    "homology_basis",
    "rank_gf2",
]
