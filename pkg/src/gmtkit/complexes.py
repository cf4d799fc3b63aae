"""Finite simplicial complexes carrying chains and varifolds.

A complex stores vertex positions, its m-cells ("chain_dim" m in {1,2}),
optional (m+1)-dimensional fill cells used by flat-norm optimization, and
every derived lower skeleton. Cell identity is canonical: the sorted vertex
tuple. A stored cell whose vertices arrive in non-sorted order carries the
sign of the sorting permutation, which the signed boundary operator folds in.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCell,
    DimensionError,
    DuplicateCell,
    InvalidInput,
    MissingFace,
    RefinementUnsupported,
)
from .geometry import is_degenerate, simplex_diameter, simplex_measure

# Spatial tolerance for vertex deduplication.
POSITION_TOL = 1e-9

# Predicate tolerance for segment arrangements in common_refinement.
PREDICATE_TOL = 1e-12


def _perm_sign(seq) -> int:
    """Sign of the permutation sorting seq (no repeats)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


@dataclass(frozen=True)
class Simplex:
    """Simplex given by vertex ids in stored order."""

    vertices: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    @property
    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.vertices))

    @property
    def sign(self) -> int:
        return _perm_sign(self.vertices)


class PointIndex:
    """Spatial hash deduplicating points within an absolute tolerance."""

    def __init__(self, tol: float = POSITION_TOL):
        self.tol = tol
        self._grid: dict[tuple, int] = {}
        self.points: list[np.ndarray] = []

    def _key(self, p) -> tuple:
        return tuple(int(math.floor(x / self.tol)) for x in p)

    def find(self, p) -> int | None:
        p = np.asarray(p, dtype=float)
        base = self._key(p)
        n = len(base)
        for off in itertools.product((-1, 0, 1), repeat=n):
            idx = self._grid.get(tuple(b + o for b, o in zip(base, off)))
            if idx is not None and float(np.max(np.abs(self.points[idx] - p))) <= self.tol:
                return idx
        return None

    def insert(self, p) -> int:
        found = self.find(p)
        if found is not None:
            return found
        p = np.asarray(p, dtype=float)
        idx = len(self.points)
        self.points.append(p)
        self._grid[self._key(p)] = idx
        return idx


class CellComplex:
    """Simplicial complex with skeleta of dimension 0..chain_dim(+1)."""

    def __init__(self, positions: np.ndarray, cells: dict[int, list[Simplex]], chain_dim: int):
        self.positions = positions
        self.cells = cells
        self.chain_dim = chain_dim
        self.ambient_dim = positions.shape[1]
        self._index = {
            d: {s.key: i for i, s in enumerate(lst)} for d, lst in cells.items()
        }
        self._face_lists: dict[int, list[list[tuple[int, int]]]] = {}
        self._measures: dict[int, np.ndarray] = {}
        for d in sorted(cells):
            if d == 0:
                continue
            rows = []
            for s in cells[d]:
                skey = s.key
                entries = []
                for i in range(d + 1):
                    face = skey[:i] + skey[i + 1 :]
                    fi = self._index[d - 1][face]
                    # both the cell's and the face's stored orders carry signs
                    sg = (-1) ** i * s.sign * cells[d - 1][fi].sign
                    entries.append((fi, sg))
                rows.append(entries)
            self._face_lists[d] = rows

    # -- accessors ----------------------------------------------------------

    def n_cells(self, dim: int) -> int:
        return len(self.cells.get(dim, ()))

    def cell(self, dim: int, idx: int) -> Simplex:
        return self.cells[dim][idx]

    def cell_positions(self, dim: int, idx: int) -> np.ndarray:
        return self.positions[list(self.cells[dim][idx].vertices)]

    def cell_index(self, dim: int, vertices) -> int | None:
        return self._index.get(dim, {}).get(tuple(sorted(vertices)))

    def faces_of(self, dim: int, idx: int) -> list[tuple[int, int]]:
        """(face index, orientation sign) pairs of cell idx at dimension dim."""
        return self._face_lists[dim][idx]

    def measures(self, dim: int) -> np.ndarray:
        if dim not in self._measures:
            self._measures[dim] = np.array(
                [simplex_measure(self.cell_positions(dim, i)) for i in range(self.n_cells(dim))]
            )
        return self._measures[dim]

    def diameters(self, dim: int) -> np.ndarray:
        return np.array(
            [simplex_diameter(self.cell_positions(dim, i)) for i in range(self.n_cells(dim))]
        )

    def centroids(self, dim: int) -> np.ndarray:
        out = np.zeros((self.n_cells(dim), self.ambient_dim))
        for i, s in enumerate(self.cells[dim]):
            out[i] = self.positions[list(s.vertices)].mean(axis=0)
        return out

    @property
    def fill_dim(self) -> int:
        return self.chain_dim + 1

    @property
    def has_fills(self) -> bool:
        return self.n_cells(self.fill_dim) > 0

    def boundary_matrix(self, dim: int, signed: bool = False) -> np.ndarray:
        """Dense incidence matrix from dim-cells to (dim-1)-cells."""
        mat = np.zeros((self.n_cells(dim - 1), self.n_cells(dim)), dtype=np.int64)
        for j, entries in enumerate(self._face_lists[dim]):
            for fi, sg in entries:
                mat[fi, j] += sg if signed else 1
        return mat if signed else (mat % 2)

    def geometric_key(self, dim: int, idx: int, tol: float = POSITION_TOL):
        """Canonical per-cell key usable across complexes: sorted rounded positions."""
        pts = self.cell_positions(dim, idx)
        rows = [tuple(round(x / tol) for x in p) for p in pts]
        return tuple(sorted(rows))


def _derive_skeleta(top_cells: dict[int, list[Simplex]]) -> dict[int, list[Simplex]]:
    """Complete the cell dictionary downward with canonical faces.

    Stored levels keep their input order; derived levels are sorted by
    canonical key for determinism.
    """
    cells = {d: list(v) for d, v in top_cells.items()}
    top = max(cells)
    for d in range(top, 0, -1):
        if d - 1 in cells:
            continue  # stored level: order is caller-visible
        seen: set[tuple] = set()
        derived = []
        for s in cells[d]:
            for face in itertools.combinations(s.key, d):
                if face not in seen:
                    seen.add(face)
                    derived.append(Simplex(face))
        cells[d - 1] = sorted(derived, key=lambda s: s.key)
    return cells


def build_complex(positions, cells, fill_cells=(), chain_dim: int | None = None) -> CellComplex:
    """Construct a validated complex from positions and vertex-id tuples.

    Vertices within POSITION_TOL of each other are merged. Raises
    DegenerateCell / DuplicateCell / MissingFace / DimensionError as the
    input warrants.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.ndim != 2 or pos.shape[1] not in (1, 2, 3):
        raise InvalidInput(f"positions must be (V, N) with N in 1..3, got {pos.shape}")
    if not np.all(np.isfinite(pos)):
        raise InvalidInput("positions must be finite")
    if len(cells) == 0:
        raise InvalidInput("a complex needs at least one cell")

    index = PointIndex()
    remap = [index.insert(p) for p in pos]
    newpos = np.array(index.points) if index.points else np.zeros((0, pos.shape[1]))

    m = len(cells[0]) - 1
    if chain_dim is not None and chain_dim != m:
        raise DimensionError(f"cells have dimension {m}, expected {chain_dim}")
    if m not in (1, 2):
        raise DimensionError(f"chain dimension must be 1 or 2, got {m}")
    if m >= pos.shape[1] + 1:
        raise DimensionError(f"{m}-cells need ambient dimension >= {m}")

    def _convert(raw, want_len, what):
        out = []
        seen = {}
        for c in raw:
            for v in c:
                if not 0 <= int(v) < len(remap):
                    raise InvalidInput(
                        f"{what} {tuple(c)} references vertex {v}, have {len(remap)}"
                    )
            verts = tuple(remap[v] for v in c)
            if len(verts) != want_len:
                raise DimensionError(f"{what} {c} has {len(verts)} vertices, expected {want_len}")
            if len(set(verts)) != want_len:
                raise DegenerateCell(f"{what} {c} repeats a vertex")
            s = Simplex(verts)
            if s.key in seen:
                raise DuplicateCell(f"{what} {c} duplicates cell {seen[s.key]}")
            seen[s.key] = c
            if is_degenerate(newpos[list(verts)]):
                raise DegenerateCell(f"{what} {c} has near-zero measure")
            out.append(s)
        return out

    mcells = _convert(cells, m + 1, "cell")
    top: dict[int, list[Simplex]] = {m: mcells}
    if len(fill_cells) > 0:
        fills = _convert(fill_cells, m + 2, "fill cell")
        mkeys = {s.key for s in mcells}
        for f in fills:
            for face in itertools.combinations(f.key, m + 1):
                if face not in mkeys:
                    raise MissingFace(f"fill cell {f.vertices} face {face} is not an m-cell")
        top[m + 1] = fills
    all_cells = _derive_skeleta(top)
    return CellComplex(newpos, all_cells, m)


@dataclass(frozen=True)
class RefinementMap:
    """Relates the m-cells of a child complex to those of a parent complex.

    cell_parent[i] is the parent m-cell index containing child m-cell i, or
    None when the child's support is not part of the parent.
    """

    parent: CellComplex
    child: CellComplex
    cell_parent: tuple


def identity_refinement(c: CellComplex) -> RefinementMap:
    return RefinementMap(c, c, tuple(range(c.n_cells(c.chain_dim))))


# ---------------------------------------------------------------------------
# subdivision


def subdivide(c: CellComplex, max_diam: float) -> tuple[CellComplex, RefinementMap]:
    """Split m-cells until every diameter is <= max_diam (measure preserved).

    Fill cells are not carried over. An already-fine complex is returned
    unchanged with the identity map.
    """
    if max_diam <= 0:
        raise InvalidInput("max_diam must be positive")
    m = c.chain_dim
    diams = c.diameters(m)
    if np.all(diams <= max_diam):
        return c, identity_refinement(c)

    pos_list = [p.copy() for p in c.positions]
    if m == 1:
        new_cells = []
        parent = []
        for i in range(c.n_cells(1)):
            a, b = c.cells[1][i].vertices
            pa, pb = c.positions[a], c.positions[b]
            k = max(1, math.ceil(diams[i] / max_diam))
            ids = [a]
            for j in range(1, k):
                pos_list.append(pa + (pb - pa) * (j / k))
                ids.append(len(pos_list) - 1)
            ids.append(b)
            for j in range(k):
                new_cells.append((ids[j], ids[j + 1]))
                parent.append(i)
        child = build_complex(np.array(pos_list), new_cells)
    else:
        # global 4-way rounds keep the triangulation conforming
        tris = [tuple(s.vertices) for s in c.cells[2]]
        parent = list(range(len(tris)))
        edge_mid: dict[tuple, int] = {}

        def midpoint(u, v):
            key = (min(u, v), max(u, v))
            if key not in edge_mid:
                pos_list.append((np.asarray(pos_list[u]) + np.asarray(pos_list[v])) / 2.0)
                edge_mid[key] = len(pos_list) - 1
            return edge_mid[key]

        def diam(t):
            pts = np.array([pos_list[v] for v in t])
            return simplex_diameter(pts)

        while any(diam(t) > max_diam for t in tris):
            nxt, npar = [], []
            for t, pi in zip(tris, parent):
                a, b, cc = t
                ab, bc, ca = midpoint(a, b), midpoint(b, cc), midpoint(cc, a)
                for piece in ((a, ab, ca), (ab, b, bc), (ca, bc, cc), (ab, bc, ca)):
                    nxt.append(piece)
                    npar.append(pi)
            tris, parent = nxt, npar
        child = build_complex(np.array(pos_list), tris)

    return child, RefinementMap(c, child, tuple(parent))


# ---------------------------------------------------------------------------
# common refinement


def _seg_intersection_params(a0, a1, b0, b1, tol):
    """Parameters t on segment a where segment b forces a split."""
    d1 = a1 - a0
    d2 = b1 - b0
    len1 = float(np.linalg.norm(d1))
    len2 = float(np.linalg.norm(d2))
    scale = max(len1, len2, 1e-300)
    out = []
    if a0.shape[0] == 1:
        cross = 0.0
    else:
        cross = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(cross) > tol * scale * scale:
        # transversal: solve a0 + t d1 = b0 + s d2
        r = b0 - a0
        t = (r[0] * d2[1] - r[1] * d2[0]) / cross
        s = (r[0] * d1[1] - r[1] * d1[0]) / cross
        eps = tol / max(len1, tol)
        if -eps <= t <= 1 + eps and -eps <= s <= 1 + eps:
            out.append(min(1.0, max(0.0, t)))
        return out
    # parallel: collinear overlap splits at b's endpoint projections
    if a0.shape[0] == 2:
        off = b0 - a0
        dist = abs(off[0] * d1[1] - off[1] * d1[0]) / max(len1, 1e-300)
        if dist > tol * max(scale, 1.0) * 1e3 and dist > POSITION_TOL:
            return out
    dd = float(np.dot(d1, d1))
    for q in (b0, b1):
        t = float(np.dot(q - a0, d1)) / dd
        if 0 < t < 1:
            out.append(t)
    return out


def _arrange_segments(segs, tol):
    """Split a list of segments (P0, P1) at mutual intersections.

    Returns (points array builder, list of (child endpoint ids, source index)).
    """
    index = PointIndex()
    children = []
    for i, (p0, p1) in enumerate(segs):
        ts = {0.0, 1.0}
        for j, (q0, q1) in enumerate(segs):
            if i == j:
                continue
            for t in _seg_intersection_params(p0, p1, q0, q1, tol):
                ts.add(t)
        ts = sorted(ts)
        ids = []
        for t in ts:
            ids.append(index.insert(p0 + (p1 - p0) * t))
        for k in range(len(ids) - 1):
            if ids[k] != ids[k + 1]:
                children.append(((ids[k], ids[k + 1]), i))
    return index, children


def _segments_of(c: CellComplex):
    return [
        (c.positions[s.vertices[0]], c.positions[s.vertices[1]])
        for s in c.cells[1]
    ]


def _carry_fills(result_cells_index, source: CellComplex, vertex_lookup):
    """Map source fill cells into the merged complex; None when a face was split."""
    fills = []
    for s in source.cells.get(source.fill_dim, ()):
        verts = []
        for v in s.vertices:
            nv = vertex_lookup(source.positions[v])
            if nv is None:
                return None
            verts.append(nv)
        for face in itertools.combinations(tuple(sorted(verts)), source.fill_dim):
            if face not in result_cells_index:
                return None
        fills.append(tuple(verts))
    return fills


def common_refinement(
    a: CellComplex, b: CellComplex, tol: float = PREDICATE_TOL
) -> tuple[CellComplex, RefinementMap, RefinementMap]:
    """Smallest complex refining both inputs, with cell-parent maps.

    Fully supported for segment complexes in ambient dimension 1 or 2
    (pairwise arrangement). Other classes require each cell of one complex
    to coincide with, or stay disjoint from, every cell of the other.
    """
    if a.ambient_dim != b.ambient_dim or a.chain_dim != b.chain_dim:
        raise DimensionError("common refinement needs equal ambient and chain dimensions")
    m = a.chain_dim
    if m == 1 and a.ambient_dim <= 2:
        na = a.n_cells(1)
        segs = _segments_of(a) + _segments_of(b)
        index, children = _arrange_segments(segs, tol)
        cell_list = []
        cell_seen: dict[tuple, int] = {}
        child_sources: list[list[int]] = []
        for (u, v), src in children:
            key = tuple(sorted((u, v)))
            if key in cell_seen:
                child_sources[cell_seen[key]].append(src)
            else:
                cell_seen[key] = len(cell_list)
                cell_list.append(key)
                child_sources.append([src])
        merged = build_complex(np.array(index.points), cell_list)

        def parent_map(side_offset, count, own: CellComplex):
            out = []
            for i, key in enumerate(cell_list):
                hit = None
                for src in child_sources[i]:
                    if side_offset <= src < side_offset + count:
                        hit = src - side_offset
                        break
                if hit is None:
                    # shared geometry may have been recorded under the other
                    # source only; test containment directly
                    mid = (index.points[key[0]] + index.points[key[1]]) / 2.0
                    for ci in range(own.n_cells(1)):
                        p0, p1 = own.cell_positions(1, ci)
                        d = p1 - p0
                        dd = float(np.dot(d, d))
                        t = float(np.dot(mid - p0, d)) / dd
                        if -1e-12 <= t <= 1 + 1e-12:
                            perp = mid - (p0 + t * d)
                            if float(np.linalg.norm(perp)) <= 10 * POSITION_TOL:
                                hit = ci
                                break
                out.append(hit)
            return tuple(out)

        pa = parent_map(0, na, a)
        pb = parent_map(na, len(segs) - na, b)

        def lookup(p):
            return index.find(p)

        fills = []
        for side in (a, b):
            got = _carry_fills(
                {s.key for s in merged.cells[1]}, side, lookup
            )
            if got is None:
                if side.has_fills:
                    raise RefinementUnsupported(
                        "a fill cell's face was split by the refinement"
                    )
                got = []
            fills.extend(got)
        if fills:
            uniq = []
            seen = set()
            for f in fills:
                k = tuple(sorted(f))
                if k not in seen:
                    seen.add(k)
                    uniq.append(f)
            merged = build_complex(np.array(index.points), cell_list, uniq)
        return merged, RefinementMap(a, merged, pa), RefinementMap(b, merged, pb)

    return _merge_identical_or_disjoint(a, b)


def _cells_overlap(a: CellComplex, ia: int, b: CellComplex, ib: int) -> bool:
    """Conservative interior-overlap test for the merge path."""
    pa = a.cell_positions(a.chain_dim, ia)
    pb = b.cell_positions(b.chain_dim, ib)
    lo_a, hi_a = pa.min(axis=0), pa.max(axis=0)
    lo_b, hi_b = pb.min(axis=0), pb.max(axis=0)
    gap = POSITION_TOL
    if np.any(hi_a < lo_b - gap) or np.any(hi_b < lo_a - gap):
        return False
    shared = {tuple(round(x / POSITION_TOL) for x in p) for p in pa} & {
        tuple(round(x / POSITION_TOL) for x in p) for p in pb
    }
    m = a.chain_dim
    if m == 1:
        # segments sharing one endpoint overlap only if collinear with overlap
        d1 = pa[1] - pa[0]
        if len(shared) >= 2:
            return True
        mid_b = pb.mean(axis=0)
        dd = float(np.dot(d1, d1))
        t = float(np.dot(mid_b - pa[0], d1)) / dd
        perp = mid_b - (pa[0] + t * d1)
        if float(np.linalg.norm(perp)) <= 10 * POSITION_TOL and -1e-9 < t < 1 + 1e-9:
            return not shared or (0 + 1e-9 < t < 1 - 1e-9)
        if shared:
            return False
        # no shared vertex, boxes overlap: check true distance
        return _segment_distance(pa[0], pa[1], pb[0], pb[1]) <= 10 * POSITION_TOL
    # triangles: sharing a full edge or vertex with distinct planes is fine
    n1 = np.cross(pa[1] - pa[0], pa[2] - pa[0])
    n2 = np.cross(pb[1] - pb[0], pb[2] - pb[0])
    if a.ambient_dim == 2:
        coplanar = True
    else:
        coplanar = float(np.linalg.norm(np.cross(n1, n2))) <= 1e-9 * float(
            np.linalg.norm(n1) * np.linalg.norm(n2)
        ) and abs(float(np.dot(pb[0] - pa[0], n1))) <= 1e-9 * float(np.linalg.norm(n1))
    if not coplanar:
        return False if shared else _triangles_far(pa, pb)
    if shared:
        return len(shared) > 2  # identical handled earlier; edge/vertex contact ok
    return True  # coplanar, boxes overlap, nothing shared: assume the worst


def _segment_distance(a0, a1, b0, b1) -> float:
    best = math.inf
    for p, (q0, q1) in ((a0, (b0, b1)), (a1, (b0, b1)), (b0, (a0, a1)), (b1, (a0, a1))):
        d = q1 - q0
        dd = float(np.dot(d, d))
        t = max(0.0, min(1.0, float(np.dot(p - q0, d)) / dd))
        best = min(best, float(np.linalg.norm(p - (q0 + t * d))))
    return best


def _triangles_far(pa, pb) -> bool:
    """True when the triangles provably overlap; conservative."""
    return True  # non-coplanar without shared vertices: treat as overlapping


def _merge_identical_or_disjoint(a: CellComplex, b: CellComplex):
    m = a.chain_dim
    index = PointIndex()
    for p in a.positions:
        index.insert(p)
    for p in b.positions:
        index.insert(p)

    def remap(c: CellComplex, i: int):
        return tuple(index.find(c.positions[v]) for v in c.cells[m][i].vertices)

    cells = []
    seen: dict[tuple, int] = {}
    pa, pb = [], []
    for i in range(a.n_cells(m)):
        verts = remap(a, i)
        seen[tuple(sorted(verts))] = len(cells)
        cells.append(verts)
        pa.append(i)
        pb.append(None)
    for i in range(b.n_cells(m)):
        verts = remap(b, i)
        key = tuple(sorted(verts))
        if key in seen:
            pb[seen[key]] = i
            continue
        for j in range(a.n_cells(m)):
            if _cells_overlap(a, j, b, i):
                raise RefinementUnsupported(
                    "cells overlap without matching; only segment complexes in the "
                    "plane support full arrangements"
                )
        seen[key] = len(cells)
        cells.append(verts)
        pa.append(None)
        pb.append(i)

    fills = []
    for side in (a, b):
        got = _carry_fills(
            {tuple(sorted(c)) for c in cells}, side, lambda p: index.find(p)
        )
        if got is None:
            raise RefinementUnsupported("a fill cell's face is missing after merge")
        fills.extend(got)
    uniq, seenf = [], set()
    for f in fills:
        k = tuple(sorted(f))
        if k not in seenf:
            seenf.add(k)
            uniq.append(f)
    merged = build_complex(np.array(index.points), cells, uniq)
    # build_complex may reorder nothing (insertion order preserved), so the
    # parent arrays line up with the cell list above
    return merged, RefinementMap(a, merged, tuple(pa)), RefinementMap(b, merged, tuple(pb))
