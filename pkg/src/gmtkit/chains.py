"""Flat chains over a cell complex: mod-2 and integer coefficients.

A chain lives on one complex at one dimension (the complex's chain
dimension m for the objects of study, m-1 for boundaries, m+1 for
fillings). The canonical zero chain carries complex=None.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .complexes import (
    CellComplex,
    PointIndex,
    RefinementMap,
    build_complex,
    common_refinement,
    subdivide,
)
from .errors import DimensionError, InvalidInput, RefinementUnsupported
from .geometry import WINDOW_ALL, AffineMap, Window, clipped_measure, is_degenerate

__all__ = [
    "Mod2Chain",
    "IntChain",
    "AtomChain",
    "mod2_chain",
    "int_chain",
    "zero_mod2",
    "zero_int",
    "boundary",
    "mass",
    "support",
    "restrict",
    "transfer",
    "pushforward",
    "int_to_mod2",
    "chains_equal",
    "boundary_atoms",
]


@dataclass(frozen=True)
class Mod2Chain:
    complex: CellComplex | None
    dim: int
    cells: frozenset

    @property
    def is_zero(self) -> bool:
        return not self.cells


@dataclass(frozen=True)
class IntChain:
    complex: CellComplex | None
    dim: int
    coeffs: tuple  # sorted tuple of (cell index, nonzero int)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coeff_map(self) -> dict:
        return dict(self.coeffs)


@dataclass(frozen=True)
class AtomChain:
    """0-chain as weighted points; the result of pushing a 0-chain forward."""

    points: np.ndarray  # (k, N)
    coeffs: tuple

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 0


def mod2_chain(cc: CellComplex, cells, dim: int | None = None) -> Mod2Chain:
    d = cc.chain_dim if dim is None else dim
    cells = frozenset(int(c) for c in cells)
    n = cc.n_cells(d)
    if any(not (0 <= c < n) for c in cells):
        raise InvalidInput(f"cell index out of range for dimension {d}")
    return Mod2Chain(cc, d, cells)


def int_chain(cc: CellComplex, coeffs, dim: int | None = None) -> IntChain:
    d = cc.chain_dim if dim is None else dim
    if isinstance(coeffs, dict):
        coeffs = coeffs.items()
    items = sorted((int(c), int(v)) for c, v in coeffs if int(v) != 0)
    n = cc.n_cells(d)
    if any(not (0 <= c < n) for c, _ in items):
        raise InvalidInput(f"cell index out of range for dimension {d}")
    return IntChain(cc, d, tuple(items))


def zero_mod2(dim: int) -> Mod2Chain:
    return Mod2Chain(None, dim, frozenset())


def zero_int(dim: int) -> IntChain:
    return IntChain(None, dim, ())


# ---------------------------------------------------------------------------
# boundary / mass / support


def boundary(chain):
    """Boundary operator; returns a chain one dimension down."""
    if chain.dim == 0 or (chain.complex is None):
        return (
            zero_mod2(chain.dim - 1)
            if isinstance(chain, Mod2Chain)
            else zero_int(chain.dim - 1)
        )
    cc = chain.complex
    if isinstance(chain, Mod2Chain):
        out: set[int] = set()
        for c in chain.cells:
            for fi, _ in cc.faces_of(chain.dim, c):
                out.symmetric_difference_update((fi,))
        return Mod2Chain(cc, chain.dim - 1, frozenset(out))
    acc: dict[int, int] = {}
    for c, v in chain.coeffs:
        for fi, sg in cc.faces_of(chain.dim, c):
            acc[fi] = acc.get(fi, 0) + sg * v
    return IntChain(cc, chain.dim - 1, tuple(sorted((k, v) for k, v in acc.items() if v)))


def _chain_items(chain):
    if isinstance(chain, Mod2Chain):
        return [(c, 1) for c in sorted(chain.cells)]
    return list(chain.coeffs)


def mass(chain, window: Window = WINDOW_ALL) -> float:
    """M_W: weighted clipped measure of the support (counting measure at
    dimension 0)."""
    if isinstance(chain, AtomChain):
        return math.fsum(
            abs(v) for p, v in zip(chain.points, chain.coeffs) if window.contains(p)
        )
    if chain.complex is None:
        return 0.0
    cc = chain.complex
    return math.fsum(
        abs(v) * clipped_measure(cc.cell_positions(chain.dim, c), window)
        for c, v in _chain_items(chain)
    )


def support(chain) -> tuple:
    if chain.complex is None:
        return ()
    return tuple(c for c, _ in _chain_items(chain))


def int_to_mod2(chain: IntChain) -> Mod2Chain:
    if chain.complex is None:
        return zero_mod2(chain.dim)
    return Mod2Chain(
        chain.complex, chain.dim, frozenset(c for c, v in chain.coeffs if v % 2)
    )


# ---------------------------------------------------------------------------
# transfer across refinement maps


def _orient_sign(parent_pos, child_pos) -> int:
    """Orientation of a child simplex relative to its parent (same support)."""
    if child_pos.shape[0] == 2:
        d = float(np.dot(child_pos[1] - child_pos[0], parent_pos[1] - parent_pos[0]))
        return 1 if d > 0 else -1
    ec = (child_pos[1] - child_pos[0], child_pos[2] - child_pos[0])
    ep = (parent_pos[1] - parent_pos[0], parent_pos[2] - parent_pos[0])
    if child_pos.shape[1] == 2:
        cr_c = ec[0][0] * ec[1][1] - ec[0][1] * ec[1][0]
        cr_p = ep[0][0] * ep[1][1] - ep[0][1] * ep[1][0]
        return 1 if cr_c * cr_p > 0 else -1
    d = float(np.dot(np.cross(ec[0], ec[1]), np.cross(ep[0], ep[1])))
    return 1 if d > 0 else -1


def transfer(chain, rm: RefinementMap):
    """Express a chain of the parent complex on the child complex."""
    if chain.complex is None:
        return chain
    if chain.complex is not rm.parent:
        raise InvalidInput("chain does not live on the refinement's parent complex")
    d = chain.dim
    if d != rm.parent.chain_dim:
        raise DimensionError("transfer applies to chains at the complex dimension")
    if isinstance(chain, Mod2Chain):
        cells = frozenset(
            i for i, p in enumerate(rm.cell_parent) if p is not None and p in chain.cells
        )
        return Mod2Chain(rm.child, d, cells)
    cmap = chain.coeff_map()
    out = {}
    for i, p in enumerate(rm.cell_parent):
        if p is None or p not in cmap:
            continue
        sg = _orient_sign(
            rm.parent.cell_positions(d, p), rm.child.cell_positions(d, i)
        )
        out[i] = cmap[p] * sg
    return IntChain(rm.child, d, tuple(sorted(out.items())))


# ---------------------------------------------------------------------------
# restrict


def restrict(chain, window: Window, max_diam: float):
    """Chain of the cells lying in the window, after subdividing so every
    cell is decided at diameter <= max_diam (centroid rule)."""
    if chain.complex is None:
        return chain
    sub, rm = subdivide(chain.complex, max_diam)
    moved = transfer(chain, rm)
    inside = window.contains_many(sub.centroids(chain.dim))
    if isinstance(moved, Mod2Chain):
        return Mod2Chain(sub, moved.dim, frozenset(c for c in moved.cells if inside[c]))
    return IntChain(
        sub, moved.dim, tuple((c, v) for c, v in moved.coeffs if inside[c])
    )


# ---------------------------------------------------------------------------
# affine push-forward


def _push_core(cc: CellComplex, dim: int, cell_ids_in, amap: AffineMap):
    """Map cells forward and arrange the images.

    cell_ids_in: source cell indices. Returns (new complex or None,
    contributions, new cell vertex tuples) where contributions[k] lists
    (position in cell_ids_in, orient sign) for every source covering new
    cell k. Signs are relative to stored vertex order on both sides.
    Degenerate images are dropped; at dimension 0 the "complex" is the
    deduplicated point array.
    """
    if amap.source_dim != cc.ambient_dim:
        raise DimensionError("map source dimension does not match the complex")
    img = amap.apply(cc.positions)
    kept = []  # (image positions, position in cell_ids_in)
    for pos, ci in enumerate(cell_ids_in):
        verts = cc.cells[dim][ci].vertices
        pts = img[list(verts)]
        if dim >= 1 and is_degenerate(pts):
            continue
        kept.append((pts, pos))
    if not kept:
        return None, [], []

    if dim == 0:
        index = PointIndex()
        contrib: dict[int, list] = {}
        for pts, pos in kept:
            i = index.insert(pts[0])
            contrib.setdefault(i, []).append((pos, 1))
        pts_arr = np.array(index.points)
        order = sorted(contrib)
        return pts_arr, [contrib[i] for i in order], order

    if dim == 1 and amap.target_dim <= 2:
        # full segment arrangement of the images
        from .complexes import _arrange_segments

        segs = [(p[0], p[1]) for p, _ in kept]
        index, children = _arrange_segments(segs, 1e-12)
        cell_of: dict[tuple, int] = {}
        cells: list[tuple] = []
        contrib_lists: list[list] = []
        for (u, v), src in children:
            key = (u, v) if u < v else (v, u)
            if key not in cell_of:
                cell_of[key] = len(cells)
                cells.append(key)
                contrib_lists.append([])
        # every source segment contributes to every child it covers
        pts = index.points
        for j, (p0, p1) in enumerate(segs):
            d = p1 - p0
            dd = float(np.dot(d, d))
            for k, key in enumerate(cells):
                mid = (pts[key[0]] + pts[key[1]]) / 2.0
                t = float(np.dot(mid - p0, d)) / dd
                if not (-1e-12 <= t <= 1 + 1e-12):
                    continue
                perp = mid - (p0 + t * d)
                if float(np.linalg.norm(perp)) > 1e-9:
                    continue
                child_dir = pts[key[1]] - pts[key[0]]
                sg = 1 if float(np.dot(child_dir, d)) > 0 else -1
                contrib_lists[k].append((kept[j][1], sg))
        new_cc = build_complex(np.array(pts), cells)
        return new_cc, contrib_lists, cells

    # dimension 2 (or segments in ambient 3): identical-or-disjoint only
    index = PointIndex()
    cells = []
    contrib_lists = []
    cell_of = {}
    geo = []
    for pts, pos in kept:
        ids = tuple(index.insert(p) for p in pts)
        key = tuple(sorted(ids))
        if key in cell_of:
            k = cell_of[key]
            sg = _perm_parity(ids) * _perm_parity(cells[k])
        else:
            cell_of[key] = k = len(cells)
            cells.append(ids)
            geo.append(np.array([index.points[i] for i in ids]))
            contrib_lists.append([])
            sg = 1
        contrib_lists[k].append((pos, sg))
    for i in range(len(cells)):
        for j in range(i + 1, len(cells)):
            if _images_overlap(geo[i], geo[j]):
                raise RefinementUnsupported(
                    "image cells overlap; only planar segment images are arranged"
                )
    new_cc = build_complex(np.array(index.points), cells)
    return new_cc, contrib_lists, cells


def _perm_parity(seq) -> int:
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _images_overlap(pa, pb) -> bool:
    lo_a, hi_a = pa.min(axis=0), pa.max(axis=0)
    lo_b, hi_b = pb.min(axis=0), pb.max(axis=0)
    if np.any(hi_a < lo_b - 1e-9) or np.any(hi_b < lo_a - 1e-9):
        return False
    shared = {tuple(np.round(p / 1e-9)) for p in pa} & {
        tuple(np.round(p / 1e-9)) for p in pb
    }
    # touching along shared vertices/edges is fine; anything else is suspect
    return len(shared) == 0


def pushforward(chain, amap: AffineMap):
    """Push a chain forward along an affine map.

    Mod-2 coefficients add mod 2 over coincident images; integer
    coefficients add with orientation signs. 0-chains come back as
    AtomChain. The zero chain stays zero.
    """
    if chain.complex is None:
        return chain
    cc = chain.complex
    items = _chain_items(chain)
    vals = [v for _, v in items]
    if chain.dim == 0:
        pts, contribs, order = _push_core(cc, 0, [c for c, _ in items], amap)
        if pts is None:
            return AtomChain(np.zeros((0, amap.target_dim)), ())
        coeffs = []
        keep = []
        for row, i in zip(contribs, order):
            s = sum(vals[pos] for pos, _ in row)
            if isinstance(chain, Mod2Chain):
                s %= 2
            if s:
                keep.append(pts[i])
                coeffs.append(s)
        if not keep:
            return AtomChain(np.zeros((0, amap.target_dim)), ())
        arr = np.array(keep)
        idx = np.lexsort(arr.T[::-1])
        return AtomChain(arr[idx], tuple(int(coeffs[i]) for i in idx))

    new_cc, contribs, _ = _push_core(cc, chain.dim, [c for c, _ in items], amap)
    if new_cc is None:
        return (
            zero_mod2(chain.dim) if isinstance(chain, Mod2Chain) else zero_int(chain.dim)
        )
    if isinstance(chain, Mod2Chain):
        cells_out = frozenset(
            k for k, row in enumerate(contribs) if (len(row) % 2)
        )
        return Mod2Chain(new_cc, chain.dim, cells_out)
    out = {}
    for k, row in enumerate(contribs):
        s = sum(vals[pos] * sg for pos, sg in row)
        if s:
            out[k] = s
    return IntChain(new_cc, chain.dim, tuple(sorted(out.items())))


# ---------------------------------------------------------------------------
# comparisons


def as_atoms(chain) -> AtomChain:
    """A 0-chain as weighted points, deduplicated and sorted by position."""
    if isinstance(chain, AtomChain):
        return chain
    if chain.dim != 0:
        raise DimensionError("expected a 0-chain")
    if chain.complex is None or not _chain_items(chain):
        n = chain.complex.ambient_dim if chain.complex else 1
        return AtomChain(np.zeros((0, n)), ())
    pts, coeffs = [], []
    for c, v in _chain_items(chain):
        pts.append(chain.complex.cell_positions(0, c)[0])
        coeffs.append(v)
    arr = np.array(pts)
    idx = np.lexsort(arr.T[::-1])
    return AtomChain(arr[idx], tuple(int(coeffs[i]) for i in idx))


def boundary_atoms(chain) -> AtomChain:
    """Boundary 0-chain as weighted points (for cross-complex comparison)."""
    return as_atoms(boundary(chain))


def atom_chains_equal(a: AtomChain, b: AtomChain, tol: float = 1e-9) -> bool:
    index = PointIndex(tol)
    acc: dict[int, int] = {}
    for p, v in zip(a.points, a.coeffs):
        i = index.insert(p)
        acc[i] = acc.get(i, 0) + v
    for p, v in zip(b.points, b.coeffs):
        i = index.insert(p)
        acc[i] = acc.get(i, 0) - v
    return all(v == 0 for v in acc.values())


def chains_equal(a, b) -> bool:
    """Equality as flat chains: empty symmetric difference after refinement."""
    if isinstance(a, AtomChain) or isinstance(b, AtomChain):
        return atom_chains_equal(as_atoms(a), as_atoms(b))
    if a.is_zero or b.is_zero:
        return (not a.is_zero or not _chain_items(b)) and (
            not b.is_zero or not _chain_items(a)
        )
    if type(a) is not type(b):
        raise InvalidInput("cannot compare chains over different coefficient rings")
    if a.dim == 0:
        return atom_chains_equal(as_atoms(a), as_atoms(b))
    if a.complex is b.complex:
        if isinstance(a, Mod2Chain):
            return a.cells == b.cells
        return a.coeffs == b.coeffs
    merged, ra, rb = common_refinement(a.complex, b.complex)
    ta, tb = transfer(a, ra), transfer(b, rb)
    return chains_equal(ta, tb)
