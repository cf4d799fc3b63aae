"""Example varifold sequences with declared limits and expected values.

Every family item carries its own fill-ready complex: the sequence
varifold, a declared limit (varifold and chain form, zero allowed), the
declared boundary limit, and closed-form expectations used by tests and
the verification harness. Grid x-coordinates are nudged by a few ulps so
the documented masses come out exactly in double precision; the
perturbation is far below every geometric tolerance in play.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .chains import IntChain, Mod2Chain, boundary, int_chain, mod2_chain, zero_int, zero_mod2
from .complexes import CellComplex, build_complex
from .errors import InvalidInput
from .geometry import WINDOW_ALL, AffineMap, Window
from .varifolds import IntegralVarifold, varifold

__all__ = [
    "FamilyItem",
    "PairItem",
    "LemmaSetup",
    "Family",
    "FAMILIES",
    "get_family",
    "strip_complex",
    "ring_complex",
    "fan_complex",
]


@dataclass(frozen=True)
class FamilyItem:
    index: int
    complex: CellComplex
    varifold: IntegralVarifold
    int_chain: IntChain | None
    limit_varifold: IntegralVarifold | None
    limit_mod2: Mod2Chain
    limit_int: IntChain | None
    gamma: Mod2Chain  # declared boundary limit, dimension m-1
    expect: dict


@dataclass(frozen=True)
class PairItem:
    complex: CellComplex
    chain_a: Mod2Chain
    chain_b: Mod2Chain


@dataclass(frozen=True)
class LemmaSetup:
    window: Window  # ball around a point of the limit line
    sheet_count: int
    axis_lo: float
    axis_hi: float
    proj: AffineMap  # plane projection, ambient -> 1


@dataclass(frozen=True)
class Family:
    name: str
    summary: str
    default_indices: tuple
    build: Callable
    pair_build: Callable | None
    bl_max_diam: Callable
    windows: tuple
    conv_tol: float
    lemma: LemmaSetup | None


# ---------------------------------------------------------------------------
# grid helpers


def _snap_x1(xs, evaluate, target, label):
    """Nudge xs[1] by ulps until evaluate(xs) == target exactly.

    evaluate must be monotone in xs[1] at ulp scale (it is: one odd cell
    length moves one-for-one). The total perturbation stays within a few
    1e-15, far below the 1e-9 position tolerance.
    """
    xs = list(xs)
    x_orig = xs[1]
    for _ in range(8):
        val = evaluate(xs)
        if val == target:
            if abs(xs[1] - x_orig) > 1e-12:
                raise InvalidInput(f"snapping drifted too far for {label}")
            return xs
        u = math.ulp(xs[1])
        x0 = xs[1]
        xs[1] = x0 + 64 * u
        slope = (evaluate(xs) - val) / (64 * u)
        xs[1] = x0
        if slope == 0.0:
            break
        xs[1] = x0 + (target - val) / slope
        for _ in range(128):
            val2 = evaluate(xs)
            if val2 == target:
                if abs(xs[1] - x_orig) > 1e-12:
                    raise InvalidInput(f"snapping drifted too far for {label}")
                return xs
            step = (target - val2) / slope
            xs[1] = math.nextafter(xs[1], math.inf if step > 0 else -math.inf)
    raise InvalidInput(f"could not snap the grid for {label}")


def strip_complex(xs, ys):
    """Triangulated grid strip.

    Returns (complex, h, v, d) with h[(row, col)], v[(rowpair, xindex)],
    d[(rowpair, col)] giving 1-cell indices. Fill cells are the two
    triangles of every box; with a single row there are no fills.
    """
    xs = list(xs)
    ys = list(ys)
    C, R = len(xs), len(ys)
    pid = lambda r, c: r * C + c
    pos = np.array([[x, y] for y in ys for x in xs])
    cells = []
    h, v, d = {}, {}, {}
    for r in range(R):
        for c in range(C - 1):
            h[(r, c)] = len(cells)
            cells.append((pid(r, c), pid(r, c + 1)))
    for r in range(R - 1):
        for c in range(C):
            v[(r, c)] = len(cells)
            cells.append((pid(r, c), pid(r + 1, c)))
    for r in range(R - 1):
        for c in range(C - 1):
            d[(r, c)] = len(cells)
            cells.append((pid(r, c), pid(r + 1, c + 1)))
    fills = []
    for r in range(R - 1):
        for c in range(C - 1):
            fills.append((pid(r, c), pid(r, c + 1), pid(r + 1, c + 1)))
            fills.append((pid(r, c), pid(r + 1, c + 1), pid(r + 1, c)))
    cc = build_complex(pos, cells, fill_cells=fills)
    return cc, h, v, d


def ring_complex(k, r_inner, r_outer, center=(0.0, 0.0)):
    """Two concentric regular k-gons with the band between them filled.

    Returns (complex, outer_cells, inner_cells).
    """
    cx, cy = center
    pts = []
    for r in (r_outer, r_inner):
        for j in range(k):
            a = 2 * math.pi * j / k
            pts.append((cx + r * math.cos(a), cy + r * math.sin(a)))
    cells = []
    outer, inner = [], []
    for j in range(k):
        jn = (j + 1) % k
        outer.append(len(cells))
        cells.append((j, jn))
    for j in range(k):
        jn = (j + 1) % k
        inner.append(len(cells))
        cells.append((k + j, k + jn))
    for j in range(k):
        cells.append((j, k + j))  # spokes
    for j in range(k):
        jn = (j + 1) % k
        cells.append((j, k + jn))  # band diagonals
    fills = []
    for j in range(k):
        jn = (j + 1) % k
        fills.append((j, jn, k + jn))
        fills.append((j, k + jn, k + j))
    cc = build_complex(np.array(pts), cells, fill_cells=fills)
    return cc, outer, inner


def fan_complex(k, radius, center=(0.0, 0.0)):
    """Regular k-gon with its disk fanned from the center.

    Returns (complex, rim_cells).
    """
    cx, cy = center
    pts = [(cx, cy)]
    for j in range(k):
        a = 2 * math.pi * j / k
        pts.append((cx + radius * math.cos(a), cy + radius * math.sin(a)))
    cells = []
    rim = []
    for j in range(k):
        jn = (j + 1) % k
        rim.append(len(cells))
        cells.append((1 + j, 1 + jn))
    for j in range(k):
        cells.append((0, 1 + j))
    fills = [(0, 1 + j, 1 + (j + 1) % k) for j in range(k)]
    cc = build_complex(np.array(pts), cells, fill_cells=fills)
    return cc, rim


# ---------------------------------------------------------------------------
# alternating segments: odd subintervals doubled at two heights


def _alternating_grid(n):
    xs = [k / (2.0 * n) for k in range(2 * n + 1)]

    def ev(xs):
        odd = [xs[k + 1] - xs[k] for k in range(1, 2 * n, 2)]
        return math.fsum(odd + odd)

    return _snap_x1(xs, ev, 1.0, f"alternating_segments n={n}")


def _build_alternating(n) -> FamilyItem:
    hh = 1.0 / (2.0 * n)
    xs = _alternating_grid(n)
    cc, h, v, d = strip_complex(xs, [0.0, hh])
    odd = [h[(r, c)] for r in (0, 1) for c in range(1, 2 * n, 2)]
    bottom = [h[(0, c)] for c in range(2 * n)]
    V = varifold(cc, {c: 1 for c in odd})
    limit_v = varifold(cc, {c: 1 for c in bottom})
    limit_c = mod2_chain(cc, bottom)
    return FamilyItem(
        index=n,
        complex=cc,
        varifold=V,
        int_chain=int_chain(cc, {c: 1 for c in odd}),
        limit_varifold=limit_v,
        limit_mod2=limit_c,
        limit_int=int_chain(cc, {c: 1 for c in bottom}),
        gamma=boundary(limit_c),
        expect={
            "mass": 1.0,
            "limit_mass": 1.0,
            "boundary_points": 4 * n,
            "fv_total": 4.0 * n,
            "flat_to_limit": 1.0,
            "bl_bound": 2.0 / n,
        },
    )


def _pair_alternating(i, j) -> PairItem:
    hi, hj = 1.0 / (2.0 * i), 1.0 / (2.0 * j)
    xs = sorted(set([k / (2.0 * i) for k in range(2 * i + 1)]) |
                set([k / (2.0 * j) for k in range(2 * j + 1)]))
    lo, hi_h = min(hi, hj), max(hi, hj)
    cc, h, v, d = strip_complex(xs, [0.0, lo, hi_h])

    def cells_for(n, hrow):
        out = []
        for c in range(len(xs) - 1):
            mid = (xs[c] + xs[c + 1]) / 2.0
            if int(mid * 2 * n) % 2 == 1:
                out.append(h[(hrow, c)])
                out.append(h[(0, c)])
        return out

    row_of = {0.0: 0, lo: 1, hi_h: 2}
    a = cells_for(i, row_of[hi])
    b = cells_for(j, row_of[hj])
    return PairItem(cc, mod2_chain(cc, a), mod2_chain(cc, b))


# ---------------------------------------------------------------------------
# thin rectangles: outlines of odd boxes of height 1/n^2


def _build_rectangles(n) -> FamilyItem:
    hh = 1.0 / float(n * n)
    xs0 = [k / (2.0 * n) for k in range(2 * n + 1)]

    def ev(xs):
        odd = [xs[k + 1] - xs[k] for k in range(1, 2 * n, 2)]
        return math.fsum(odd + odd + [hh] * (2 * n))

    target = 1.0 + 2.0 / n
    xs = _snap_x1(xs0, ev, target, f"thin_rectangles n={n}")
    cc, h, v, d = strip_complex(xs, [0.0, hh])
    mult = {}
    for c in range(1, 2 * n, 2):
        mult[h[(0, c)]] = 1
        mult[h[(1, c)]] = 1
        mult[v[(0, c)]] = 1
        mult[v[(0, c + 1)]] = 1
    bottom = [h[(0, c)] for c in range(2 * n)]
    V = varifold(cc, mult)
    return FamilyItem(
        index=n,
        complex=cc,
        varifold=V,
        int_chain=None,
        limit_varifold=varifold(cc, {c: 1 for c in bottom}),
        limit_mod2=zero_mod2(1),
        limit_int=zero_int(1),
        gamma=zero_mod2(0),
        expect={
            "mass": target,
            "fv_total": 4.0 * n * math.sqrt(2.0),
            "flat_bound": 1.0 / (2.0 * n * n),
            "boundary_points": 0,
        },
    )


def _pair_rectangles(i, j) -> PairItem:
    hi, hj = 1.0 / float(i * i), 1.0 / float(j * j)
    xs = sorted(set(k / (2.0 * i) for k in range(2 * i + 1)) |
                set(k / (2.0 * j) for k in range(2 * j + 1)))
    ys = sorted({0.0, hi, hj})
    cc, h, v, d = strip_complex(xs, ys)
    row_of = {y: r for r, y in enumerate(ys)}
    xpos = {x: c for c, x in enumerate(xs)}

    def outline(n, hh):
        cells = []
        top = row_of[hh]
        for c in range(len(xs) - 1):
            mid = (xs[c] + xs[c + 1]) / 2.0
            if int(mid * 2 * n) % 2 == 1:
                cells.append(h[(0, c)])
                cells.append(h[(top, c)])
        # verticals at odd-box ends, stacked through intermediate rows
        for k in range(1, 2 * n, 2):
            for xk in (k / (2.0 * n), (k + 1) / (2.0 * n)):
                c = xpos[xk]
                for r in range(top):
                    cells.append(v[(r, c)])
        return cells

    return PairItem(
        cc, mod2_chain(cc, set(outline(i, hi))), mod2_chain(cc, set(outline(j, hj)))
    )


# ---------------------------------------------------------------------------
# combs: base strip with i teeth


def _boundary_cells(cc: CellComplex):
    """1-cells incident to exactly one fill triangle."""
    count = {}
    fd = cc.chain_dim + 1
    for j in range(cc.n_cells(fd)):
        for f, _ in cc.faces_of(fd, j):
            count[f] = count.get(f, 0) + 1
    return sorted(c for c, k in count.items() if k == 1)


class _PtBook:
    def __init__(self):
        self.ids = {}
        self.pts = []

    def __call__(self, x, y):
        key = (x, y)
        if key not in self.ids:
            self.ids[key] = len(self.pts)
            self.pts.append((x, y))
        return self.ids[key]


def _box_cells(book, x0, x1, y0, y1, cells, fills):
    bl, br = book(x0, y0), book(x1, y0)
    tr, tl = book(x1, y1), book(x0, y1)
    for e in ((bl, br), (tl, tr), (bl, tl), (br, tr), (bl, tr)):
        if e not in cells:
            cells[e] = True
    fills.append((bl, br, tr))
    fills.append((bl, tr, tl))


def _build_comb(i) -> FamilyItem:
    b = 1.0 / (2.0 * i * i)
    w = 1.0 / float(i * i)
    slots = [(k + 0.5) / i - w / 2.0 for k in range(i)]
    xcuts = sorted({0.0, 1.0, *[x for x0 in slots for x in (x0, x0 + w)]})
    book = _PtBook()
    cells: dict = {}
    fills: list = []
    for c in range(len(xcuts) - 1):
        _box_cells(book, xcuts[c], xcuts[c + 1], 0.0, b, cells, fills)
    for x0 in slots:
        _box_cells(book, x0, min(x0 + w, 1.0), b, 1.0, cells, fills)
    cc = build_complex(np.array(book.pts), list(cells), fill_cells=fills)
    outline = _boundary_cells(cc)
    V = varifold(cc, {c: 1 for c in outline})
    area = b + i * w * (1.0 - b)
    perim = 2.0 + 2.0 * b + 2.0 * i * (1.0 - b) if i > 1 else 4.0
    return FamilyItem(
        index=i,
        complex=cc,
        varifold=V,
        int_chain=None,
        limit_varifold=None,
        limit_mod2=zero_mod2(1),
        limit_int=zero_int(1),
        gamma=zero_mod2(0),
        expect={
            "mass_lower": 2.0 * i,
            "flat_bound": 2.0 / i,
            "area": area,
            "perimeter": perim,
        },
    )


# ---------------------------------------------------------------------------
# parallel lines / layered lines


def _build_lines(i, heights, sheet_count, orientation=None, cols=8) -> FamilyItem:
    xs = [c / float(cols) for c in range(cols + 1)]
    cc, h, v, d = strip_complex(xs, heights)
    rows = range(len(heights))
    support = [h[(r, c)] for r in rows for c in range(cols)]
    bottom = [h[(0, c)] for c in range(cols)]
    V = varifold(cc, {c: 1 for c in support})
    n = len(heights)
    ic = None
    li = zero_int(1)
    if orientation is not None:
        coeffs = {}
        for r in rows:
            s = 1 if (orientation == "same" or r % 2 == 0) else -1
            for c in range(cols):
                coeffs[h[(r, c)]] = s
        ic = int_chain(cc, coeffs)
        if orientation == "same":
            li = int_chain(cc, {c: n for c in bottom})
        elif n % 2 == 1:
            li = int_chain(cc, {c: 1 for c in bottom})
    limit_m2 = (
        mod2_chain(cc, bottom) if n % 2 == 1 else zero_mod2(1)
    )
    return FamilyItem(
        index=i,
        complex=cc,
        varifold=V,
        int_chain=ic,
        limit_varifold=varifold(cc, {c: n for c in bottom}),
        limit_mod2=limit_m2,
        limit_int=li,
        gamma=boundary(limit_m2),
        expect={
            "mass": float(n),
            "sheet_count": n,
            "flat_bound": 3.0 / i,
        },
    )


def _build_parallel(i, orientation="opposite") -> FamilyItem:
    return _build_lines(i, [0.0, 1.0 / i], 2, orientation)


def _pair_lines(i, j, heights_of) -> PairItem:
    ys = sorted(set(heights_of(i)) | set(heights_of(j)))
    cols = 8
    xs = [c / float(cols) for c in range(cols + 1)]
    cc, h, v, d = strip_complex(xs, ys)
    row_of = {y: r for r, y in enumerate(ys)}

    def chain_for(n):
        cells = []
        for y in heights_of(n):
            r = row_of[y]
            cells.extend(h[(r, c)] for c in range(cols))
        return mod2_chain(cc, cells)

    return PairItem(cc, chain_for(i), chain_for(j))


# ---------------------------------------------------------------------------
# circles


def _build_settling_circle(i, k=64) -> FamilyItem:
    cc, outer, inner = ring_complex(k, 1.0, 1.0 + 1.0 / i)
    V = varifold(cc, {c: 1 for c in outer})
    side_out = 2.0 * (1.0 + 1.0 / i) * math.sin(math.pi / k)
    limit_c = mod2_chain(cc, inner)
    return FamilyItem(
        index=i,
        complex=cc,
        varifold=V,
        int_chain=None,
        limit_varifold=varifold(cc, {c: 1 for c in inner}),
        limit_mod2=limit_c,
        limit_int=None,
        gamma=zero_mod2(0),
        expect={
            "mass": k * side_out,
            "ring_area": math.pi,  # informational only
        },
    )


def _pair_settling(i, j, k=64) -> PairItem:
    lo, hi = min(1.0 / i, 1.0 / j), max(1.0 / i, 1.0 / j)
    cc, outer, inner = ring_complex(k, 1.0 + lo, 1.0 + hi)
    a, b = (outer, inner) if 1.0 / i >= 1.0 / j else (inner, outer)
    return PairItem(cc, mod2_chain(cc, a), mod2_chain(cc, b))


def _build_shrinking_circle(i, k=64) -> FamilyItem:
    cc, rim = fan_complex(k, 1.0 / i)
    V = varifold(cc, {c: 1 for c in rim})
    return FamilyItem(
        index=i,
        complex=cc,
        varifold=V,
        int_chain=None,
        limit_varifold=None,
        limit_mod2=zero_mod2(1),
        limit_int=zero_int(1),
        gamma=zero_mod2(0),
        expect={"mass": 2.0 * k * math.sin(math.pi / k) / i},
    )


def _pair_shrinking(i, j, k=64) -> PairItem:
    lo, hi = min(1.0 / i, 1.0 / j), max(1.0 / i, 1.0 / j)
    cc, outer, inner = ring_complex(k, lo, hi)
    a, b = (outer, inner) if 1.0 / i >= 1.0 / j else (inner, outer)
    return PairItem(cc, mod2_chain(cc, a), mod2_chain(cc, b))


def _pair_constant(i) -> PairItem:
    item = _build_constant(i)
    return PairItem(item.complex, item.limit_mod2, item.limit_mod2)


def _build_constant(i) -> FamilyItem:
    cc, h, v, d = strip_complex([0.0, 0.5, 1.0], [0.0])
    cells = [h[(0, 0)], h[(0, 1)]]
    V = varifold(cc, {c: 1 for c in cells})
    limit_c = mod2_chain(cc, cells)
    return FamilyItem(
        index=i,
        complex=cc,
        varifold=V,
        int_chain=int_chain(cc, {c: 1 for c in cells}),
        limit_varifold=V,
        limit_mod2=limit_c,
        limit_int=int_chain(cc, {c: 1 for c in cells}),
        gamma=boundary(limit_c),
        expect={"mass": 1.0},
    )


# ---------------------------------------------------------------------------
# registry


def _mk_layer_family(n):
    def heights(i):
        return [j / float(n * i) for j in range(n)]

    return Family(
        name=f"layered_lines_{n}",
        summary=f"{n} parallel lines collapsing onto the base line",
        default_indices=tuple(range(2, 33)),
        build=lambda i: _build_lines(i, heights(i), n),
        pair_build=lambda i, j: _pair_lines(i, j, heights),
        bl_max_diam=lambda i: 0.1,
        windows=(WINDOW_ALL,),
        conv_tol=0.05,
        lemma=LemmaSetup(
            window=Window.ball(np.array([0.5, 0.0]), 0.3),
            sheet_count=n,
            axis_lo=0.2,
            axis_hi=0.8,
            proj=AffineMap.projection(np.array([[1.0, 0.0]])),
        ),
    )


FAMILIES = {
    "alternating_segments": Family(
        name="alternating_segments",
        summary="odd subintervals doubled at two heights; varifold limit "
        "is the full interval but the mod-2 chains stay flat distance 1 away",
        default_indices=tuple(range(2, 33)),
        build=_build_alternating,
        pair_build=_pair_alternating,
        bl_max_diam=lambda n: 1.0 / (2.0 * n),
        windows=(WINDOW_ALL,),
        conv_tol=0.02,
        lemma=None,
    ),
    "thin_rectangles": Family(
        name="thin_rectangles",
        summary="outlines of n thin boxes: cycles with unbounded first "
        "variation whose chains vanish in the flat norm",
        default_indices=tuple(range(2, 17)),
        build=_build_rectangles,
        pair_build=_pair_rectangles,
        bl_max_diam=lambda n: 1.0 / (2.0 * n),
        windows=(WINDOW_ALL,),
        conv_tol=0.02,
        lemma=None,
    ),
    "combs": Family(
        name="combs",
        summary="comb regions whose perimeter grows while the enclosed "
        "area (and hence the flat norm) shrinks",
        default_indices=tuple(range(1, 17)),
        build=_build_comb,
        pair_build=None,
        bl_max_diam=lambda i: 0.25,
        windows=(WINDOW_ALL,),
        conv_tol=0.15,
        lemma=None,
    ),
    "parallel_lines": Family(
        name="parallel_lines",
        summary="two parallel lines meeting in the limit: density two, "
        "mod-2 chain limit zero",
        default_indices=tuple(range(2, 65)),
        build=_build_parallel,
        pair_build=lambda i, j: _pair_lines(i, j, lambda n: [0.0, 1.0 / n]),
        bl_max_diam=lambda i: 0.1,
        windows=(WINDOW_ALL, Window.ball(np.array([0.5, 0.0]), 0.3)),
        conv_tol=0.05,
        lemma=LemmaSetup(
            window=Window.ball(np.array([0.5, 0.0]), 0.3),
            sheet_count=2,
            axis_lo=0.2,
            axis_hi=0.8,
            proj=AffineMap.projection(np.array([[1.0, 0.0]])),
        ),
    ),
    "oriented_pairs_same": Family(
        name="oriented_pairs_same",
        summary="the parallel pair with matching orientations: the integer "
        "chains pile up to twice the base segment instead of cancelling",
        default_indices=tuple(range(2, 65)),
        build=lambda i: _build_parallel(i, "same"),
        pair_build=lambda i, j: _pair_lines(i, j, lambda n: [0.0, 1.0 / n]),
        bl_max_diam=lambda i: 0.1,
        windows=(WINDOW_ALL, Window.ball(np.array([0.5, 0.0]), 0.3)),
        conv_tol=0.05,
        lemma=LemmaSetup(
            window=Window.ball(np.array([0.5, 0.0]), 0.3),
            sheet_count=2,
            axis_lo=0.2,
            axis_hi=0.8,
            proj=AffineMap.projection(np.array([[1.0, 0.0]])),
        ),
    ),
    "layered_lines_1": _mk_layer_family(1),
    "layered_lines_2": _mk_layer_family(2),
    "layered_lines_3": _mk_layer_family(3),
    "settling_circles": Family(
        name="settling_circles",
        summary="regular polygons of radius 1 + 1/i settling onto the "
        "unit circle: every hypothesis holds and the chains converge",
        default_indices=tuple(range(1, 33)),
        build=_build_settling_circle,
        pair_build=_pair_settling,
        bl_max_diam=lambda i: 0.2,
        windows=(WINDOW_ALL,),
        conv_tol=0.25,
        lemma=None,
    ),
    "shrinking_circles": Family(
        name="shrinking_circles",
        summary="polygons of radius 1/i vanishing at a point",
        default_indices=tuple(range(1, 33)),
        build=_build_shrinking_circle,
        pair_build=_pair_shrinking,
        bl_max_diam=lambda i: 0.2,
        windows=(WINDOW_ALL,),
        conv_tol=0.25,
        lemma=None,
    ),
    "constant_segment": Family(
        name="constant_segment",
        summary="a fixed unit segment; every diagnostic is identically zero",
        default_indices=tuple(range(1, 9)),
        build=_build_constant,
        pair_build=lambda i, j: _pair_constant(i),
        bl_max_diam=lambda i: 0.5,
        windows=(WINDOW_ALL,),
        conv_tol=0.02,
        lemma=None,
    ),
}


def get_family(name: str) -> Family:
    try:
        return FAMILIES[name]
    except KeyError:
        raise InvalidInput(
            f"unknown family {name!r}; choices: {', '.join(sorted(FAMILIES))}"
        ) from None
