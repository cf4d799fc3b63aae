"""Integral varifolds carried by the top cells of a complex.

A varifold assigns a positive integer multiplicity to some of the
m-cells. Mass integrates multiplicity against cell measure; the
pointwise density counts sheets through a point (with boundary and
corner fractions); the first variation is the measure of conormal
jumps across (m-1)-faces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .chains import IntChain, Mod2Chain, _push_core
from .complexes import (
    POSITION_TOL,
    CellComplex,
    RefinementMap,
    common_refinement,
    subdivide,
)
from .errors import AtomBudget, DimensionError, InvalidInput
from .geometry import (
    WINDOW_ALL,
    AffineMap,
    Plane,
    Window,
    clipped_measure,
    grassmann_dist,
    tangent_plane,
)

__all__ = [
    "IntegralVarifold",
    "varifold",
    "v_of",
    "to_mod2",
    "mass",
    "density_at",
    "CompatibilityResult",
    "compatible",
    "pushforward",
    "dilate",
    "restrict",
    "transfer_varifold",
    "FirstVariation",
    "first_variation",
    "total_first_variation",
    "VarifoldAtoms",
    "atoms",
    "bl_distance",
]

_TOL = POSITION_TOL


@dataclass(frozen=True)
class IntegralVarifold:
    complex: CellComplex
    mult: tuple  # sorted (cell index, positive int)

    def mult_map(self) -> dict:
        return dict(self.mult)

    @property
    def is_zero(self) -> bool:
        return not self.mult


def varifold(cc: CellComplex, mult) -> IntegralVarifold:
    if isinstance(mult, dict):
        mult = mult.items()
    items = sorted((int(c), int(k)) for c, k in mult if int(k) != 0)
    n = cc.n_cells(cc.chain_dim)
    for c, k in items:
        if not (0 <= c < n):
            raise InvalidInput(f"cell index {c} out of range")
        if k < 1:
            raise InvalidInput("multiplicities must be positive integers")
    return IntegralVarifold(cc, tuple(items))


def v_of(chain) -> IntegralVarifold:
    """The varifold of a chain: multiplicity |coefficient|."""
    if chain.complex is None:
        raise InvalidInput("the zero chain carries no complex")
    if chain.dim != chain.complex.chain_dim:
        raise DimensionError("v(A) needs a top-dimensional chain")
    if isinstance(chain, Mod2Chain):
        return IntegralVarifold(chain.complex, tuple((c, 1) for c in sorted(chain.cells)))
    return IntegralVarifold(
        chain.complex, tuple((c, abs(v)) for c, v in chain.coeffs)
    )


def to_mod2(v: IntegralVarifold) -> Mod2Chain:
    """[V]: the mod-2 chain of the odd-multiplicity cells."""
    return Mod2Chain(
        v.complex, v.complex.chain_dim, frozenset(c for c, k in v.mult if k % 2)
    )


def mass(v: IntegralVarifold, window: Window = WINDOW_ALL) -> float:
    cc = v.complex
    m = cc.chain_dim
    return math.fsum(
        k * clipped_measure(cc.cell_positions(m, c), window) for c, k in v.mult
    )


# ---------------------------------------------------------------------------
# density


def _segment_density_share(pts, x, tol) -> float:
    a, b = pts
    d = b - a
    L2 = float(np.dot(d, d))
    t = float(np.dot(x - a, d)) / L2
    tc = min(1.0, max(0.0, t))
    perp = x - (a + tc * d)
    if float(np.linalg.norm(perp)) > tol:
        return 0.0
    if float(np.linalg.norm(x - a)) <= tol or float(np.linalg.norm(x - b)) <= tol:
        return 0.5
    return 1.0


def _triangle_density_share(pts, x, tol) -> float:
    a, b, c = pts
    u, v = b - a, c - a
    if pts.shape[1] == 3:
        n = np.cross(u, v)
        n = n / np.linalg.norm(n)
        if abs(float(np.dot(x - a, n))) > tol:
            return 0.0
    # in-plane coordinates
    q, _ = np.linalg.qr(np.stack([u, v], axis=1))
    to2 = lambda p: (p - a) @ q
    p2 = to2(x)
    tri = [to2(p) for p in pts]
    # vertex?
    for i in range(3):
        if float(np.linalg.norm(p2 - tri[i])) <= tol:
            e1 = tri[(i + 1) % 3] - tri[i]
            e2 = tri[(i + 2) % 3] - tri[i]
            ang = math.atan2(
                abs(e1[0] * e2[1] - e1[1] * e2[0]), float(np.dot(e1, e2))
            )
            return ang / (2 * math.pi)
    # edge?
    for i in range(3):
        p, r = tri[i], tri[(i + 1) % 3]
        d = r - p
        t = float(np.dot(p2 - p, d)) / float(np.dot(d, d))
        if 0.0 <= t <= 1.0 and float(np.linalg.norm(p2 - (p + t * d))) <= tol:
            return 0.5
    # interior?
    sgn = []
    for i in range(3):
        p, r = tri[i], tri[(i + 1) % 3]
        cr = (r[0] - p[0]) * (p2[1] - p[1]) - (r[1] - p[1]) * (p2[0] - p[0])
        sgn.append(cr)
    if all(s > 0 for s in sgn) or all(s < 0 for s in sgn):
        return 1.0
    return 0.0


def density_at(v: IntegralVarifold, point, tol: float = _TOL) -> float:
    """Pointwise density: sheets through the point, counting a segment
    endpoint or triangle edge as 1/2 and a triangle corner by its angle
    fraction."""
    cc = v.complex
    x = np.asarray(point, dtype=float)
    if x.shape != (cc.ambient_dim,):
        raise DimensionError("point dimension does not match the complex")
    m = cc.chain_dim
    total = 0.0
    for c, k in v.mult:
        pts = cc.cell_positions(m, c)
        share = (
            _segment_density_share(pts, x, tol)
            if m == 1
            else _triangle_density_share(pts, x, tol)
        )
        total += k * share
    return total


# ---------------------------------------------------------------------------
# compatibility


@dataclass(frozen=True)
class CompatibilityResult:
    ok: bool
    witness: IntegralVarifold | None
    offending: tuple  # (cell index, density gap) pairs that break the relation


def compatible(chain: IntChain, v: IntegralVarifold) -> CompatibilityResult:
    """Does V = v(A) + 2W hold for some integral varifold W?

    True exactly when the multiplicity exceeds |coefficient| by a
    nonnegative even amount on every cell (after common refinement).
    """
    if chain.complex is not None and chain.complex is not v.complex:
        merged, ra, rb = common_refinement(chain.complex, v.complex)
        from .chains import transfer

        chain = transfer(chain, ra)
        v = transfer_varifold(v, rb)
    if chain.complex is None:
        amap = {}
    elif isinstance(chain, Mod2Chain):
        amap = {c: 1 for c in chain.cells}
    else:
        amap = {c: abs(val) for c, val in chain.coeffs}
    mult = v.mult_map()
    offending = []
    witness = {}
    for c in sorted(set(amap) | set(mult)):
        gap = mult.get(c, 0) - amap.get(c, 0)
        if gap < 0 or gap % 2:
            offending.append((c, gap))
        elif gap:
            witness[c] = gap // 2
    if offending:
        return CompatibilityResult(False, None, tuple(offending))
    return CompatibilityResult(
        True, IntegralVarifold(v.complex, tuple(sorted(witness.items()))), ()
    )


# ---------------------------------------------------------------------------
# push-forward / dilation / restriction


def pushforward(v: IntegralVarifold, amap: AffineMap) -> IntegralVarifold:
    """Image varifold: multiplicities add over coincident images and
    cells collapsed to lower dimension drop."""
    cc = v.complex
    if not v.mult:
        raise InvalidInput("empty varifold has no image complex")
    ids = [c for c, _ in v.mult]
    ks = [k for _, k in v.mult]
    new_cc, contribs, _ = _push_core(cc, cc.chain_dim, ids, amap)
    if new_cc is None:
        raise InvalidInput("every cell degenerates under this map")
    out = []
    for j, row in enumerate(contribs):
        s = sum(ks[pos] for pos, _ in row)
        if s:
            out.append((j, s))
    return IntegralVarifold(new_cc, tuple(out))


def dilate(v: IntegralVarifold, center, lam: float) -> IntegralVarifold:
    """Blow-up map y -> (y - center)/lam applied to the varifold."""
    center = np.asarray(center, dtype=float)
    return pushforward(v, AffineMap.dilation(center, lam))


def transfer_varifold(v: IntegralVarifold, rm: RefinementMap) -> IntegralVarifold:
    """Multiplicity is a density, so children inherit the parent's."""
    if v.complex is not rm.parent:
        raise InvalidInput("varifold does not live on the refinement's parent")
    mm = v.mult_map()
    out = []
    for i, p in enumerate(rm.cell_parent):
        if p is not None and p in mm:
            out.append((i, mm[p]))
    return IntegralVarifold(rm.child, tuple(out))


def restrict(v: IntegralVarifold, window: Window, max_diam: float) -> IntegralVarifold:
    sub, rm = subdivide(v.complex, max_diam)
    moved = transfer_varifold(v, rm)
    m = sub.chain_dim
    inside = window.contains_many(sub.centroids(m))
    return IntegralVarifold(
        sub, tuple((c, k) for c, k in moved.mult if inside[c])
    )


# ---------------------------------------------------------------------------
# first variation


@dataclass(frozen=True)
class FirstVariation:
    complex: CellComplex
    entries: tuple  # (face index, jump vector, jump norm), faces of dim m-1

    def total(self, window: Window = WINDOW_ALL) -> float:
        cc = self.complex
        fd = cc.chain_dim - 1
        return math.fsum(
            n * clipped_measure(cc.cell_positions(fd, f), window)
            for f, _, n in self.entries
        )


def _conormal(cc: CellComplex, cell_idx: int, face_idx: int) -> np.ndarray:
    """Unit outward conormal of a cell along one of its faces."""
    m = cc.chain_dim
    cell = cc.cells[m][cell_idx]
    face = cc.cells[m - 1][face_idx]
    opp = [v for v in cell.vertices if v not in face.vertices]
    if m == 1:
        v = cc.positions[face.vertices[0]] - cc.positions[opp[0]]
        return v / np.linalg.norm(v)
    a, b = cc.positions[face.vertices[0]], cc.positions[face.vertices[1]]
    e = b - a
    e = e / np.linalg.norm(e)
    w = (a + b) / 2.0 - cc.positions[opp[0]]
    w = w - float(np.dot(w, e)) * e
    return w / np.linalg.norm(w)


def first_variation(v: IntegralVarifold, drop_tol: float = 1e-12) -> FirstVariation:
    """Conormal-jump measure over (m-1)-faces; balanced faces (junctions
    whose weighted conormals cancel) drop below drop_tol."""
    cc = v.complex
    m = cc.chain_dim
    face_cells: dict[int, list] = {}
    mm = v.mult_map()
    for c in mm:
        for f, _ in cc.faces_of(m, c):
            face_cells.setdefault(f, []).append(c)
    entries = []
    for f in sorted(face_cells):
        jump = np.zeros(cc.ambient_dim)
        for c in face_cells[f]:
            jump = jump + mm[c] * _conormal(cc, c, f)
        norm = float(np.linalg.norm(jump))
        if norm > drop_tol:
            entries.append((f, jump, norm))
    return FirstVariation(cc, tuple(entries))


def total_first_variation(v: IntegralVarifold, window: Window = WINDOW_ALL) -> float:
    return first_variation(v).total(window)


# ---------------------------------------------------------------------------
# atoms and bounded-Lipschitz distance


@dataclass(frozen=True)
class VarifoldAtoms:
    points: np.ndarray  # (k, N)
    planes: tuple  # k Planes
    weights: np.ndarray  # (k,)


def atoms(
    v: IntegralVarifold, max_diam: float, atom_limit: int = 2000
) -> VarifoldAtoms:
    """Position-tangent atoms after subdividing to the requested scale."""
    sub, rm = subdivide(v.complex, max_diam)
    moved = transfer_varifold(v, rm)
    if len(moved.mult) > atom_limit:
        raise AtomBudget(
            f"{len(moved.mult)} atoms exceed the limit {atom_limit}"
        )
    m = sub.chain_dim
    pts, pls, ws = [], [], []
    meas = sub.measures(m)
    cents = sub.centroids(m)
    for c, k in moved.mult:
        pts.append(cents[c])
        pls.append(tangent_plane(sub.cell_positions(m, c)))
        ws.append(k * meas[c])
    if not pts:
        return VarifoldAtoms(np.zeros((0, v.complex.ambient_dim)), (), np.zeros(0))
    return VarifoldAtoms(np.array(pts), tuple(pls), np.array(ws))


def _atom_distance(p1, pl1, p2, pl2) -> float:
    return float(np.linalg.norm(p1 - p2)) + grassmann_dist(pl1, pl2)


def bl_distance(
    a: IntegralVarifold,
    b: IntegralVarifold,
    max_diam: float,
    atom_limit: int = 2000,
) -> float:
    """Bounded-Lipschitz distance between atomized varifolds.

    Exact linear program: maximize the weighted-net integral of f over
    functions with |f| <= 1 and Lipschitz constant 1 for the
    position-plus-tangent metric on atoms.
    """
    at_a = atoms(a, max_diam, atom_limit)
    at_b = atoms(b, max_diam, atom_limit)
    # merge coincident atoms so the net weight is what the LP sees
    keyed: dict[tuple, list] = {}

    def put(at: VarifoldAtoms, sign: float):
        for p, pl, w in zip(at.points, at.planes, at.weights):
            key = (
                tuple(np.round(p / _TOL).astype(np.int64)),
                tuple(np.round(pl.projector().ravel() / 1e-9).astype(np.int64)),
            )
            if key in keyed:
                keyed[key][2] += sign * w
            else:
                keyed[key] = [p, pl, sign * w]
    put(at_a, 1.0)
    put(at_b, -1.0)
    entries = [keyed[k] for k in sorted(keyed)]
    nets = np.array([e[2] for e in entries])
    if len(entries) == 0 or np.all(nets == 0.0):
        return 0.0
    k = len(entries)
    import scipy.sparse as sp
    from scipy.optimize import linprog

    rows, cols, data, rhs = [], [], [], []
    r = 0
    for i in range(k):
        for j in range(i + 1, k):
            d = _atom_distance(entries[i][0], entries[i][1], entries[j][0], entries[j][1])
            if d >= 2.0:  # |f_i - f_j| <= 2 already enforced by the box
                continue
            rows += [r, r, r + 1, r + 1]
            cols += [i, j, i, j]
            data += [1.0, -1.0, -1.0, 1.0]
            rhs += [d, d]
            r += 2
    a_ub = (
        sp.csr_matrix((data, (rows, cols)), shape=(r, k)) if r else None
    )
    res = linprog(
        -nets,
        A_ub=a_ub,
        b_ub=np.array(rhs) if r else None,
        bounds=[(-1.0, 1.0)] * k,
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if res.status != 0:
        raise RuntimeError(f"linear program failed: {res.message}")
    return float(-res.fun)
