"""Low-level geometric primitives: simplex measures, window clipping,
tangent planes, and the projector metric on unoriented planes.

Points are plain numpy arrays of shape (N,) with N in {1, 2, 3}; simplices
of dimension m are given by their (m+1) vertex positions as an array of
shape (m+1, N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateCell, DimensionError, InvalidInput

# Absolute floor used in degeneracy checks: a cell is degenerate when its
# measure is <= DEGENERACY_TOL * diameter^m.
DEGENERACY_TOL = 1e-12

# Default relative tolerance for triangle-vs-window clipped areas.
CLIP_TOL = 1e-6

_FACTORIAL = (1.0, 1.0, 2.0, 6.0)


def as_point(coords) -> np.ndarray:
    """Validate and return a point as a float array of shape (N,), N in 1..3."""
    p = np.asarray(coords, dtype=float)
    if p.ndim != 1 or p.shape[0] not in (1, 2, 3):
        raise InvalidInput(f"point must have 1..3 coordinates, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidInput("point coordinates must be finite")
    return p


@dataclass(frozen=True)
class Plane:
    """Unoriented m-plane through the origin, held as an orthonormal basis.

    basis has shape (N, m) with orthonormal columns.
    """

    basis: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 2:
            raise InvalidInput("plane basis must be a 2-d array")
        n, m = b.shape
        if not (1 <= m <= 2 and m <= n <= 3):
            raise DimensionError(f"bad plane shape {b.shape}")
        if not np.allclose(b.T @ b, np.eye(m), atol=1e-9):
            raise InvalidInput("plane basis must be orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        """Orthogonal projector onto the plane (N x N symmetric)."""
        return self.basis @ self.basis.T

    @staticmethod
    def from_span(vectors) -> "Plane":
        """Plane spanned by the rows of `vectors` (must be full rank)."""
        v = np.atleast_2d(np.asarray(vectors, dtype=float))
        q, r = np.linalg.qr(v.T)
        rank = int(np.sum(np.abs(np.diag(r)) > 1e-12 * max(1.0, np.abs(r).max())))
        if rank != v.shape[0]:
            raise DegenerateCell("spanning vectors are linearly dependent")
        return Plane(q[:, : v.shape[0]])


def grassmann_dist(s: Plane, t: Plane) -> float:
    """Frobenius distance between the orthogonal projectors of two planes.

    Bounded by sqrt(2*m); orthogonal lines in the plane are at sqrt(2).
    """
    if s.ambient_dim != t.ambient_dim or s.dim != t.dim:
        raise DimensionError("grassmann_dist requires equal ambient dim and plane dim")
    return float(np.linalg.norm(s.projector() - t.projector()))


@dataclass(frozen=True)
class Window:
    """Open test region: a ball, an axis box, or everything.

    kind: "all" | "ball" | "box". Balls carry (center, radius); boxes carry
    (lo, hi) corners.
    """

    kind: str
    center: np.ndarray | None = None
    radius: float = 0.0
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None

    @staticmethod
    def all() -> "Window":
        return Window("all")

    @staticmethod
    def ball(center, radius: float) -> "Window":
        c = as_point(center)
        if radius <= 0:
            raise InvalidInput("ball radius must be positive")
        return Window("ball", center=c, radius=float(radius))

    @staticmethod
    def box(lo, hi) -> "Window":
        a, b = as_point(lo), as_point(hi)
        if a.shape != b.shape or np.any(a >= b):
            raise InvalidInput("box needs lo < hi componentwise")
        return Window("box", lo=a, hi=b)

    @property
    def ambient_dim(self) -> int | None:
        if self.kind == "ball":
            return self.center.shape[0]
        if self.kind == "box":
            return self.lo.shape[0]
        return None

    def _check_dim(self, n: int):
        d = self.ambient_dim
        if d is not None and d != n:
            raise DimensionError(f"window is {d}-dimensional, points are {n}-dimensional")

    def contains(self, p: np.ndarray) -> bool:
        if self.kind == "all":
            return True
        self._check_dim(p.shape[-1])
        if self.kind == "ball":
            return bool(np.dot(p - self.center, p - self.center) < self.radius**2)
        return bool(np.all(p > self.lo) and np.all(p < self.hi))

    def contains_many(self, pts: np.ndarray) -> np.ndarray:
        if self.kind == "all":
            return np.ones(pts.shape[0], dtype=bool)
        self._check_dim(pts.shape[-1])
        if self.kind == "ball":
            d2 = np.sum((pts - self.center) ** 2, axis=-1)
            return d2 < self.radius**2
        return np.all(pts > self.lo, axis=-1) & np.all(pts < self.hi, axis=-1)

    def label(self) -> str:
        """Stable identifier used in reports (window_id column)."""
        if self.kind == "all":
            return "all"
        if self.kind == "ball":
            coords = ",".join(repr(float(v)) for v in self.center)
            return f"ball:{coords},{self.radius!r}"
        return "box:" + ",".join(repr(float(v)) for v in np.concatenate([self.lo, self.hi]))


WINDOW_ALL = Window.all()


@dataclass(frozen=True)
class AffineMap:
    """Affine map x -> matrix @ x + offset between ambient spaces."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        b = np.asarray(self.offset, dtype=float)
        if m.ndim != 2 or b.ndim != 1 or m.shape[0] != b.shape[0]:
            raise InvalidInput("affine map needs matrix (M,N) and offset (M,)")
        if m.shape[0] not in (1, 2, 3) or m.shape[1] not in (1, 2, 3):
            raise DimensionError("affine map dimensions must be in 1..3")
        if not (np.all(np.isfinite(m)) and np.all(np.isfinite(b))):
            raise InvalidInput("affine map entries must be finite")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", b)

    @property
    def source_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def target_dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + self.offset

    @staticmethod
    def dilation(center, lam: float) -> "AffineMap":
        """Blow-up map y -> (y - center)/lam."""
        c = as_point(center)
        if lam <= 0:
            raise InvalidInput("dilation scale must be positive")
        n = c.shape[0]
        return AffineMap(np.eye(n) / lam, -c / lam)

    @staticmethod
    def projection(matrix) -> "AffineMap":
        m = np.asarray(matrix, dtype=float)
        return AffineMap(m, np.zeros(m.shape[0]))


def simplex_measure(positions) -> float:
    """m-dimensional Hausdorff measure of the simplex with the given
    (m+1, N) vertex positions. Points have measure 1 (counting measure)."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    m = p.shape[0] - 1
    if m == 0:
        return 1.0
    if m > min(3, p.shape[1]):
        raise DimensionError(f"simplex of dim {m} in ambient dim {p.shape[1]}")
    e = p[1:] - p[0]
    if m == 1:
        return float(np.linalg.norm(e[0]))
    gram = e @ e.T
    det = float(np.linalg.det(gram))
    if det < 0:
        det = 0.0
    return math.sqrt(det) / _FACTORIAL[m]


def simplex_diameter(positions) -> float:
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    best = 0.0
    for i in range(p.shape[0]):
        for j in range(i + 1, p.shape[0]):
            best = max(best, float(np.linalg.norm(p[i] - p[j])))
    return best


def is_degenerate(positions) -> bool:
    """True when the simplex measure falls below the degeneracy tolerance."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    m = p.shape[0] - 1
    if m == 0:
        return False
    return simplex_measure(p) <= DEGENERACY_TOL * simplex_diameter(p) ** m


def tangent_plane(positions) -> Plane:
    """Tangent plane (through the origin) of a nondegenerate simplex."""
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    if is_degenerate(p):
        raise DegenerateCell("no tangent plane for a degenerate simplex")
    return Plane.from_span(p[1:] - p[0])


# ---------------------------------------------------------------------------
# window clipping


def _segment_param_interval(a, b, window: Window) -> tuple[float, float]:
    """Parameter range t in [0,1] of the segment a+(b-a)t inside the window."""
    if window.kind == "all":
        return 0.0, 1.0
    d = b - a
    if window.kind == "ball":
        c = window.center
        aa = float(np.dot(d, d))
        if aa == 0.0:
            return (0.0, 1.0) if window.contains(a) else (0.0, 0.0)
        bb = 2.0 * float(np.dot(d, a - c))
        cc = float(np.dot(a - c, a - c)) - window.radius**2
        disc = bb * bb - 4.0 * aa * cc
        if disc <= 0.0:
            return 0.0, 0.0
        sq = math.sqrt(disc)
        t0 = (-bb - sq) / (2.0 * aa)
        t1 = (-bb + sq) / (2.0 * aa)
        return max(0.0, t0), min(1.0, t1)
    # box: Liang-Barsky slab clipping
    t0, t1 = 0.0, 1.0
    for i in range(a.shape[0]):
        lo, hi, ai, di = window.lo[i], window.hi[i], a[i], d[i]
        if di == 0.0:
            if ai <= lo or ai >= hi:
                return 0.0, 0.0
            continue
        ta, tb = (lo - ai) / di, (hi - ai) / di
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
        if t0 >= t1:
            return 0.0, 0.0
    return t0, t1


def _clip_polygon_halfplane(poly, normal, off):
    """Sutherland-Hodgman step: keep the part of poly with normal . x <= off."""
    out = []
    k = len(poly)
    for i in range(k):
        p, q = poly[i], poly[(i + 1) % k]
        dp = float(np.dot(normal, p)) - off
        dq = float(np.dot(normal, q)) - off
        if dp <= 0:
            out.append(p)
            if dq > 0:
                out.append(p + (q - p) * (-dp / (dq - dp)))
        elif dq <= 0:
            out.append(p + (q - p) * (-dp / (dq - dp)))
    return out


def _poly_area(poly) -> float:
    s = 0.0
    k = len(poly)
    for i in range(k):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % k]
        s += x0 * y1 - x1 * y0
    return abs(s) / 2.0


def _disk_poly_area(poly, center, r) -> float:
    """Area of polygon ∩ disk by Green's theorem.

    Each directed edge is split at its circle crossings; pieces inside
    contribute the triangle-with-center term, pieces outside the
    circular-sector term. A straight piece never subtends an angle of pi
    or more from an off-segment point, so the wrapped angle is the true
    sweep. Closed form, so the only error is float rounding.
    """
    total = 0.0
    k = len(poly)
    r2 = r * r
    for i in range(k):
        ax = poly[i][0] - center[0]
        ay = poly[i][1] - center[1]
        bx = poly[(i + 1) % k][0] - center[0]
        by = poly[(i + 1) % k][1] - center[1]
        dx, dy = bx - ax, by - ay
        aa = dx * dx + dy * dy
        if aa <= 0.0:
            continue
        bb = 2.0 * (ax * dx + ay * dy)
        cc = ax * ax + ay * ay - r2
        ts = [0.0, 1.0]
        disc = bb * bb - 4.0 * aa * cc
        if disc > 0.0:
            sq = math.sqrt(disc)
            for t in ((-bb - sq) / (2.0 * aa), (-bb + sq) / (2.0 * aa)):
                if 0.0 < t < 1.0:
                    ts.append(t)
            ts.sort()
        for t0, t1 in zip(ts, ts[1:]):
            if t1 <= t0:
                continue
            tm = 0.5 * (t0 + t1)
            mx, my = ax + tm * dx, ay + tm * dy
            x0, y0 = ax + t0 * dx, ay + t0 * dy
            x1, y1 = ax + t1 * dx, ay + t1 * dy
            if mx * mx + my * my <= r2:
                total += 0.5 * (x0 * y1 - y0 * x1)
            else:
                th = math.atan2(y1, x1) - math.atan2(y0, x0)
                if th > math.pi:
                    th -= 2.0 * math.pi
                elif th < -math.pi:
                    th += 2.0 * math.pi
                total += 0.5 * r2 * th
    return abs(total)


def _triangle_clipped_area(positions, window: Window) -> float:
    p = np.asarray(positions, dtype=float)
    n = p.shape[1]
    area = simplex_measure(p)
    if area == 0.0:
        return 0.0
    # work in the triangle's own plane coordinates
    e = p[1:] - p[0]
    q, _ = np.linalg.qr(e.T)
    u = q[:, :2]  # (N, 2) orthonormal in-plane basis
    tri = [np.zeros(2), (p[1] - p[0]) @ u, (p[2] - p[0]) @ u]
    window._check_dim(n)
    if window.kind == "ball":
        rel = window.center - p[0]
        in_plane = rel @ u
        off2 = float(np.dot(rel, rel) - np.dot(in_plane, in_plane))
        r2 = window.radius**2 - max(off2, 0.0)
        if r2 <= 0.0:
            return 0.0
        return _disk_poly_area(tri, in_plane, math.sqrt(r2))
    poly = tri
    for i in range(n):
        for sgn, bound in ((1.0, window.hi[i]), (-1.0, -window.lo[i])):
            nrm3 = np.zeros(n)
            nrm3[i] = sgn
            n2 = nrm3 @ u
            d2 = bound - sgn * p[0][i]
            if float(np.linalg.norm(n2)) < 1e-14:
                if d2 < 0:
                    return 0.0  # plane entirely outside this slab
                continue
            poly = _clip_polygon_halfplane(poly, n2, d2)
            if len(poly) < 3:
                return 0.0
    return _poly_area(poly)


def clipped_measure(positions, window: Window, tol: float = CLIP_TOL) -> float:
    """H^m measure of the simplex inside the window.

    Closed forms throughout: parameter intervals for segments, polygon
    clipping (boxes) or circular-segment decomposition (balls) for
    triangles. tol is accepted for interface stability; the results are
    exact up to float rounding.
    """
    p = np.atleast_2d(np.asarray(positions, dtype=float))
    m = p.shape[0] - 1
    if window.kind == "all":
        return simplex_measure(p)
    if m == 0:
        return 1.0 if window.contains(p[0]) else 0.0
    if m == 1:
        t0, t1 = _segment_param_interval(p[0], p[1], window)
        if t1 <= t0:
            return 0.0
        return (t1 - t0) * float(np.linalg.norm(p[1] - p[0]))
    if m == 2:
        return _triangle_clipped_area(p, window)
    raise DimensionError("windowed measure supports dimensions 0..2")
