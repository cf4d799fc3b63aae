"""Independent reference implementations used to cross-check the package.

Everything here is written from scratch against the definitions, not by
calling into gmtkit, so a bug would have to occur twice to go unnoticed.
The flat-norm oracle enumerates every filling; keep the inputs tiny.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------------------
# measures


def measure(pts) -> float:
    """k-dim Hausdorff measure of a simplex from its vertex rows."""
    p = np.atleast_2d(np.asarray(pts, dtype=float))
    k = p.shape[0] - 1
    if k == 0:
        return 1.0
    e = p[1:] - p[0]
    gram = e @ e.T
    det = max(float(np.linalg.det(gram)), 0.0)
    return math.sqrt(det) / math.factorial(k)


def segment_ball_length(a, b, center, r) -> float:
    """Length of segment [a,b] inside the open ball, via the quadratic."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    c = np.asarray(center, float)
    d = b - a
    f = a - c
    A = float(d @ d)
    if A == 0.0:
        return 0.0
    B = 2.0 * float(f @ d)
    C = float(f @ f) - r * r
    disc = B * B - 4 * A * C
    if disc <= 0.0:
        return 0.0
    s = math.sqrt(disc)
    t0 = max(0.0, (-B - s) / (2 * A))
    t1 = min(1.0, (-B + s) / (2 * A))
    return max(0.0, t1 - t0) * math.sqrt(A)


def triangle_ball_area_mc(tri, center, r, n=200_000, seed=7) -> float:
    """Monte-Carlo area of triangle∩ball; standard error ~ area/sqrt(n)."""
    rng = np.random.default_rng(seed)
    a, b, c = (np.asarray(p, float) for p in tri)
    u = rng.random(n)
    v = rng.random(n)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    pts = a + np.outer(u, b - a) + np.outer(v, c - a)
    inside = np.sum((pts - np.asarray(center, float)) ** 2, axis=1) < r * r
    return measure([a, b, c]) * float(np.mean(inside))


# ---------------------------------------------------------------------------
# brute-force flat norm on explicit simplex data


def _faces_signed(cell):
    for i in range(len(cell)):
        yield (-1) ** i, tuple(cell[:i] + cell[i + 1 :])


def brute_flat_mod2(vertices, cells, fills, chain_cells, contained=None):
    """Minimum of mass(chain - dF) + mass(F) over all mod-2 fillings F.

    `cells` are the chain-dimension simplices (vertex id tuples), `fills`
    one dimension up.  `contained(simplex_pts) -> weight` localizes masses
    to a window; defaults to full measure.
    """
    vertices = np.asarray(vertices, float)
    weigh = contained or (lambda pts: measure(pts))
    cell_w = [weigh(vertices[list(c)]) for c in cells]
    fill_w = [weigh(vertices[list(f)]) for f in fills]
    cell_pos = {tuple(sorted(c)): i for i, c in enumerate(cells)}
    target = set(chain_cells)
    best = math.inf
    for picks in itertools.product([0, 1], repeat=len(fills)):
        residual = set(target)
        cost = 0.0
        for j, take in enumerate(picks):
            if not take:
                continue
            cost += fill_w[j]
            for _, face in _faces_signed(fills[j]):
                idx = cell_pos[tuple(sorted(face))]
                residual ^= {idx}
        cost += sum(cell_w[i] for i in residual)
        best = min(best, cost)
    return best


def brute_flat_int(vertices, cells, fills, coeffs, max_coeff, contained=None):
    """Integer version; `coeffs` maps cell position -> coefficient."""
    vertices = np.asarray(vertices, float)
    weigh = contained or (lambda pts: measure(pts))
    cell_w = [weigh(vertices[list(c)]) for c in cells]
    fill_w = [weigh(vertices[list(f)]) for f in fills]
    key_of = {tuple(sorted(c)): i for i, c in enumerate(cells)}
    sign_of = {}
    for i, c in enumerate(cells):
        sign_of[i] = _perm_sign(c)
    bd_rows = []
    for f in fills:
        row = {}
        for s, face in _faces_signed(f):
            i = key_of[tuple(sorted(face))]
            row[i] = row.get(i, 0) + s * _perm_sign(face) * sign_of[i]
        bd_rows.append(row)
    domain = range(-max_coeff, max_coeff + 1)
    best = math.inf
    for picks in itertools.product(domain, repeat=len(fills)):
        residual = dict(coeffs)
        cost = 0.0
        for j, q in enumerate(picks):
            if q == 0:
                continue
            cost += abs(q) * fill_w[j]
            for i, s in bd_rows[j].items():
                residual[i] = residual.get(i, 0) + q * s
        cost += sum(abs(v) * cell_w[i] for i, v in residual.items())
        best = min(best, cost)
    return best


def _perm_sign(seq):
    """Parity of the permutation sorting `seq`."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[j] < seq[i]:
                seq[i], seq[j] = seq[j], seq[i]
                sign = -sign
    return sign


# ---------------------------------------------------------------------------
# bounded-Lipschitz closed forms


def bl_two_points(w, d) -> float:
    """BL distance between w*delta_p and w*delta_q at atom distance d."""
    return w * min(d, 2.0)


def circle_radius_mcf(t, r0=1.0) -> float:
    """Shrinking-circle radius under curve shortening."""
    return math.sqrt(max(r0 * r0 - 2.0 * t, 0.0))
