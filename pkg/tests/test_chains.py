import math
import random

import numpy as np
import pytest

from gmtkit.chains import (
    as_atoms,
    atom_chains_equal,
    boundary,
    boundary_atoms,
    chains_equal,
    int_chain,
    int_to_mod2,
    mass,
    mod2_chain,
    pushforward,
    restrict,
    support,
    transfer,
    zero_int,
    zero_mod2,
)
from gmtkit.complexes import build_complex, common_refinement, subdivide
from gmtkit.errors import DimensionError, InvalidInput
from gmtkit.families import fan_complex, ring_complex, strip_complex
from gmtkit.geometry import AffineMap, Window


def random_strip(rng, max_cols=4, max_rows=3):
    xs = sorted(rng.uniform(0, 3) for _ in range(rng.randint(2, max_cols)))
    ys = sorted(rng.uniform(0, 2) for _ in range(rng.randint(2, max_rows)))
    while min(b - a for a, b in zip(xs, xs[1:])) < 1e-3:
        xs = sorted(rng.uniform(0, 3) for _ in range(len(xs)))
    while min(b - a for a, b in zip(ys, ys[1:])) < 1e-3:
        ys = sorted(rng.uniform(0, 2) for _ in range(len(ys)))
    return strip_complex(xs, ys)[0]


def test_boundary_of_boundary_vanishes_randomly():
    rng = random.Random(202)
    for _ in range(300):
        cc = random_strip(rng)
        k = cc.n_cells(2)
        # random 2-chain over the triangles
        picks = [i for i in range(k) if rng.random() < 0.5]
        c2 = mod2_chain(cc, picks, dim=2)
        bb = boundary(boundary(c2))
        assert bb.is_zero
        coeffs = [(i, rng.randint(-3, 3)) for i in picks]
        z2 = int_chain(cc, [(i, q) for i, q in coeffs if q], dim=2)
        assert boundary(boundary(z2)).is_zero


def test_boundary_known_shapes():
    cc, rim = fan_complex(8, 1.0)
    loop = mod2_chain(cc, rim)
    assert boundary(loop).is_zero
    seg = build_complex([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [[0, 1], [1, 2]])
    c = mod2_chain(seg, [0, 1])
    b = boundary(c)
    assert mass(b) == 2.0  # counting measure on endpoints
    ic = int_chain(seg, [(0, 1), (1, 1)])
    ib = boundary(ic)
    assert mass(ib) == 2.0
    # signed telescoping: interior vertex cancels
    assert sorted(q for _, q in ib.coeffs) == [-1, 1]


def test_int_boundary_commutes_with_mod2_reduction():
    rng = random.Random(7)
    for _ in range(100):
        cc = random_strip(rng)
        k = cc.n_cells(2)
        coeffs = [(i, rng.randint(-2, 2)) for i in range(k) if rng.random() < 0.6]
        z = int_chain(cc, [(i, q) for i, q in coeffs if q], dim=2)
        left = int_to_mod2(boundary(z))
        right = boundary(int_to_mod2(z))
        assert chains_equal(left, right)


def test_mass_windowed():
    seg = build_complex([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
    c = mod2_chain(seg, [0])
    assert mass(c) == 1.0
    w = Window.box([0.25, -1.0], [0.75, 1.0])
    assert math.isclose(mass(c, w), 0.5, rel_tol=1e-12)
    z = int_chain(seg, [(0, 3)])
    assert math.isclose(mass(z, w), 1.5, rel_tol=1e-12)


def test_zero_chains():
    assert zero_mod2(1).is_zero
    assert zero_int(1).is_zero
    assert mass(zero_mod2(1)) == 0.0
    assert boundary(zero_mod2(1)).is_zero
    assert support(zero_int(1)) == ()


def test_transfer_preserves_mass_and_boundary():
    rng = random.Random(13)
    for _ in range(40)[:40]:
        cc = random_strip(rng, max_cols=3, max_rows=2)
        fine, rm = subdivide(cc, 0.3)
        ids = [i for i in range(cc.n_cells(1)) if rng.random() < 0.5]
        c = mod2_chain(cc, ids)
        t = transfer(c, rm)
        assert math.isclose(mass(t), mass(c), rel_tol=1e-9, abs_tol=1e-12)
        assert atom_chains_equal(boundary_atoms(t), boundary_atoms(c))
        z = int_chain(cc, [(i, rng.randint(-2, 2)) for i in ids])
        tz = transfer(z, rm)
        assert math.isclose(mass(tz), mass(z), rel_tol=1e-9, abs_tol=1e-12)
        assert atom_chains_equal(boundary_atoms(tz), boundary_atoms(z))


def test_chains_equal_across_complexes():
    a = build_complex([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
    b = build_complex([[0.0, 0.0], [0.5, 0.0], [1.0, 0.0]], [[0, 1], [1, 2]])
    ca = mod2_chain(a, [0])
    cb = mod2_chain(b, [0, 1])
    assert chains_equal(ca, cb)
    cb_half = mod2_chain(b, [0])
    assert not chains_equal(ca, cb_half)


def test_pushforward_isometry_preserves_mass():
    rng = random.Random(31)
    theta = 0.7
    rot = AffineMap(
        np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]),
        np.array([0.3, -0.2]),
    )
    for _ in range(30):
        cc = random_strip(rng, max_cols=3, max_rows=2)
        ids = [i for i in range(cc.n_cells(1)) if rng.random() < 0.5]
        c = mod2_chain(cc, ids)
        fc = pushforward(c, rot)
        assert math.isclose(mass(fc), mass(c), rel_tol=1e-9, abs_tol=1e-12)


def test_pushforward_commutes_with_boundary():
    rng = random.Random(47)
    amap = AffineMap(np.array([[1.0, 0.5], [0.0, 0.5]]), np.array([0.1, 0.0]))
    for _ in range(50):
        cc = random_strip(rng, max_cols=3, max_rows=2)
        ids = [i for i in range(cc.n_cells(1)) if rng.random() < 0.4]
        for chain in (
            mod2_chain(cc, ids),
            int_chain(cc, [(i, rng.randint(-2, 2)) for i in ids]),
        ):
            left = boundary_atoms(pushforward(chain, amap))
            moved = pushforward(boundary(chain), amap)  # 0-chains land as atoms
            assert atom_chains_equal(left, moved)


def test_pushforward_projection_cancels_mod2_doubles():
    # two copies of the same interval at different heights collapse onto
    # one segment; mod 2 they cancel, with integer signs they add
    cc = build_complex(
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], [[0, 1], [2, 3]]
    )
    proj = AffineMap.projection(np.array([[1.0, 0.0]]))
    m = pushforward(mod2_chain(cc, [0, 1]), proj)
    assert m.is_zero
    z = pushforward(int_chain(cc, [(0, 1), (1, 1)]), proj)
    assert mass(z) == 2.0
    z2 = pushforward(int_chain(cc, [(0, 1), (1, -1)]), proj)
    assert z2.is_zero


def test_pushforward_degenerate_cells_drop():
    cc = build_complex([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
    # project onto the axis orthogonal to the segment: image has measure 0
    proj = AffineMap.projection(np.array([[0.0, 1.0]]))
    img = pushforward(mod2_chain(cc, [0]), proj)
    assert img.is_zero


def test_restrict_window():
    cc = build_complex([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [[0, 1], [1, 2]])
    c = mod2_chain(cc, [0, 1])
    r = restrict(c, Window.box([-0.5, -0.5], [0.9, 0.5]), max_diam=0.05)
    assert 0.85 <= mass(r) <= 0.9
    full = restrict(c, Window.ball([1.0, 0.0], 10.0), max_diam=10.0)
    assert math.isclose(mass(full), 2.0, rel_tol=1e-12)


def test_dimension_checks():
    cc = build_complex([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
    with pytest.raises(InvalidInput):
        mod2_chain(cc, [5])
    with pytest.raises(InvalidInput):
        mod2_chain(cc, [0], dim=3)  # no cells at that dimension
