import math
import random

import numpy as np
import pytest

from gmtkit.complexes import (
    POSITION_TOL,
    build_complex,
    common_refinement,
    identity_refinement,
    subdivide,
)
from gmtkit.errors import (
    DegenerateCell,
    DimensionError,
    DuplicateCell,
    InvalidInput,
    MissingFace,
)


def children(rm, parent_idx):
    return tuple(j for j, p in enumerate(rm.cell_parent) if p == parent_idx)


def square_complex():
    """Unit square outline plus two fill triangles."""
    pts = [[0, 0], [1, 0], [1, 1], [0, 1]]
    edges = [[0, 1], [1, 2], [2, 3], [3, 0], [0, 2]]
    tris = [[0, 1, 2], [0, 2, 3]]
    return build_complex(pts, edges, fill_cells=tris)


def test_build_preserves_cell_order():
    cc = square_complex()
    assert cc.chain_dim == 1
    assert [cc.cell(1, i).key for i in range(4)] == [(0, 1), (1, 2), (2, 3), (0, 3)]
    assert cc.n_cells(2) == 2
    assert cc.n_cells(0) == 4


def test_vertex_merging_within_tolerance():
    eps = POSITION_TOL / 10.0
    cc = build_complex([[0, 0], [1, 0], [eps, eps], [eps, 1.0]], [[0, 1], [2, 3]])
    # third vertex collapses onto the first
    assert cc.positions.shape[0] == 3
    with pytest.raises(DuplicateCell):
        # after merging, the two edges would be the same cell
        build_complex([[0, 0], [1, 0], [eps, eps]], [[0, 1], [2, 1]])


def test_duplicate_cells_are_rejected():
    with pytest.raises(DuplicateCell):
        build_complex([[0, 0], [1, 0]], [[0, 1], [1, 0]])


def test_degenerate_cell_rejected():
    with pytest.raises(DegenerateCell):
        build_complex([[0, 0], [POSITION_TOL / 5, 0]], [[0, 1]])
    with pytest.raises(DegenerateCell):
        build_complex([[0, 0], [1, 0], [2, 0]], [[0, 1, 2]], chain_dim=2)


def test_input_validation():
    with pytest.raises(DegenerateCell):
        build_complex([[0, 0], [1, 0]], [[0, 0]])
    with pytest.raises(InvalidInput):
        build_complex([[0, 0], [1, 0]], [[0, 5]])
    with pytest.raises(InvalidInput):
        build_complex(np.zeros((2, 4)), [[0, 1]])
    with pytest.raises(MissingFace):
        build_complex(
            [[0, 0], [1, 0], [0, 1]], [[0, 1], [1, 2]], fill_cells=[[0, 1, 2]]
        )


def test_face_signs_alternate():
    cc = square_complex()
    faces = cc.faces_of(1, 0)  # edge (0,1)
    signs = dict(faces)
    key = cc.cell(1, 0).key
    # d[v0,v1] = [v1] - [v0]
    v0 = cc.cell_index(0, (key[0],))
    v1 = cc.cell_index(0, (key[1],))
    assert signs[v1] == 1 and signs[v0] == -1


def test_boundary_matrix_mod2_column_sums():
    cc = square_complex()
    m = cc.boundary_matrix(1)
    assert m.shape == (4, 5)
    assert set(m.sum(axis=0)) == {2}


def test_subdivide_preserves_measure_and_maps_cells():
    rng = random.Random(3)
    pts = [[rng.uniform(0, 2), rng.uniform(0, 2)] for _ in range(6)]
    pts = np.array(pts)
    edges = [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5]]
    cc = build_complex(pts, edges)
    fine, rm = subdivide(cc, 0.11)
    assert float(np.max(fine.diameters(1))) <= 0.11 + 1e-12
    total = float(np.sum(cc.measures(1)))
    total_fine = float(np.sum(fine.measures(1)))
    assert math.isclose(total, total_fine, rel_tol=1e-12)
    # every coarse cell maps to children covering exactly its measure
    for i in range(cc.n_cells(1)):
        kids = children(rm, i)
        km = sum(fine.measures(1)[k] for k in kids)
        assert math.isclose(km, float(cc.measures(1)[i]), rel_tol=1e-12)


def test_identity_refinement_is_identity():
    cc = square_complex()
    rm = identity_refinement(cc)
    assert rm.cell_parent == tuple(range(cc.n_cells(1)))


def test_common_refinement_carries_both_complexes():
    a = build_complex([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
    b = build_complex([[0.25, 0.0], [0.75, 0.0]], [[0, 1]])
    merged, ra, rb = common_refinement(a, b)
    # children of a's single edge tile [0,1]
    kids = children(ra, 0)
    assert math.isclose(
        sum(float(merged.measures(1)[k]) for k in kids), 1.0, rel_tol=1e-12
    )
    kids_b = children(rb, 0)
    assert math.isclose(
        sum(float(merged.measures(1)[k]) for k in kids_b), 0.5, rel_tol=1e-12
    )
    # b's edge children sit strictly inside a's edge children set
    assert set(kids_b) <= set(kids)


def test_common_refinement_requires_matching_dims():
    a = build_complex([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
    c = build_complex([[0.0], [1.0]], [[0, 1]])
    with pytest.raises(DimensionError):
        common_refinement(a, c)


def test_geometric_key_stable_across_complexes():
    a = build_complex([[0.0, 0.0], [1.0, 0.0]], [[0, 1]])
    b = build_complex([[1.0, 0.0], [0.0, 0.0]], [[1, 0]])
    assert a.geometric_key(1, 0) == b.geometric_key(1, 0)
