import math

import pytest

from gmtkit.chains import boundary, chains_equal, mass as chain_mass
from gmtkit.errors import InvalidInput
from gmtkit.families import FAMILIES, get_family
from gmtkit.flatnorm import flat_dist, flat_seminorm
from gmtkit.varifolds import compatible, mass, to_mod2, total_first_variation


def test_registry_lookup():
    assert get_family("alternating_segments").name == "alternating_segments"
    with pytest.raises(InvalidInput):
        get_family("nope")


def test_every_family_builds_consistent_items():
    for name, fam in FAMILIES.items():
        for idx in fam.default_indices[:2]:
            item = fam.build(idx)
            assert item.index == idx
            assert item.varifold.complex is item.complex
            if "mass" in item.expect:
                assert math.isclose(
                    mass(item.varifold), item.expect["mass"], rel_tol=1e-12
                ), name
            # declared boundary limit lives one dimension down
            assert item.gamma.dim == item.complex.chain_dim - 1
            if item.int_chain is not None:
                assert chains_equal(to_mod2(item.varifold), _reduce(item.int_chain))


def _reduce(z):
    from gmtkit.chains import int_to_mod2

    return int_to_mod2(z)


def test_alternating_segments_numbers():
    fam = get_family("alternating_segments")
    for n in (2, 5, 16):
        item = fam.build(n)
        v = item.varifold
        assert mass(v) == 1.0  # snapped exactly
        b = boundary(to_mod2(v))
        assert chain_mass(b) == float(4 * n)
        assert math.isclose(
            total_first_variation(v), item.expect["fv_total"], rel_tol=1e-12
        )
        d = flat_dist(to_mod2(v), item.limit_mod2)
        assert d.exact and d.value == 1.0


def test_thin_rectangles_numbers():
    fam = get_family("thin_rectangles")
    for n in (2, 7, 16):
        item = fam.build(n)
        v = item.varifold
        assert math.isclose(mass(v), 1.0 + 2.0 / n, rel_tol=1e-12)
        assert math.isclose(
            total_first_variation(v), 4.0 * math.sqrt(2.0) * n, rel_tol=1e-12
        )
        assert boundary(to_mod2(v)).is_zero
        cert = flat_seminorm(to_mod2(v))
        assert cert.exact
        assert cert.value <= 1.0 / (2.0 * n * n) + 1e-9
        assert len(cert.filling) > 0  # certificate actually fills


def test_combs_numbers():
    fam = get_family("combs")
    for i in (1, 4, 9):
        item = fam.build(i)
        assert mass(item.varifold) >= 2.0 * i
        cert = flat_seminorm(to_mod2(item.varifold))
        assert cert.exact
        assert cert.value <= 2.0 / i + 1e-9
        assert math.isclose(cert.fill_mass, item.expect["area"], rel_tol=1e-12)


def test_parallel_lines_window_behavior():
    fam = get_family("parallel_lines")
    win = fam.windows[1]
    for i in (2, 10, 32):
        item = fam.build(i)
        assert mass(item.varifold) <= 2.0 + 1e-12
        assert total_first_variation(item.varifold, win) == 0.0
        assert boundary(to_mod2(item.varifold)).is_zero or chain_mass(
            boundary(to_mod2(item.varifold)), win
        ) == 0.0


def test_oriented_pair_limits():
    opp = get_family("parallel_lines").build(8)
    assert opp.limit_int is not None and opp.limit_int.is_zero
    res = compatible(opp.limit_int, opp.limit_varifold)
    assert res.ok and mass(res.witness) > 0.0
    same = get_family("oriented_pairs_same").build(8)
    assert not same.limit_int.is_zero
    res2 = compatible(same.limit_int, same.limit_varifold)
    assert res2.ok and mass(res2.witness) == 0.0


def test_layered_lines_sheet_counts():
    for n in (1, 2, 3):
        fam = get_family(f"layered_lines_{n}")
        assert fam.lemma is not None
        assert fam.lemma.sheet_count == n
        item = fam.build(4)
        assert math.isclose(mass(item.varifold), float(n), rel_tol=1e-12)


def test_circle_families_masses():
    settling = get_family("settling_circles").build(3)
    assert "ring_area" in settling.expect
    shrinking = get_family("shrinking_circles").build(3)
    # inscribed polygon mass approaches 2*pi*r from below
    assert mass(shrinking.varifold) < 2.0 * math.pi / 3.0


def test_pair_builds_share_a_complex():
    fam = get_family("alternating_segments")
    pair = fam.pair_build(2, 3)
    assert pair.chain_a.complex is pair.complex
    assert pair.chain_b.complex is pair.complex
    # consecutive chains stay far apart: the family is not flat-Cauchy
    d = flat_dist(pair.chain_a, pair.chain_b)
    assert d.exact and 0.5 <= d.value <= 2.0
