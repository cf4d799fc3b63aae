import pytest

from gmtkit.chains import Mod2Chain, boundary, chains_equal, int_chain, mod2_chain
from gmtkit.complexes import build_complex
from gmtkit.errors import InvalidInput
from gmtkit.fileio import (
    chain_payload,
    load_chain,
    load_cert,
    load_complex,
    load_varifold,
    save_chain,
    save_cert,
    save_complex,
    save_varifold,
)
from gmtkit.flatnorm import flat_seminorm
from gmtkit.varifolds import mass, varifold


def fan():
    # ugly coordinates on purpose: the decimals must survive round trips
    pts = [(0.0, 0.0), (0.1 + 0.2, 0.0), (1.0 / 3.0, 2.0 / 3.0), (-0.7, 0.4)]
    edges = [(0, 1), (1, 2), (2, 0), (0, 3), (2, 3)]
    fills = [(0, 1, 2), (0, 2, 3)]
    return build_complex(pts, edges, fills, chain_dim=1)


def test_complex_round_trip_is_a_fixed_point(tmp_path):
    cc = fan()
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_complex(cc, p1)
    save_complex(load_complex(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()
    back = load_complex(p1)
    assert back.n_cells(1) == cc.n_cells(1)
    assert back.n_cells(2) == cc.n_cells(2)
    assert (back.positions == cc.positions).all()


def test_chain_round_trip_both_coefficient_types(tmp_path):
    cc = fan()
    save_complex(cc, tmp_path / "complex.json")
    m2 = mod2_chain(cc, [0, 2, 3])
    zi = int_chain(cc, {0: -2, 4: 3})
    for name, ch in (("m2", m2), ("zi", zi)):
        p1 = tmp_path / f"{name}.json"
        p2 = tmp_path / f"{name}2.json"
        save_chain(ch, p1, "complex.json")
        back = load_chain(p1)
        assert chains_equal(back, ch)
        save_chain(back, p2, "complex.json")
        assert p1.read_bytes() == p2.read_bytes()


def test_boundary_chains_carry_their_dimension(tmp_path):
    cc = fan()
    ch = mod2_chain(cc, [0, 1, 2])
    b = boundary(ch)
    assert b.is_zero  # a closed triangle
    b2 = boundary(mod2_chain(cc, [0, 1]))
    assert chain_payload(b2, "c.json")["dim"] == 0
    assert "dim" not in chain_payload(ch, "c.json")
    save_complex(cc, tmp_path / "c.json")
    save_chain(b2, tmp_path / "b.json", "c.json")
    back = load_chain(tmp_path / "b.json")
    assert back.dim == 0 and chains_equal(back, b2)


def test_varifold_round_trip(tmp_path):
    cc = fan()
    v = varifold(cc, {0: 2, 3: 1})
    save_complex(cc, tmp_path / "complex.json")
    p1, p2 = tmp_path / "v.json", tmp_path / "v2.json"
    save_varifold(v, p1, "complex.json")
    back = load_varifold(p1)
    assert back.mult == v.mult
    assert mass(back) == mass(v)
    save_varifold(back, p2, "complex.json")
    assert p1.read_bytes() == p2.read_bytes()


def test_cert_round_trip(tmp_path):
    cc = fan()
    cert = flat_seminorm(mod2_chain(cc, [0, 1, 2]))
    p1, p2 = tmp_path / "cert.json", tmp_path / "cert2.json"
    save_cert(cert, p1)
    back = load_cert(p1)
    assert back == cert
    save_cert(back, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_relative_complex_reference(tmp_path):
    cc = fan()
    sub = tmp_path / "deep"
    sub.mkdir()
    save_complex(cc, tmp_path / "complex.json")
    ch = mod2_chain(cc, [1])
    save_chain(ch, sub / "chain.json", "../complex.json")
    assert chains_equal(load_chain(sub / "chain.json"), ch)
    # absolute references work too
    save_chain(ch, sub / "abs.json", str(tmp_path / "complex.json"))
    assert chains_equal(load_chain(sub / "abs.json"), ch)


def test_load_chain_with_explicit_complex_skips_the_reference(tmp_path):
    cc = fan()
    p = tmp_path / "chain.json"
    p.write_text('{"coeff_type":"mod2","coeffs":[[1,1]]}\n')
    ch = load_chain(p, cc)
    assert chains_equal(ch, mod2_chain(cc, [1]))
    with pytest.raises(InvalidInput, match="missing field 'complex'"):
        load_chain(p)


def test_chain_without_complex_refuses_to_save(tmp_path):
    orphan = Mod2Chain(complex=None, dim=1, cells=frozenset({0}))
    with pytest.raises(InvalidInput):
        save_chain(orphan, tmp_path / "x.json", "c.json")


def test_malformed_files_name_the_path_and_line(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  broken\n}\n")
    with pytest.raises(InvalidInput, match=r"bad\.json:2: "):
        load_complex(bad)
    arr = tmp_path / "arr.json"
    arr.write_text("[1,2]\n")
    with pytest.raises(InvalidInput, match="expected a JSON object"):
        load_complex(arr)
    with pytest.raises(InvalidInput, match="no such file|No such file"):
        load_complex(tmp_path / "absent.json")


def test_missing_and_ill_typed_fields(tmp_path):
    cc = fan()
    save_complex(cc, tmp_path / "complex.json")
    p = tmp_path / "x.json"
    p.write_text('{"complex":"complex.json","coeffs":[[0,1]]}\n')
    with pytest.raises(InvalidInput, match="missing field 'coeff_type'"):
        load_chain(p)
    p.write_text('{"complex":"complex.json","coeff_type":"float","coeffs":[]}\n')
    with pytest.raises(InvalidInput, match="coeff_type"):
        load_chain(p)
    p.write_text('{"complex":"complex.json","coeff_type":"int","coeffs":[[0]]}\n')
    with pytest.raises(InvalidInput, match="pairs"):
        load_chain(p)
    p.write_text('{"complex":"complex.json","mult":[[0,1],[99,1]]}\n')
    with pytest.raises(InvalidInput, match=r"x\.json: "):
        load_varifold(p)
    p.write_text('{"complex":42,"mult":[]}\n')
    with pytest.raises(InvalidInput, match="must be a path"):
        load_varifold(p)
    q = tmp_path / "c2.json"
    q.write_text(
        '{"ambient_dim":2,"chain_dim":1,"vertices":[[0.0,0.0,0.0]],"cells":[]}\n'
    )
    with pytest.raises(InvalidInput, match="ambient_dim"):
        load_complex(q)
