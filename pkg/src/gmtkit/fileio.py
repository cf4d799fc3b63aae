"""JSON artifacts: complexes, chains, varifolds, flat-norm certificates.

Writers emit a fixed key order and sorted entry lists, so two runs produce
byte-identical files and serialize -> parse -> serialize is a fixed point.
Floats go through Python's shortest round-trip decimal form, which parses
back to the identical bit pattern.

Chain and varifold files reference their complex by path, resolved relative
to the referencing file's directory.  Chains of lower dimension than the
complex (boundaries) carry an extra "dim" key; m-chains omit it.
"""

from __future__ import annotations

import json
import os

from .chains import IntChain, Mod2Chain, int_chain, mod2_chain
from .complexes import CellComplex, build_complex
from .errors import GmtError, InvalidInput
from .flatnorm import FlatNormCert
from .varifolds import IntegralVarifold, varifold

__all__ = [
    "cert_payload",
    "chain_payload",
    "complex_payload",
    "load_chain",
    "load_cert",
    "load_complex",
    "load_varifold",
    "save_chain",
    "save_cert",
    "save_complex",
    "save_varifold",
    "varifold_payload",
]


def _dump(doc, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"), allow_nan=False)
        fh.write("\n")


def _read(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as err:
        raise InvalidInput(f"{path}: {err.strerror or err}")
    except json.JSONDecodeError as err:
        raise InvalidInput(f"{path}:{err.lineno}: {err.msg}")
    if not isinstance(doc, dict):
        raise InvalidInput(f"{path}: expected a JSON object")
    return doc


def _need(doc, path, key):
    if key not in doc:
        raise InvalidInput(f"{path}: missing field {key!r}")
    return doc[key]


def _resolve(path, ref) -> str:
    if not isinstance(ref, str) or not ref:
        raise InvalidInput(f"{path}: field 'complex' must be a path")
    if os.path.isabs(ref):
        return ref
    return os.path.join(os.path.dirname(os.path.abspath(path)), ref)


# ---------------------------------------------------------------------------
# complexes


def complex_payload(cc: CellComplex) -> dict:
    m = cc.chain_dim
    return {
        "ambient_dim": cc.ambient_dim,
        "chain_dim": m,
        "vertices": [[float(x) for x in p] for p in cc.positions],
        "cells": [list(s.key) for s in cc.cells[m]],
        "fill_cells": [list(s.key) for s in cc.cells.get(m + 1, ())],
    }


def save_complex(cc: CellComplex, path) -> None:
    _dump(complex_payload(cc), path)


def load_complex(path) -> CellComplex:
    doc = _read(path)
    for key in ("ambient_dim", "chain_dim", "vertices", "cells"):
        _need(doc, path, key)
    verts = doc["vertices"]
    if not isinstance(verts, list) or not all(
        isinstance(p, list) and len(p) == doc["ambient_dim"] for p in verts
    ):
        raise InvalidInput(
            f"{path}: field 'vertices' does not match ambient_dim"
        )
    try:
        return build_complex(
            verts,
            doc["cells"],
            doc.get("fill_cells", ()),
            chain_dim=doc["chain_dim"],
        )
    except GmtError as err:
        raise InvalidInput(f"{path}: {err}")


# ---------------------------------------------------------------------------
# chains


def chain_payload(chain, complex_ref: str) -> dict:
    if isinstance(chain, Mod2Chain):
        kind = "mod2"
        coeffs = [[int(c), 1] for c in sorted(chain.cells)]
    elif isinstance(chain, IntChain):
        kind = "int"
        coeffs = [[int(c), int(q)] for c, q in sorted(chain.coeffs)]
    else:
        raise InvalidInput("only mod-2 and integer chains serialize")
    doc = {"complex": complex_ref, "coeff_type": kind, "coeffs": coeffs}
    if chain.complex is not None and chain.dim != chain.complex.chain_dim:
        doc["dim"] = chain.dim
    return doc


def save_chain(chain, path, complex_ref: str) -> None:
    if chain.complex is None:
        raise InvalidInput("a chain without a complex cannot be saved")
    _dump(chain_payload(chain, complex_ref), path)


def load_chain(path, cc: CellComplex | None = None):
    doc = _read(path)
    kind = _need(doc, path, "coeff_type")
    raw = _need(doc, path, "coeffs")
    if cc is None:
        cc = load_complex(_resolve(path, _need(doc, path, "complex")))
    dim = doc.get("dim", cc.chain_dim)
    if not isinstance(raw, list) or not all(
        isinstance(e, list) and len(e) == 2 for e in raw
    ):
        raise InvalidInput(f"{path}: field 'coeffs' must be [cellId, coeff] pairs")
    try:
        if kind == "mod2":
            return mod2_chain(cc, [c for c, q in raw if q % 2], dim=dim)
        if kind == "int":
            return int_chain(cc, {c: q for c, q in raw}, dim=dim)
    except GmtError as err:
        raise InvalidInput(f"{path}: {err}")
    raise InvalidInput(f"{path}: field 'coeff_type' must be 'mod2' or 'int'")


# ---------------------------------------------------------------------------
# varifolds


def varifold_payload(v: IntegralVarifold, complex_ref: str) -> dict:
    return {
        "complex": complex_ref,
        "mult": [[int(c), int(k)] for c, k in v.mult],
    }


def save_varifold(v: IntegralVarifold, path, complex_ref: str) -> None:
    _dump(varifold_payload(v, complex_ref), path)


def load_varifold(path, cc: CellComplex | None = None) -> IntegralVarifold:
    doc = _read(path)
    raw = _need(doc, path, "mult")
    if cc is None:
        cc = load_complex(_resolve(path, _need(doc, path, "complex")))
    if not isinstance(raw, list) or not all(
        isinstance(e, list) and len(e) == 2 for e in raw
    ):
        raise InvalidInput(f"{path}: field 'mult' must be [cellId, k] pairs")
    try:
        return varifold(cc, {c: k for c, k in raw})
    except GmtError as err:
        raise InvalidInput(f"{path}: {err}")


# ---------------------------------------------------------------------------
# flat-norm certificates


def cert_payload(cert: FlatNormCert) -> dict:
    return {
        "method": cert.method,
        "value": float(cert.value),
        "residual_mass": float(cert.residual_mass),
        "fill_mass": float(cert.fill_mass),
        "filling": [[int(c), int(q)] for c, q in sorted(cert.filling)],
        "exact": bool(cert.exact),
    }


def save_cert(cert: FlatNormCert, path) -> None:
    _dump(cert_payload(cert), path)


def load_cert(path) -> FlatNormCert:
    doc = _read(path)
    for key in ("method", "value", "filling", "exact"):
        _need(doc, path, key)
    return FlatNormCert(
        value=float(doc["value"]),
        residual_mass=float(doc.get("residual_mass", 0.0)),
        fill_mass=float(doc.get("fill_mass", 0.0)),
        filling=tuple((int(c), int(q)) for c, q in doc["filling"]),
        method=str(doc["method"]),
        exact=bool(doc["exact"]),
    )
