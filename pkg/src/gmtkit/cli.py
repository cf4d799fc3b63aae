"""Command-line front end.

One subcommand per operation; every input is a JSON file in the formats of
`fileio` and every result is printed to stdout as a single JSON document
(CSV for the tabular reports when --format csv is given).  Writing the same
artifact twice produces identical bytes, and parse -> serialize is a fixed
point, so outputs can be diffed.

Exit codes: 0 on success, 2 for bad arguments or invalid input files, 3 when
a verification run ends in a theorem violation or a flow run trips one of
its diagnostics.  Reports that were requested with --out are still written
before a 3.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys

import numpy as np

from . import chains as ch
from . import convergence as cv
from . import fileio
from . import mcf
from . import varifolds as vf
from .errors import FlowDiagnosticFailure, GmtError, InvalidInput
from .families import FAMILIES, get_family
from .flatnorm import SolverBudget, flat_dist, flat_seminorm
from .geometry import WINDOW_ALL, AffineMap, Window

__all__ = ["main"]


# ---------------------------------------------------------------------------
# flag parsing helpers


def _parse_window(text: str | None) -> Window:
    if text is None or text == "all":
        return WINDOW_ALL
    kind, sep, rest = text.partition(":")
    try:
        vals = [float(tok) for tok in rest.split(",")] if sep else []
    except ValueError:
        raise InvalidInput(f"window {text!r}: coordinates must be numbers")
    if kind == "ball" and len(vals) >= 2:
        return Window.ball(vals[:-1], vals[-1])
    if kind == "box" and len(vals) >= 2 and len(vals) % 2 == 0:
        half = len(vals) // 2
        return Window.box(vals[:half], vals[half:])
    raise InvalidInput(
        f"window {text!r}: expected all, ball:cx,cy,r or box:x0,y0,x1,y1"
    )


def _parse_range(text: str | None) -> tuple | None:
    if text is None:
        return None
    lo, sep, hi = text.partition("..")
    try:
        if not sep:
            return (int(lo),)
        a, b = int(lo), int(hi)
    except ValueError:
        raise InvalidInput(f"range {text!r}: expected an integer or lo..hi")
    if a > b:
        raise InvalidInput(f"range {text!r}: lower end exceeds upper end")
    return tuple(range(a, b + 1))


def _parse_point(text: str, label: str) -> tuple:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError:
        raise InvalidInput(f"{label} {text!r}: expected comma-separated numbers")


def _parse_matrix(text: str) -> np.ndarray:
    try:
        rows = [[float(tok) for tok in row.split(",")] for row in text.split(";")]
    except ValueError:
        raise InvalidInput(f"matrix {text!r}: entries must be numbers")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInput(f"matrix {text!r}: rows have unequal length")
    return np.array(rows, dtype=float)


def _parse_rays(text: str) -> tuple:
    rays = []
    for part in text.split(";"):
        toks = part.split(",")
        if len(toks) != 3:
            raise InvalidInput(
                f"rays {text!r}: each entry must be dx,dy,mult separated by ';'"
            )
        try:
            rays.append(((float(toks[0]), float(toks[1])), int(toks[2])))
        except ValueError:
            raise InvalidInput(f"rays {text!r}: expected dx,dy numeric and mult integer")
    return tuple(rays)


def _budget_from(args) -> SolverBudget | None:
    fields = {}
    if getattr(args, "budget", None) is not None:
        fields["max_nodes"] = args.budget
    if getattr(args, "max_coeff", None) is not None:
        fields["max_coeff"] = args.max_coeff
    if getattr(args, "method", None) is not None:
        fields["method"] = args.method
    return SolverBudget(**fields) if fields else None


# ---------------------------------------------------------------------------
# input/output helpers


def _require_files(*paths):
    """Fail before any computation when an input path is not a file."""
    for p in paths:
        if p is not None and not os.path.isfile(p):
            raise InvalidInput(f"{p}: no such file")


def _out_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _prepare_out(path: str | None):
    if path:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)


def _plain(x):
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _emit(doc: dict, out: str | None = None) -> None:
    text = json.dumps(_plain(doc), separators=(",", ":"), allow_nan=False)
    if out:
        _prepare_out(out)
        with open(out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _complex_ref(artifact_path: str) -> str:
    """Absolute path of the complex a chain/varifold file points at."""
    doc = fileio._read(artifact_path)
    fileio._need(doc, artifact_path, "complex")
    return fileio._resolve(artifact_path, doc["complex"])


def _ref_from(out: str | None, complex_path: str) -> str:
    base = os.path.dirname(os.path.abspath(out)) if out else os.getcwd()
    return os.path.relpath(os.path.abspath(complex_path), base)


def _load_mass_target(path: str):
    doc = fileio._read(path)
    if "mult" in doc:
        return "varifold", fileio.load_varifold(path)
    if "coeffs" in doc:
        return "chain", fileio.load_chain(path)
    raise InvalidInput(f"{path}: missing field 'mult' or 'coeffs'")


# ---------------------------------------------------------------------------
# artifact commands


def _cmd_gen(args) -> int:
    fam = get_family(args.family)
    item = fam.build(args.index)
    out = _out_dir(args.out)
    fileio.save_complex(item.complex, os.path.join(out, "complex.json"))
    fileio.save_varifold(item.varifold, os.path.join(out, "varifold.json"), "complex.json")
    meta = {
        "family": fam.name,
        "index": args.index,
        "summary": fam.summary,
        "expected": _plain(dict(sorted(item.expect.items()))),
    }
    fileio._dump(meta, os.path.join(out, "metadata.json"))
    _emit({"dir": out, "written": ["complex.json", "varifold.json", "metadata.json"]})
    return 0


def _cmd_boundary(args) -> int:
    _require_files(args.chain)
    _prepare_out(args.out)
    chain = fileio.load_chain(args.chain)
    cpath = _complex_ref(args.chain)
    result = ch.boundary(chain)
    ref = _ref_from(args.out, cpath)
    if args.out:
        fileio.save_chain(result, args.out, ref)
    _emit(fileio.chain_payload(result, ref))
    return 0


def _cmd_mass(args) -> int:
    _require_files(args.input)
    window = _parse_window(args.window)
    kind, obj = _load_mass_target(args.input)
    value = vf.mass(obj, window) if kind == "varifold" else ch.mass(obj, window)
    _emit({"kind": kind, "window": window.label(), "mass": value}, args.out)
    return 0


def _cmd_flatnorm(args) -> int:
    _require_files(args.chain, args.fill)
    _prepare_out(args.out)
    chain = fileio.load_chain(args.chain)
    fill = fileio.load_complex(args.fill) if args.fill else None
    cert = flat_seminorm(
        chain, _parse_window(args.window), _budget_from(args), fill_complex=fill
    )
    if args.out:
        fileio.save_cert(cert, args.out)
    _emit(fileio.cert_payload(cert))
    return 0


def _cmd_flatdist(args) -> int:
    _require_files(args.a, args.b, args.fill)
    _prepare_out(args.out)
    a = fileio.load_chain(args.a)
    b = fileio.load_chain(args.b)
    fill = fileio.load_complex(args.fill) if args.fill else None
    cert = flat_dist(
        a, b, _parse_window(args.window), _budget_from(args), fill_complex=fill
    )
    if args.out:
        fileio.save_cert(cert, args.out)
    _emit(fileio.cert_payload(cert))
    return 0


def _cmd_bldist(args) -> int:
    _require_files(args.a, args.b)
    a = fileio.load_varifold(args.a)
    b = fileio.load_varifold(args.b)
    value = vf.bl_distance(a, b, args.max_diam, atom_limit=args.atom_limit)
    _emit({"max_diam": args.max_diam, "value": value}, args.out)
    return 0


def _cmd_density(args) -> int:
    _require_files(args.varifold)
    v = fileio.load_varifold(args.varifold)
    point = _parse_point(args.point, "point")
    value = (
        vf.density_at(v, point)
        if args.tol is None
        else vf.density_at(v, point, tol=args.tol)
    )
    _emit({"point": list(point), "density": value}, args.out)
    return 0


def _cmd_pushforward(args) -> int:
    _require_files(args.varifold)
    v = fileio.load_varifold(args.varifold)
    matrix = _parse_matrix(args.matrix)
    offset = (
        np.zeros(matrix.shape[0])
        if args.offset is None
        else np.array(_parse_point(args.offset, "offset"))
    )
    image = vf.pushforward(v, AffineMap(matrix, offset))
    return _write_varifold_dir(image, args.out)


def _cmd_dilate(args) -> int:
    _require_files(args.varifold)
    v = fileio.load_varifold(args.varifold)
    center = _parse_point(args.center, "center")
    image = vf.dilate(v, center, args.scale)
    return _write_varifold_dir(image, args.out)


def _write_varifold_dir(v, out: str) -> int:
    out = _out_dir(out)
    fileio.save_complex(v.complex, os.path.join(out, "complex.json"))
    fileio.save_varifold(v, os.path.join(out, "varifold.json"), "complex.json")
    _emit({"dir": out, "mass": vf.mass(v), "written": ["complex.json", "varifold.json"]})
    return 0


def _cmd_tomod2(args) -> int:
    _require_files(args.varifold)
    _prepare_out(args.out)
    v = fileio.load_varifold(args.varifold)
    cpath = _complex_ref(args.varifold)
    chain = vf.to_mod2(v)
    ref = _ref_from(args.out, cpath)
    if args.out:
        fileio.save_chain(chain, args.out, ref)
    _emit(fileio.chain_payload(chain, ref))
    return 0


def _cmd_compat(args) -> int:
    _require_files(args.chain, args.varifold)
    chain = fileio.load_chain(args.chain)
    v = fileio.load_varifold(args.varifold)
    res = vf.compatible(chain, v)
    _emit(
        {
            "ok": res.ok,
            "witnessMass": None if res.witness is None else vf.mass(res.witness),
            "offending": [[c, g] for c, g in res.offending],
        },
        args.out,
    )
    return 0


def _cmd_firstvar(args) -> int:
    _require_files(args.varifold)
    v = fileio.load_varifold(args.varifold)
    window = _parse_window(args.window)
    _emit({"window": window.label(), "total": vf.total_first_variation(v, window)}, args.out)
    return 0


# ---------------------------------------------------------------------------
# verification commands


def _spec_from(args) -> cv.SequenceSpec:
    windows = None
    if getattr(args, "window", None) is not None:
        windows = (_parse_window(args.window),)
    return cv.SequenceSpec(
        family=args.family,
        indices=_parse_range(args.range),
        windows=windows,
        budget=_budget_from(args),
        tol=args.tol,
        allow_inexact=getattr(args, "allow_inexact", False),
    )


def _verify_task(task):
    kind, spec, index = task
    if kind == "integer":
        return cv.integer_row_for_index(spec, index)
    if kind == "lemma":
        return cv.lemma_row_for_index(spec, index)
    return cv.rows_for_index(spec, index)


def _row_map_for(kind: str, jobs: int):
    if jobs <= 1:
        return None

    def row_map(spec, indices):
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(jobs) as pool:
            return pool.map(_verify_task, [(kind, spec, i) for i in indices])

    return row_map


def _cmd_verify(args) -> int:
    spec = _spec_from(args)
    row_map = _row_map_for(args.kind, args.jobs)
    out = _out_dir(args.out) if args.out else None

    if args.kind == "integer":
        report = cv.verify_integer_theorem(spec, row_map=row_map)
        summary, rows = cv.integer_summary(report), report.rows
        write_rows = cv.write_integer_csv
        bad = report.verdict == "theorem_violation"
    elif args.kind == "lemma":
        report = cv.verify_lemma(spec, row_map=row_map)
        summary, rows = cv.lemma_summary(report), report.rows
        write_rows = cv.write_lemma_csv
        bad = report.verdict == "lemma_failure"
    else:
        check = cv.check_hypotheses if args.kind == "hypotheses" else cv.verify_mod2_theorem
        report = check(spec, row_map=row_map)
        summary, rows = cv.report_summary(report), report.rows
        write_rows = cv.write_rows_csv
        bad = report.verdict == "theorem_violation"

    if out:
        write_rows(rows, os.path.join(out, "rows.csv"))
        fileio._dump(_plain(summary), os.path.join(out, "summary.json"))
    if args.format == "csv":
        write_rows(rows, sys.stdout)
    else:
        _emit(summary)
    return 3 if bad else 0


def _cmd_cauchy(args) -> int:
    spec = _spec_from(args)
    report = cv.cauchy_diagnostic(spec)
    summary = cv.cauchy_summary(report)
    if args.out:
        out = _out_dir(args.out)
        cv.write_cauchy_csv(report.rows, os.path.join(out, "rows.csv"))
        fileio._dump(_plain(summary), os.path.join(out, "summary.json"))
    if args.format == "csv":
        cv.write_cauchy_csv(report.rows, sys.stdout)
    else:
        _emit(summary)
    return 0


# ---------------------------------------------------------------------------
# flow commands


def _flow_params(args) -> mcf.FlowParams:
    return mcf.FlowParams(
        dt_safety=args.dt_safety,
        max_steps=args.steps,
        min_edge=args.min_edge,
        max_edge=args.max_edge,
        extinction_mass_tol=args.extinction_tol,
    )


def _cmd_mcf_run(args) -> int:
    _require_files(args.input)
    params = _flow_params(args)
    v = fileio.load_varifold(args.input)
    out = _out_dir(args.out) if args.out else None
    try:
        final = mcf.run(v, params)
    except FlowDiagnosticFailure as err:
        if out:
            mcf.write_flow_csv(err.history, os.path.join(out, "flow.csv"))
            fileio._dump(
                {"error": str(err), "step": err.step}, os.path.join(out, "summary.json")
            )
        print(f"flow diagnostic failure: {err}", file=sys.stderr)
        return 3
    history = final.history
    flags = sorted({f for rec in history for f in rec.flags})
    summary = {
        "steps": len(history) - 1,
        "finalT": final.t,
        "finalMass": history[-1].mass if history else 0.0,
        "extinctionTime": mcf.extinction_time(final),
        "flags": flags,
    }
    if out:
        mcf.write_flow_csv(history, os.path.join(out, "flow.csv"))
        fileio._dump(_plain(summary), os.path.join(out, "summary.json"))
    if args.format == "csv":
        mcf.write_flow_csv(history, sys.stdout)
    else:
        _emit(summary)
    return 0


def _cmd_mcf_junction(args) -> int:
    cfg = mcf.JunctionConfig(
        center=_parse_point(args.center, "center"),
        rays=_parse_rays(args.rays),
        radius=args.radius,
    )
    rep = mcf.junction_parity(cfg)
    _emit(
        {
            "parity": rep.parity,
            "boundaryMass": rep.boundary_mass,
            "excluded": rep.excluded,
            "verdict": rep.verdict,
        },
        args.out,
    )
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_out(p, help_text="write the result JSON here as well"):
    p.add_argument("--out", default=None, help=help_text)


def _add_window(p):
    p.add_argument(
        "--window",
        default=None,
        help="test region: all (default), ball:cx,cy,r or box:x0,y0,x1,y1",
    )


def _add_budget(p):
    p.add_argument("--budget", type=int, default=None, help="solver node budget")
    p.add_argument(
        "--max-coeff", type=int, default=None, help="integer filling coefficient bound"
    )
    p.add_argument(
        "--method",
        default=None,
        choices=["exhaustive", "planar_mincut", "branch_and_bound", "dfs"],
        help="force a particular flat-norm solver",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmtkit",
        description="varifold and flat-chain toolkit on simplicial complexes",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="build a family member and write its artifacts")
    p.add_argument("family", choices=sorted(FAMILIES))
    p.add_argument("index", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("boundary", help="boundary of a chain")
    p.add_argument("chain")
    _add_out(p, "write the boundary chain JSON here")
    p.set_defaults(func=_cmd_boundary)

    p = sub.add_parser("mass", help="mass of a chain or varifold in a window")
    p.add_argument("input")
    _add_window(p)
    _add_out(p)
    p.set_defaults(func=_cmd_mass)

    p = sub.add_parser("flatnorm", help="certified flat seminorm of a chain")
    p.add_argument("chain")
    p.add_argument("--fill", default=None, help="complex providing the fill cells")
    _add_window(p)
    _add_budget(p)
    _add_out(p, "write the certificate JSON here")
    p.set_defaults(func=_cmd_flatnorm)

    p = sub.add_parser("flatdist", help="certified flat distance between two chains")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--fill", default=None, help="complex providing the fill cells")
    _add_window(p)
    _add_budget(p)
    _add_out(p, "write the certificate JSON here")
    p.set_defaults(func=_cmd_flatdist)

    p = sub.add_parser("bldist", help="bounded-Lipschitz distance between varifolds")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--max-diam", type=float, default=0.25, help="atomization scale")
    p.add_argument("--atom-limit", type=int, default=2000)
    _add_out(p)
    p.set_defaults(func=_cmd_bldist)

    p = sub.add_parser("density", help="pointwise density of a varifold")
    p.add_argument("varifold")
    p.add_argument("--point", required=True, help="x,y")
    p.add_argument("--tol", type=float, default=None)
    _add_out(p)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("pushforward", help="affine push-forward of a varifold")
    p.add_argument("varifold")
    p.add_argument("--matrix", required=True, help="rows ';'-separated: a,b;c,d")
    p.add_argument("--offset", default=None, help="x,y (default zero)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_pushforward)

    p = sub.add_parser("dilate", help="blow-up y -> (y - center)/scale")
    p.add_argument("varifold")
    p.add_argument("--center", required=True, help="x,y")
    p.add_argument("--scale", type=float, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_dilate)

    p = sub.add_parser("tomod2", help="mod-2 chain carried by a varifold")
    p.add_argument("varifold")
    _add_out(p, "write the chain JSON here")
    p.set_defaults(func=_cmd_tomod2)

    p = sub.add_parser("compat", help="does V = v(A) + 2W hold for some W")
    p.add_argument("chain")
    p.add_argument("varifold")
    _add_out(p)
    p.set_defaults(func=_cmd_compat)

    p = sub.add_parser("firstvar", help="total first variation in a window")
    p.add_argument("varifold")
    _add_window(p)
    _add_out(p)
    p.set_defaults(func=_cmd_firstvar)

    p = sub.add_parser("verify", help="run a convergence verification over a family")
    p.add_argument("kind", choices=["mod2", "integer", "lemma", "hypotheses"])
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--range", default=None, help="indices lo..hi (default: family's)")
    _add_window(p)
    _add_budget(p)
    p.add_argument("--tol", type=float, default=None, help="decay tolerance")
    p.add_argument("--allow-inexact", action="store_true")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across indices")
    p.add_argument("--out", default=None, help="directory for rows.csv and summary.json")
    p.add_argument("--format", default="json", choices=["csv", "json"])
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("cauchy", help="consecutive flat distances along a family")
    p.add_argument("--family", required=True, choices=sorted(FAMILIES))
    p.add_argument("--range", default=None, help="indices lo..hi (default: family's)")
    _add_window(p)
    _add_budget(p)
    p.add_argument("--tol", type=float, default=None, help="decay tolerance")
    p.add_argument("--out", default=None, help="directory for rows.csv and summary.json")
    p.add_argument("--format", default="json", choices=["csv", "json"])
    p.set_defaults(func=_cmd_cauchy)

    p = sub.add_parser("mcf-run", help="curve-shortening flow of a closed-loop varifold")
    p.add_argument("input", help="varifold JSON: multiplicity-1 closed loops")
    p.add_argument("--steps", type=int, default=20000, help="step cap")
    p.add_argument("--dt-safety", type=float, default=0.3)
    p.add_argument("--min-edge", type=float, default=0.01)
    p.add_argument("--max-edge", type=float, default=0.25)
    p.add_argument("--extinction-tol", type=float, default=0.05)
    p.add_argument("--out", default=None, help="directory for flow.csv and summary.json")
    p.add_argument("--format", default="json", choices=["csv", "json"])
    p.set_defaults(func=_cmd_mcf_run)

    p = sub.add_parser("mcf-junction", help="parity obstruction for a ray junction")
    p.add_argument("--rays", required=True, help="dx,dy,mult entries ';'-separated")
    p.add_argument("--center", default="0,0", help="x,y")
    p.add_argument("--radius", type=float, default=1.0)
    _add_out(p)
    p.set_defaults(func=_cmd_mcf_junction)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except FlowDiagnosticFailure as err:
        print(f"flow diagnostic failure: {err}", file=sys.stderr)
        return 3
    except GmtError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
