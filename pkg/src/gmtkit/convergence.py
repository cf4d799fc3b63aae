"""Limit-theorem verification harness.

Runs a generated varifold sequence through the measurement stack
(mass, first variation, bounded-Lipschitz distance, flat distance to
the declared limits), decides the hypothesis flags, and checks that
whenever the hypotheses hold the chains really do converge. A failed
implication is recorded as a verdict string, never raised: the whole
point of the counterexample families is to watch the hypotheses fail
while the conclusion goes its own way.

Numeric conventions (documented knobs, not tunables hidden in code):
  * bounded   <=> every last-quarter value is <= 1.2x the median of
    the full series (plus 1e-12 slack for exact zeros);
  * decays    <=> the final value is <= tol and the last-quarter
    log-log slope against the index is negative (series that end in
    exact zeros pass outright);
  * lemma "vanishes" <=> every last-quarter value is <= tol.
"""

from __future__ import annotations

import contextlib
import csv
import math
from dataclasses import dataclass

from .chains import Mod2Chain, boundary, chains_equal
from .errors import InvalidInput
from .families import FAMILIES, Family, FamilyItem, get_family
from .flatnorm import DEFAULT_BUDGET, SolverBudget, flat_dist
from .geometry import WINDOW_ALL, Window, as_point
from .varifolds import (
    IntegralVarifold,
    bl_distance,
    compatible,
    first_variation,
    mass as varifold_mass,
    pushforward,
    restrict,
    to_mod2,
    varifold,
)

__all__ = [
    "CSV_HEADER",
    "SequenceSpec",
    "Row",
    "WindowVerdict",
    "ConvergenceReport",
    "LemmaRow",
    "LemmaReport",
    "IntegerRow",
    "IntegerReport",
    "CauchyRow",
    "CauchyReport",
    "bounded_trend",
    "decays_to",
    "run_rows",
    "check_hypotheses",
    "verify_mod2_theorem",
    "verify_integer_theorem",
    "verify_lemma",
    "cauchy_diagnostic",
    "boundary_density_table",
    "rows_for_index",
    "integer_row_for_index",
    "lemma_row_for_index",
    "write_rows_csv",
    "write_integer_csv",
    "write_lemma_csv",
    "write_cauchy_csv",
    "report_summary",
    "integer_summary",
    "lemma_summary",
    "cauchy_summary",
]

CSV_HEADER = (
    "index",
    "window_id",
    "mass",
    "fv_total",
    "bl_dist",
    "flat_dist",
    "flat_exact",
    "boundary_dist",
    "verdict",
)

LEMMA_TOL = 0.05


@dataclass(frozen=True)
class SequenceSpec:
    """Which family to run, at which indices, measured how."""

    family: str
    indices: tuple | None = None
    windows: tuple | None = None
    budget: SolverBudget | None = None
    bl_max_diam: float | None = None
    tol: float | None = None
    allow_inexact: bool = False


@dataclass(frozen=True)
class Row:
    index: int
    window_id: str
    mass: float
    fv_total: float
    bl_dist: float
    flat_dist: float
    flat_exact: bool
    boundary_dist: float
    verdict: str


@dataclass(frozen=True)
class WindowVerdict:
    window_id: str
    mass_bounded: bool
    fv_bounded: bool
    boundaries_converge: bool
    chains_converge: bool
    hypotheses_pass: bool
    exact: bool
    verdict: str  # ok | hypotheses_fail | theorem_violation | inconclusive_inexact


@dataclass(frozen=True)
class ConvergenceReport:
    family: str
    indices: tuple
    rows: tuple
    windows: tuple  # WindowVerdict per window, same order as measured
    limits_match: bool
    limit_compatible: bool
    verdict: str
    notes: tuple


# ---------------------------------------------------------------------------
# trend fitting


def _median(values):
    s = sorted(values)
    k = len(s)
    if k == 0:
        return 0.0
    if k % 2:
        return s[k // 2]
    return 0.5 * (s[k // 2 - 1] + s[k // 2])


def _tail(values):
    return values[-max(1, len(values) // 4):]


def bounded_trend(values) -> bool:
    """Last-quarter values stay within 1.2x the series median."""
    if not values:
        return True
    med = _median([abs(v) for v in values])
    return all(abs(v) <= 1.2 * med + 1e-12 for v in _tail(values))


def decays_to(indices, values, tol) -> bool:
    """Final value under tol and a negative last-quarter log-log slope.

    Exact zeros are dropped from the fit; a tail that is entirely zero
    passes (the sequence already arrived).
    """
    if not values:
        return True
    if abs(values[-1]) > tol:
        return False
    q = max(2, len(values) // 4)
    pts = [
        (math.log(i), math.log(abs(v)))
        for i, v in zip(indices[-q:], values[-q:])
        if abs(v) > 1e-15
    ]
    if len(pts) < 2 or len({x for x, _ in pts}) < 2:
        return True
    mx = math.fsum(x for x, _ in pts) / len(pts)
    my = math.fsum(y for _, y in pts) / len(pts)
    sxx = math.fsum((x - mx) ** 2 for x, _ in pts)
    sxy = math.fsum((x - mx) * (y - my) for x, y in pts)
    return sxy / sxx < 0.0


# ---------------------------------------------------------------------------
# row generation


def _resolve(spec: SequenceSpec):
    fam = get_family(spec.family)
    indices = tuple(spec.indices) if spec.indices is not None else fam.default_indices
    if not indices:
        raise InvalidInput("index list is empty")
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise InvalidInput("indices must be strictly increasing")
    windows = tuple(spec.windows) if spec.windows is not None else fam.windows
    budget = spec.budget if spec.budget is not None else DEFAULT_BUDGET
    tol = spec.tol if spec.tol is not None else fam.conv_tol
    return fam, indices, windows, budget, tol


def _limit_varifold(item: FamilyItem) -> IntegralVarifold:
    if item.limit_varifold is not None:
        return item.limit_varifold
    return varifold(item.complex, {})


def _bl_entry(item: FamilyItem, fam: Family, spec: SequenceSpec, w: Window) -> float:
    md = spec.bl_max_diam if spec.bl_max_diam is not None else fam.bl_max_diam(item.index)
    a = item.varifold
    b = _limit_varifold(item)
    if w.kind != "all":
        a = restrict(a, w, md)
        b = restrict(b, w, md)
    return bl_distance(a, b, max_diam=md)


def rows_for_index(spec: SequenceSpec, index: int) -> tuple:
    """Rows for a single index, one per window; pure in (spec, index)."""
    fam, _, windows, budget, _ = _resolve(spec)
    item = fam.build(index)
    m2 = to_mod2(item.varifold)
    bnd = boundary(m2)
    fv = first_variation(item.varifold)
    rows = []
    for w in windows:
        fc = flat_dist(m2, item.limit_mod2, window=w, budget=budget)
        bc = flat_dist(bnd, item.gamma, window=w, budget=budget)
        exact = fc.exact and bc.exact
        rows.append(
            Row(
                index=item.index,
                window_id=w.label(),
                mass=varifold_mass(item.varifold, w),
                fv_total=fv.total(w),
                bl_dist=_bl_entry(item, fam, spec, w),
                flat_dist=fc.value,
                flat_exact=fc.exact,
                boundary_dist=bc.value,
                verdict="ok" if exact else "inexact",
            )
        )
    return tuple(rows)


def run_rows(spec: SequenceSpec, row_map=None):
    """Measure every index in every window; returns (family, items, rows).

    row_map, when given, maps rows_for_index over the indices (the CLI
    passes a process-pool map here); results keep index order either way.
    """
    fam, indices, windows, budget, _ = _resolve(spec)
    items = [fam.build(i) for i in indices]
    if row_map is None:
        groups = [rows_for_index(spec, i) for i in indices]
    else:
        groups = list(row_map(spec, indices))
    rows = [r for group in groups for r in group]
    return fam, items, rows


def _window_slice(rows, window_id):
    return [r for r in rows if r.window_id == window_id]


def _judge_window(rows, window_id, indices, tol, allow_inexact, conclusions):
    rs = _window_slice(rows, window_id)
    exact = all(r.flat_exact for r in rs)
    mass_bounded = bounded_trend([r.mass for r in rs])
    fv_bounded = bounded_trend([r.fv_total for r in rs])
    boundaries_converge = decays_to(indices, [r.boundary_dist for r in rs], tol)
    chains_converge = decays_to(indices, [r.flat_dist for r in rs], tol)
    hyp = mass_bounded and fv_bounded and boundaries_converge
    if not exact and not allow_inexact:
        verdict = "inconclusive_inexact"
    elif not hyp:
        verdict = "hypotheses_fail"
    elif not conclusions:
        verdict = "ok"
    elif chains_converge:
        verdict = "ok"
    else:
        verdict = "theorem_violation"
    return WindowVerdict(
        window_id=window_id,
        mass_bounded=mass_bounded,
        fv_bounded=fv_bounded,
        boundaries_converge=boundaries_converge,
        chains_converge=chains_converge,
        hypotheses_pass=hyp,
        exact=exact,
        verdict=verdict,
    )


def _overall(window_verdicts) -> str:
    vs = {wv.verdict for wv in window_verdicts}
    if "theorem_violation" in vs:
        return "theorem_violation"
    if "inconclusive_inexact" in vs:
        return "inconclusive_inexact"
    if "ok" in vs:
        return "ok"
    return "hypotheses_fail"


def _assemble(spec: SequenceSpec, conclusions: bool, row_map=None) -> ConvergenceReport:
    fam, indices, windows, _, tol = _resolve(spec)
    _, items, rows = run_rows(spec, row_map)
    verdicts = tuple(
        _judge_window(rows, w.label(), indices, tol, spec.allow_inexact, conclusions)
        for w in windows
    )
    last = items[-1]
    lv = _limit_varifold(last)
    if lv.is_zero:
        limits_match = last.limit_mod2.is_zero
        limit_compatible = last.limit_mod2.is_zero
    else:
        limits_match = chains_equal(to_mod2(lv), last.limit_mod2)
        limit_compatible = compatible(last.limit_mod2, lv).ok
    notes = []
    for wv in verdicts:
        if wv.verdict == "theorem_violation":
            notes.append(
                f"window {wv.window_id}: hypotheses hold but the chains "
                "do not converge"
            )
    if conclusions and not limits_match:
        notes.append("declared varifold and chain limits disagree mod 2")
    return ConvergenceReport(
        family=fam.name,
        indices=indices,
        rows=tuple(rows),
        windows=verdicts,
        limits_match=limits_match,
        limit_compatible=limit_compatible,
        verdict=_overall(verdicts),
        notes=tuple(notes),
    )


def check_hypotheses(spec: SequenceSpec, row_map=None) -> ConvergenceReport:
    """Hypothesis flags only; conclusion columns are still measured."""
    return _assemble(spec, conclusions=False, row_map=row_map)


def verify_mod2_theorem(spec: SequenceSpec, row_map=None) -> ConvergenceReport:
    """Full mod-2 limit check: hypotheses-pass must imply convergence."""
    return _assemble(spec, conclusions=True, row_map=row_map)


# ---------------------------------------------------------------------------
# integer pairs


@dataclass(frozen=True)
class IntegerRow:
    index: int
    compatible_ok: bool
    offending: tuple
    boundary_dist: float
    boundary_exact: bool


@dataclass(frozen=True)
class IntegerReport:
    family: str
    window_id: str
    rows: tuple
    boundaries_converge: bool
    limit_compatible: bool
    witness: IntegralVarifold | None
    verdict: str
    exact: bool


def _integer_budget(spec: SequenceSpec):
    if spec.budget is not None:
        return spec.budget
    # boundary fillings never need coefficients past +-2 here and the
    # integer solver's state space grows with the coefficient box
    return SolverBudget(max_coeff=2)


def integer_row_for_index(spec: SequenceSpec, index: int) -> IntegerRow:
    fam, _, _, _, _ = _resolve(spec)
    budget = _integer_budget(spec)
    item = fam.build(index)
    if item.int_chain is None:
        raise InvalidInput(f"family {fam.name!r} declares no integer chains")
    cr = compatible(item.int_chain, item.varifold)
    bc = flat_dist(
        boundary(item.int_chain), boundary(item.limit_int), budget=budget
    )
    return IntegerRow(
        index=item.index,
        compatible_ok=cr.ok,
        offending=cr.offending,
        boundary_dist=bc.value,
        boundary_exact=bc.exact,
    )


def verify_integer_theorem(spec: SequenceSpec, row_map=None) -> IntegerReport:
    """Pairs (A(i), V(i)) stay compatible and so do the declared limits."""
    fam, indices, windows, budget, tol = _resolve(spec)
    items = [fam.build(i) for i in indices]
    if any(it.int_chain is None for it in items):
        raise InvalidInput(f"family {fam.name!r} declares no integer chains")
    if row_map is None:
        rows = [integer_row_for_index(spec, i) for i in indices]
    else:
        rows = list(row_map(spec, indices))
    conv = decays_to(indices, [r.boundary_dist for r in rows], tol)
    last = items[-1]
    lim = compatible(last.limit_int, _limit_varifold(last))
    exact = all(r.boundary_exact for r in rows)
    # hypotheses: compatible pairs along the way, boundaries converging;
    # conclusion: the declared limits are compatible too
    hyp = all(r.compatible_ok for r in rows) and conv
    if not exact and not spec.allow_inexact:
        verdict = "inconclusive_inexact"
    elif not hyp:
        verdict = "hypotheses_fail"
    elif lim.ok:
        verdict = "ok"
    else:
        verdict = "theorem_violation"
    return IntegerReport(
        family=fam.name,
        window_id=windows[-1].label(),
        rows=tuple(rows),
        boundaries_converge=conv,
        limit_compatible=lim.ok,
        witness=lim.witness,
        verdict=verdict,
        exact=exact,
    )


# ---------------------------------------------------------------------------
# projection lemma


@dataclass(frozen=True)
class LemmaRow:
    index: int
    bl_dist: float
    fv_total: float
    cover: float
    q_measure: float
    odd_measure: float


@dataclass(frozen=True)
class LemmaReport:
    family: str
    sheet_count: int
    rows: tuple
    hyp_bl: bool
    hyp_fv: bool
    q_vanishes: bool
    recovered_a: int
    expected_a: int
    holds: bool
    verdict: str


def _sheet_profile(item: FamilyItem, lem, md: float):
    """Project the windowed varifold onto the declared axis interval.

    Returns (cover, q_measure, odd_measure): the projected length
    carrying exactly sheet_count layers, its complement inside the
    interval, and the length carrying an odd layer count.
    """
    vr = restrict(item.varifold, lem.window, md)
    width = lem.axis_hi - lem.axis_lo
    if vr.is_zero:
        return 0.0, width, 0.0
    pushed = pushforward(vr, lem.proj)
    good, covered, odd = [], [], []
    cc = pushed.complex
    if cc is not None:
        for c, k in pushed.mult:
            pos = cc.cell_positions(1, c)
            a, b = sorted((float(pos[0][0]), float(pos[1][0])))
            ln = min(b, lem.axis_hi) - max(a, lem.axis_lo)
            if ln <= 0.0:
                continue
            covered.append(ln)
            if k == lem.sheet_count:
                good.append(ln)
            if k % 2:
                odd.append(ln)
    cover = math.fsum(covered)
    return cover, width - math.fsum(good), math.fsum(odd)


def lemma_row_for_index(spec: SequenceSpec, index: int) -> LemmaRow:
    fam, _, _, _, _ = _resolve(spec)
    lem = fam.lemma
    if lem is None:
        raise InvalidInput(f"family {fam.name!r} declares no lemma setup")
    item = fam.build(index)
    md_bl = fam.bl_max_diam(index)
    vr = restrict(item.varifold, lem.window, md_bl)
    lr = restrict(_limit_varifold(item), lem.window, md_bl)
    bl = bl_distance(vr, lr, max_diam=md_bl)
    fv = first_variation(item.varifold).total(lem.window)
    # profile at a scale that shrinks with the index so the window
    # discretization cannot put a floor under Q(i)
    cover, q, odd = _sheet_profile(item, lem, min(md_bl, 1.0 / (2.0 * index)))
    return LemmaRow(
        index=index,
        bl_dist=bl,
        fv_total=fv,
        cover=cover,
        q_measure=q,
        odd_measure=odd,
    )


def verify_lemma(
    spec: SequenceSpec, lemma_tol: float = LEMMA_TOL, row_map=None
) -> LemmaReport:
    """Sheet-count recovery over the declared axis window.

    Checks the lemma's numerical hypotheses (bl distance to the
    n-sheeted limit and windowed first variation both vanish), measures
    the off-count set Q(i), and recovers the mod-2 coefficient from the
    odd-count measure trend.
    """
    fam, indices, _, _, _ = _resolve(spec)
    lem = fam.lemma
    if lem is None:
        raise InvalidInput(f"family {fam.name!r} declares no lemma setup")
    width = lem.axis_hi - lem.axis_lo
    if row_map is None:
        rows = [lemma_row_for_index(spec, i) for i in indices]
    else:
        rows = list(row_map(spec, indices))
    hyp_bl = decays_to(indices, [r.bl_dist for r in rows], lemma_tol)
    hyp_fv = decays_to(indices, [r.fv_total for r in rows], lemma_tol)
    q_vanishes = all(r.q_measure <= lemma_tol for r in _tail(rows))
    d0 = rows[-1].odd_measure
    d1 = width - rows[-1].odd_measure
    recovered = 0 if d0 <= d1 else 1
    recovered_clean = min(d0, d1) <= lemma_tol
    expected = lem.sheet_count % 2
    hyp = hyp_bl and hyp_fv
    holds = hyp and q_vanishes and recovered_clean and recovered == expected
    if not hyp:
        verdict = "hypotheses_fail"
    elif holds:
        verdict = "ok"
    else:
        verdict = "lemma_failure"
    return LemmaReport(
        family=fam.name,
        sheet_count=lem.sheet_count,
        rows=tuple(rows),
        hyp_bl=hyp_bl,
        hyp_fv=hyp_fv,
        q_vanishes=q_vanishes,
        recovered_a=recovered,
        expected_a=expected,
        holds=holds,
        verdict=verdict,
    )


# ---------------------------------------------------------------------------
# Cauchy diagnostic


@dataclass(frozen=True)
class CauchyRow:
    index_a: int
    index_b: int
    window_id: str
    value: float
    exact: bool
    kind: str  # "distance" when built on a shared complex, else "bound"


@dataclass(frozen=True)
class CauchyReport:
    family: str
    rows: tuple
    decays: dict
    cauchy: bool


def cauchy_diagnostic(spec: SequenceSpec) -> CauchyReport:
    """Consecutive flat distances, or certified upper bounds when the
    family cannot place two indices on one complex."""
    fam, indices, windows, budget, tol = _resolve(spec)
    rows = []
    if fam.pair_build is not None:
        for a, b in zip(indices, indices[1:]):
            pair = fam.pair_build(a, b)
            for w in windows:
                fc = flat_dist(pair.chain_a, pair.chain_b, window=w, budget=budget)
                rows.append(CauchyRow(a, b, w.label(), fc.value, fc.exact, "distance"))
    else:
        # triangle bound through the declared limit, still a certificate
        singles = {}
        for i in indices:
            item = fam.build(i)
            for w in windows:
                fc = flat_dist(
                    to_mod2(item.varifold), item.limit_mod2, window=w, budget=budget
                )
                singles[(i, w.label())] = fc
        for a, b in zip(indices, indices[1:]):
            for w in windows:
                fa, fb = singles[(a, w.label())], singles[(b, w.label())]
                rows.append(
                    CauchyRow(
                        a, b, w.label(), fa.value + fb.value,
                        fa.exact and fb.exact, "bound",
                    )
                )
    decays = {}
    for w in windows:
        wid = w.label()
        vals = [r.value for r in rows if r.window_id == wid]
        decays[wid] = decays_to(indices[1:], vals, tol)
    return CauchyReport(
        family=fam.name,
        rows=tuple(rows),
        decays=decays,
        cauchy=all(decays.values()),
    )


# ---------------------------------------------------------------------------
# pointwise boundary-density table


def boundary_density_table(v: IntegralVarifold, points, radii):
    """First-variation mass of balls against r^m, at sampled centers."""
    fv = first_variation(v)
    m = v.complex.chain_dim
    out = []
    for x in points:
        p = as_point(x)
        for r in radii:
            if r <= 0:
                raise InvalidInput("radii must be positive")
            val = fv.total(Window.ball(p, float(r)))
            out.append((tuple(float(c) for c in p), float(r), val, val / r**m))
    return tuple(out)


# ---------------------------------------------------------------------------
# output


def _csv_dest(path_or_file):
    if hasattr(path_or_file, "write"):
        return contextlib.nullcontext(path_or_file)
    return open(path_or_file, "w", newline="")


def write_rows_csv(rows, path) -> None:
    with _csv_dest(path) as fh:
        wr = csv.writer(fh)
        wr.writerow(CSV_HEADER)
        for r in rows:
            wr.writerow(
                [
                    r.index,
                    r.window_id,
                    repr(r.mass),
                    repr(r.fv_total),
                    repr(r.bl_dist),
                    repr(r.flat_dist),
                    "true" if r.flat_exact else "false",
                    repr(r.boundary_dist),
                    r.verdict,
                ]
            )


def report_summary(report: ConvergenceReport) -> dict:
    """JSON-ready summary with the flag vocabulary used in reports."""
    return {
        "family": report.family,
        "indices": list(report.indices),
        "verdict": report.verdict,
        "windows": [
            {
                "window_id": wv.window_id,
                "hypothesisFlags": {
                    "massBounded": wv.mass_bounded,
                    "fvBounded": wv.fv_bounded,
                    "boundariesConverge": wv.boundaries_converge,
                },
                "conclusionFlags": {
                    "chainsConverge": wv.chains_converge,
                },
                "hypothesesPass": wv.hypotheses_pass,
                "exact": wv.exact,
                "verdict": wv.verdict,
            }
            for wv in report.windows
        ],
        "conclusionFlags": {
            "limitsMatch": report.limits_match,
            "limitCompatible": report.limit_compatible,
        },
        "notes": list(report.notes),
    }


INTEGER_CSV_HEADER = ("index", "compatible_ok", "offending", "boundary_dist", "boundary_exact")
LEMMA_CSV_HEADER = ("index", "bl_dist", "fv_total", "cover", "q_measure", "odd_measure")
CAUCHY_CSV_HEADER = ("index_a", "index_b", "window_id", "value", "exact", "kind")


def write_integer_csv(rows, path) -> None:
    with _csv_dest(path) as fh:
        wr = csv.writer(fh)
        wr.writerow(INTEGER_CSV_HEADER)
        for r in rows:
            off = ";".join(f"{c}:{g}" for c, g in r.offending)
            wr.writerow(
                [
                    r.index,
                    "true" if r.compatible_ok else "false",
                    off,
                    repr(r.boundary_dist),
                    "true" if r.boundary_exact else "false",
                ]
            )


def write_lemma_csv(rows, path) -> None:
    with _csv_dest(path) as fh:
        wr = csv.writer(fh)
        wr.writerow(LEMMA_CSV_HEADER)
        for r in rows:
            wr.writerow(
                [
                    r.index,
                    repr(r.bl_dist),
                    repr(r.fv_total),
                    repr(r.cover),
                    repr(r.q_measure),
                    repr(r.odd_measure),
                ]
            )


def write_cauchy_csv(rows, path) -> None:
    with _csv_dest(path) as fh:
        wr = csv.writer(fh)
        wr.writerow(CAUCHY_CSV_HEADER)
        for r in rows:
            wr.writerow(
                [
                    r.index_a,
                    r.index_b,
                    r.window_id,
                    repr(r.value),
                    "true" if r.exact else "false",
                    r.kind,
                ]
            )


def integer_summary(report: IntegerReport) -> dict:
    return {
        "family": report.family,
        "window_id": report.window_id,
        "verdict": report.verdict,
        "hypothesisFlags": {
            "boundariesConverge": report.boundaries_converge,
        },
        "conclusionFlags": {
            "limitCompatible": report.limit_compatible,
            "witnessMass": None if report.witness is None else varifold_mass(report.witness),
        },
        "exact": report.exact,
    }


def lemma_summary(report: LemmaReport) -> dict:
    return {
        "family": report.family,
        "sheet_count": report.sheet_count,
        "verdict": report.verdict,
        "hypothesisFlags": {
            "blDecays": report.hyp_bl,
            "fvVanishes": report.hyp_fv,
            "qVanishes": report.q_vanishes,
        },
        "conclusionFlags": {
            "recoveredA": report.recovered_a,
            "expectedA": report.expected_a,
            "holds": report.holds,
        },
    }


def cauchy_summary(report: CauchyReport) -> dict:
    return {
        "family": report.family,
        "cauchy": report.cauchy,
        "decays": {k: bool(v) for k, v in sorted(report.decays.items())},
        "pairs": len(report.rows),
    }
