"""Polyhedral varifolds, flat chains mod 2, and limit diagnostics.

The submodules split along the data they own:

    complexes    shared simplicial complexes, subdivision, common refinement
    chains       mod-2 and integer chains, boundary, push-forward
    varifolds    multiplicity measures, first variation, BL distance
    flatnorm     certified flat seminorm / flat distance solvers
    families     the example sequences used by the verification harness
    convergence  hypothesis checks and theorem verification over a family
    mcf          polygonal curve-shortening flow and junction parity
    fileio       JSON artifact formats (byte-stable, round-trip fixed point)
    cli          the gmtkit command-line tool

`mass`, `restrict` and `pushforward` exist for both chains and varifolds;
call them module-qualified (`chains.mass`, `varifolds.mass`, ...).
"""

from . import (
    chains,
    complexes,
    convergence,
    errors,
    families,
    fileio,
    flatnorm,
    geometry,
    mcf,
    varifolds,
)
from .chains import IntChain, Mod2Chain, boundary, chains_equal, int_chain, mod2_chain
from .complexes import CellComplex, build_complex, common_refinement, subdivide
from .errors import (
    DegenerateCell,
    DimensionError,
    FlowDiagnosticFailure,
    GmtError,
    InvalidInput,
)
from .flatnorm import FlatNormCert, SolverBudget, flat_dist, flat_seminorm
from .geometry import WINDOW_ALL, AffineMap, Plane, Window
from .varifolds import (
    IntegralVarifold,
    bl_distance,
    compatible,
    density_at,
    dilate,
    first_variation,
    to_mod2,
    total_first_variation,
    v_of,
    varifold,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "chains",
    "complexes",
    "convergence",
    "errors",
    "families",
    "fileio",
    "flatnorm",
    "geometry",
    "mcf",
    "varifolds",
    "CellComplex",
    "build_complex",
    "common_refinement",
    "subdivide",
    "Mod2Chain",
    "IntChain",
    "mod2_chain",
    "int_chain",
    "boundary",
    "chains_equal",
    "GmtError",
    "InvalidInput",
    "DimensionError",
    "DegenerateCell",
    "FlowDiagnosticFailure",
    "SolverBudget",
    "FlatNormCert",
    "flat_seminorm",
    "flat_dist",
    "Window",
    "WINDOW_ALL",
    "AffineMap",
    "Plane",
    "IntegralVarifold",
    "varifold",
    "v_of",
    "to_mod2",
    "density_at",
    "compatible",
    "dilate",
    "first_variation",
    "total_first_variation",
    "bl_distance",
]
