"""Exception types shared across the toolkit."""


class GmtError(Exception):
    """Base class for all toolkit errors."""


class InvalidInput(GmtError):
    """Malformed argument (bad shape, non-finite coordinate, unknown name)."""


class DimensionError(GmtError):
    """Ambient or chain dimensions do not match."""


class DegenerateCell(GmtError):
    """Cell measure below the degeneracy tolerance."""


class DuplicateCell(GmtError):
    """Two cells share the same canonical vertex set."""


class MissingFace(GmtError):
    """A fill cell references a face that is not an m-cell of the complex."""


class RefinementUnsupported(GmtError):
    """Common refinement outside the supported arrangement classes."""


class AtomBudget(GmtError):
    """Atom discretization exceeded the configured atom limit."""


class FlowDiagnosticFailure(GmtError):
    """A mean-curvature-flow run violated one of its tracked diagnostics.

    Carries the step index where the check fired and the per-step history up
    to and including the offending step, so reports can still be written.
    """

    def __init__(self, message, step=None, history=()):
        super().__init__(message)
        self.step = step
        self.history = tuple(history)
