"""Exception types shared across the package."""


class HentropyError(Exception):
    """Base class for all package-specific failures."""


class EnclosureOverflow(HentropyError):
    """An interval endpoint left the finite double range."""


class EmptyCover(HentropyError):
    """A rectangle does not meet the computational window."""


class BudgetExceeded(HentropyError):
    """The active box set would exceed the configured budget."""

    def __init__(self, limit, needed):
        super().__init__(f"box budget {limit} exceeded (needed >= {needed})")
        self.limit = limit
        self.needed = needed


class EmptyInvariantSet(HentropyError):
    """No recurrent boxes survive trimming at this resolution."""


class IsolationFailure(HentropyError):
    """No valid index pair exists at this resolution; refine the grid."""


class NonAcyclicCarrier(HentropyError):
    """A cell's image carrier is not acyclic; refine the grid."""

    def __init__(self, cell, detail=""):
        msg = f"carrier of {cell!r} is not acyclic"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.cell = cell


class ChainSolveFailure(HentropyError):
    """A bounding chain did not exist inside an acyclic carrier (bug signal)."""


class Unverifiable(HentropyError):
    """The index data does not certify a subshift under the conservative rule."""


class ConditionNotSatisfied(HentropyError):
    """Requested amalgamation pair fails the forward/backward condition."""


class SearchBudgetExceeded(HentropyError):
    """Exhaustive amalgamation search exceeded its node budget."""


class MatrixParseError(HentropyError):
    """Malformed matrix text file."""

    def __init__(self, path, line_no, detail):
        super().__init__(f"{path}:{line_no}: {detail}")
        self.path = path
        self.line_no = line_no
