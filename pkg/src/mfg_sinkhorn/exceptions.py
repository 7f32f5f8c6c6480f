"""Exception hierarchy shared across the package."""


class MFGSinkhornError(Exception):
    """Base class for every error raised by this package."""


class ZeroMass(MFGSinkhornError, ValueError):
    """A field with zero total mass cannot be normalized."""


class GridMismatch(MFGSinkhornError, ValueError):
    """Two operands live on different grids."""


class DegenerateKernel(MFGSinkhornError, ValueError):
    """Every off-diagonal heat-kernel entry underflows in linear arithmetic."""


class Infeasible(MFGSinkhornError, ValueError):
    """A marginal constraint cannot be met by the reference chain."""


class NonConvexDirect(MFGSinkhornError, TypeError):
    """A nonlocal cost was handed to the pointwise prox without linearization."""


class StaleMessages(MFGSinkhornError, RuntimeError):
    """Chain messages are out of date with respect to the scalings."""


class SizeExceeded(MFGSinkhornError, ValueError):
    """A dense oracle problem is larger than its hard size bound."""


class ParseError(MFGSinkhornError, ValueError):
    """A scenario document could not be parsed."""


class ValidationError(MFGSinkhornError, ValueError):
    """A parsed scenario is inconsistent or infeasible."""


class MaxIterations(MFGSinkhornError, RuntimeError):
    """The solver ran out of sweeps before meeting its tolerances.

    The partially converged ``state``, ``report`` and ``frames`` are attached
    so callers can still inspect or save them.
    """

    def __init__(self, message, state=None, report=None, frames=None):
        super().__init__(message)
        self.state = state
        self.report = report
        self.frames = frames
