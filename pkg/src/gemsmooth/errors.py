"""Exception types raised across the package."""


class GemSmoothError(Exception):
    """Base class for all errors raised by gemsmooth."""


class NearCentroidVertex(GemSmoothError, ValueError):
    """A vertex lies (numerically) on the element centroid.

    Radius ratios are undefined there, so the element is too degenerate
    to be transformed.
    """

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class MaxIterExceeded(GemSmoothError, RuntimeError):
    """Iteration budget exhausted before convergence.

    The last iterate is kept on ``state`` so callers can inspect or resume.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class DegenerateElement(GemSmoothError, ValueError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class MeshValidationError(GemSmoothError, ValueError):
    """Base class for errors raised while building a mesh."""


class DisconnectedConnectivity(MeshValidationError):
    pass


class InvertedCell(MeshValidationError):
    def __init__(self, message, cells=()):
        super().__init__(message)
        self.cells = list(cells)


class DuplicateVertex(MeshValidationError):
    pass


class TooFewSymbols(MeshValidationError):
    pass


class InvertedMeshAfterStep(GemSmoothError, RuntimeError):
    """A smoothing step produced inverted or degenerate cells."""

    def __init__(self, message, mesh=None, report=None):
        super().__init__(message)
        self.mesh = mesh
        self.report = report


class MapUndefined(GemSmoothError, ValueError):
    pass


class NotEquilateral(GemSmoothError, ValueError):
    pass


class BadValence(GemSmoothError, ValueError):
    pass


class NoConvergence(GemSmoothError, RuntimeError):
    pass


class IncompatibleMeshes(GemSmoothError, ValueError):
    pass


class ParseError(GemSmoothError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class IndexOutOfRange(ParseError):
    pass
