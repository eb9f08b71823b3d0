"""Exception hierarchy shared by all modules."""


class ASLError(Exception):
    """Base class for library errors."""


class GeometryError(ASLError):
    pass


class CollarError(GeometryError):
    """Point too far from the boundary for the stitched defining function."""


class DegenerateBoundaryError(GeometryError):
    pass


class DomainError(ASLError, ValueError):
    """Point outside the closure of the region a field is defined on."""


class PreconditionError(ASLError, ValueError):
    pass


class SignError(ASLError, ValueError):
    pass


class SingularityError(ASLError):
    pass


class PathError(ASLError):
    pass


class NearBoundaryError(PathError):
    pass


class ConvexityError(ASLError):
    def __init__(self, message, nodes=()):
        super().__init__(message)
        self.nodes = list(nodes)


class SolverError(ASLError):
    def __init__(self, message, trace=()):
        super().__init__(message)
        self.trace = list(trace)


class ProbeError(ASLError):
    pass


class FitError(ASLError):
    def __init__(self, message, condition=float("nan")):
        super().__init__(message)
        self.condition = condition


class UnsupportedError(ASLError, ValueError):
    pass


class BracketError(ASLError, ValueError):
    pass


class ParseError(ASLError, ValueError):
    pass


class ParameterError(ASLError, ValueError):
    pass
