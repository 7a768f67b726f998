"""Exception hierarchy shared by all modules."""


class FracFDEError(Exception):
    """Base class for every error raised by the package."""


class OutOfRange(FracFDEError, ValueError):
    pass


class UnsupportedDim(FracFDEError, ValueError):
    pass


class BadResolution(FracFDEError, ValueError):
    pass


class GridMismatch(FracFDEError, ValueError):
    pass


class SingularSystem(FracFDEError):
    pass


class NonpositiveY(FracFDEError, ValueError):
    pass


class BadYMesh(FracFDEError, ValueError):
    pass


class SolverDivergence(FracFDEError):
    pass


class NewtonDivergence(FracFDEError):
    """Newton failed to converge; the caller should retry with a smaller step."""


class StepCollapse(FracFDEError):
    pass


class NoExtinction(FracFDEError):
    pass


class NoConvergence(FracFDEError):
    pass


class CollapseToZero(FracFDEError):
    pass


class ResolutionLoss(FracFDEError, ValueError):
    pass


class PreconditionFail(FracFDEError, ValueError):
    pass


class SobolevInvalid(FracFDEError, ValueError):
    pass


class EmptyCore(FracFDEError):
    pass


class InsufficientSamples(FracFDEError):
    pass


class DegenerateOscillation(FracFDEError):
    pass


class ParseError(FracFDEError, ValueError):
    pass


class ValidationError(FracFDEError, ValueError):
    pass


class UnknownSubcommand(FracFDEError, ValueError):
    pass
