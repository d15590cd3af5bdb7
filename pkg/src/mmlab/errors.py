"""Exception hierarchy shared by all modules."""


class MMLabError(Exception):
    """Base class for every error raised by mmlab."""


class InvalidParameter(MMLabError, ValueError):
    pass


class MeshError(MMLabError, ValueError):
    """Invalid mesh topology or geometry (non-manifold, triangle inequality, disconnected)."""


class DegenerateInput(MMLabError, ValueError):
    pass


class UnsupportedBackend(MMLabError, TypeError):
    pass


class BudgetExceeded(MMLabError, RuntimeError):
    """A configured face-sequence or event budget ran out; the answer would not be exact."""


class QuadratureError(MMLabError, RuntimeError):
    pass


class PreconditionViolation(MMLabError, ValueError):
    pass


class FlowUndefined(MMLabError, RuntimeError):
    """The geodesic flow (or exponential map) is not defined for the given input."""

    def __init__(self, status, message=""):
        super().__init__(message or status)
        self.status = status


class StencilInconsistent(MMLabError, RuntimeError):
    pass
