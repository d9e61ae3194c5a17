"""Exception hierarchy shared by the discretization, solver and study apps."""


class MongeAmpereError(Exception):
    """Base class for every error raised by this project."""


class ConfigError(MongeAmpereError):
    """A run configuration value failed validation."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class MeshError(MongeAmpereError):
    pass


class QuadratureError(MongeAmpereError):
    pass


class FieldEvaluationError(MongeAmpereError):
    pass


class LinearSolveError(MongeAmpereError):
    """A linear solve broke down or missed its residual tolerance."""

    def __init__(self, message: str, residual: float = float("nan")):
        self.residual = residual
        super().__init__(f"{message} (residual={residual:.3e})")


class IndefiniteMatrixError(LinearSolveError):
    pass


class SingularJacobianError(LinearSolveError):
    pass


class InvalidProblemError(MongeAmpereError):
    pass


class NonConvexIterateError(MongeAmpereError):
    """The discrete Hessian of an iterate has a non-positive cofactor eigenvalue."""

    def __init__(self, message: str, point=None, value: float = float("nan")):
        self.point = point
        self.value = value
        super().__init__(message)


class ConvergenceError(MongeAmpereError):
    def __init__(self, message: str, result=None):
        self.result = result
        super().__init__(message)


class StudyAbortedError(MongeAmpereError):
    """A convergence study level failed; ``report`` holds the finished levels."""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)
