"""Exception hierarchy shared across the package."""


class NlvnError(Exception):
    """Base class for all package errors."""


class DimensionError(NlvnError):
    """Operands have incompatible or unsupported dimensions."""


class ConvergenceError(NlvnError):
    """An iterative eigensolver exceeded its iteration cap.

    Carries the last measured residual in ``residual``.
    """

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class DefectiveMatrixError(NlvnError):
    """Geometric multiplicity below algebraic multiplicity; no eigenbasis."""


class DomainError(NlvnError):
    """A scalar function was evaluated outside its domain (or returned
    non-real values on the spectrum of a Hermitian operator)."""


class FormatError(NlvnError):
    """Malformed matrix/vector/config text."""


class ProjectorError(NlvnError):
    """Degenerate projector: the bra/ket pair is (numerically) orthogonal."""


class DressingError(NlvnError):
    """Inconsistent dressing inputs (additive and product forms disagree,
    or a declared functional relation fails)."""


class ParameterError(NlvnError):
    """Invalid dressing/Lax parameters (zero denominators, equal parameters
    where distinct ones are required, wrong root branch, ...)."""


class SeedError(NlvnError):
    """A proposed seed violates the construction requirements."""


class IntegrationAborted(NlvnError):
    """The flow left the domain of the nonlinearity mid-integration.

    ``trajectory`` holds the valid prefix, ``t_fail`` the failing time.
    """

    def __init__(self, message: str, trajectory=None, t_fail: float = float("nan")):
        super().__init__(message)
        self.trajectory = trajectory
        self.t_fail = t_fail


class ConfigError(NlvnError):
    """Invalid command-line / config-file input."""
