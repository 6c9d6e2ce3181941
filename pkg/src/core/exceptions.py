"""Exception hierarchy shared by the library and the command-line front end"""
from typing import Any, Dict, Optional, Sequence


class RaterCapabilityError(Exception):
    """Base class for all errors raised by the toolkit"""


class DataValidationError(RaterCapabilityError, ValueError):
    """Raised when a rating file or in-memory rating set is malformed"""


class ConfigurationError(RaterCapabilityError, ValueError):
    """Raised for invalid configuration documents or option values"""


class ParameterError(RaterCapabilityError, ValueError):
    """Raised when model parameters are invalid or inconsistent with the model family"""


class DegenerateProbabilityError(RaterCapabilityError, ArithmeticError):
    """Raised when a success probability is exactly 0 or 1 where information is required"""


class QuadratureError(RaterCapabilityError):
    """Raised when a quadrature evaluation is refused or produces non-finite values"""


class IdentifiabilityError(RaterCapabilityError):
    """Raised when the rating design splits into disconnected components"""

    def __init__(self, message: str, components: Optional[Sequence[Sequence[str]]] = None):
        super().__init__(message)
        self.components = [list(c) for c in components] if components else []


class LineSearchError(RaterCapabilityError):
    """Raised when a safeguarded Newton step or a quasi-Newton search cannot increase the objective"""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class CovarianceError(RaterCapabilityError, ValueError):
    """Raised when a covariance matrix is not symmetric positive semidefinite"""


class ConvergenceError(RaterCapabilityError):
    """Raised when an iterative procedure fails in a way that leaves no usable estimate"""


class ReportWriteError(RaterCapabilityError, OSError):
    """Raised when an output file cannot be written"""

    def __init__(self, path: str, reason: str):
        super().__init__(f"Could not write {path}: {reason}")
        self.path = path
