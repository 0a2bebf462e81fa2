"""
Exception Hierarchy

Every failure the toolkit reports derives from StripSpectrumError.
The CLI maps the classes to exit codes: configuration problems exit with 1,
violated inequalities and failed verification checks exit with 2.
"""

from typing import Any, List, Optional, Tuple


class StripSpectrumError(Exception):
    """Base class for all toolkit errors."""

    exit_code: int = 1


class ConfigError(StripSpectrumError, ValueError):
    """Run configuration is malformed, inconsistent or describes an invalid model."""


class UnsupportedBranchError(StripSpectrumError, ValueError):
    """Operation called on a model variant it is not defined for."""


class BracketExhaustedError(StripSpectrumError, RuntimeError):
    """
    Eigenvalue scan ended before the requested roots were bracketed.

    Attributes:
        scan_trace: (lambda, secular value) pairs visited by the scan
    """

    def __init__(self, message: str, scan_trace: Optional[List[Tuple[float, float]]] = None):
        super().__init__(message)
        self.scan_trace = scan_trace or []


class MeshError(StripSpectrumError, ValueError):
    """
    Mesh parameters are inconsistent or quadrature nodes fall outside the mesh.

    Attributes:
        nodes: offending node coordinates
    """

    def __init__(self, message: str, nodes: Optional[List[Any]] = None):
        super().__init__(message)
        self.nodes = nodes or []


class FactorizationError(StripSpectrumError, RuntimeError):
    """Symmetric indefinite factorization broke down and no fallback applies."""


class AssertionFailure(StripSpectrumError):
    """A checked inequality or verification property did not hold."""

    exit_code: int = 2
