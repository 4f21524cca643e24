"""Exception hierarchy shared by the library, the service and the CLI.

The CLI exit-code contract maps onto these types:
0 ok / 1 configuration / 2 accuracy / 3 near-singular / 4 degenerate study.
"""

from __future__ import annotations


class PlanescatterError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    code = "error"


class ConfigurationError(PlanescatterError):
    """Invalid configuration or malformed input data."""

    exit_code = 1
    code = "configuration"


class DomainError(PlanescatterError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 1
    code = "domain"


class BranchPointError(DomainError):
    """Spectral parameter sits exactly on a branch point (k^2 = lambda)."""

    code = "branch-point"


class SingularityError(PlanescatterError):
    """Kernel evaluated on its singular set (coincident points etc.)."""

    exit_code = 1
    code = "singularity"


class AccuracyError(PlanescatterError):
    """A quadrature failed its internal accuracy target.

    Carries diagnostics about the offending evaluation.
    """

    exit_code = 2
    code = "accuracy"

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class NearSingularError(PlanescatterError):
    """The boundary solve is numerically singular.

    Raised when the condition estimate of (1 + alpha J M D_w) exceeds the
    threshold; flags the spectral point as a candidate embedded eigenvalue.
    """

    exit_code = 3
    code = "near-singular"

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DegenerateStudyError(PlanescatterError):
    """A parameter study cannot produce a fit (e.g. all-zero data)."""

    exit_code = 4
    code = "degenerate-study"
