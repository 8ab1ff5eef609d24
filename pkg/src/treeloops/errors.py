"""Exception types shared across the package.

Two families matter operationally: validation errors (bad arguments,
CLI exit code 2) and diagnostic errors (the computation ran but the
result is a refusal, e.g. no phase transition found; CLI exit code 3).
"""


class TreeloopsError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(TreeloopsError, ValueError):
    """An argument is outside its documented range."""


class UnknownVertexError(TreeloopsError, KeyError):
    """Vertex id not present in the tree."""


class UnknownEdgeError(TreeloopsError, KeyError):
    """Edge (child-vertex id) not present in the tree or configuration."""


class DegenerateStartError(TreeloopsError):
    """Loop trace started exactly on a link time."""


class PrecisionError(TreeloopsError):
    """A series evaluation cannot meet its accuracy guarantee."""


class DiagnosticError(TreeloopsError):
    """Base class for run-completed-but-refused results (exit code 3)."""


class NoTransitionError(DiagnosticError):
    """Threshold search found no crossing inside the bracket.

    Carries the scanned curve so callers can inspect it.
    """

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class NonMonotoneCurveError(DiagnosticError):
    """Survival scan is not monotone at 3 standard errors; bisection refused."""

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class DegenerateSampleError(DiagnosticError):
    """All Monte Carlo samples fell into a degenerate class (e.g. every
    percolation component died before the requested depth)."""
