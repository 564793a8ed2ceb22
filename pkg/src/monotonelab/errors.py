"""Shared exception types.

Every failure mode that callers are expected to handle gets its own class so
that test code and the scenario runner can catch precisely what they mean to
catch.  Numerical failures carry the residual that was actually achieved;
nothing fails silently.
"""

from __future__ import annotations


class InputError(ValueError):
    """Malformed input: wrong shape, non-finite entries, out-of-range parameter."""


class DimensionMismatchError(InputError):
    """Vector or matrix dimensions do not match the ambient space."""


class ConstructionError(InputError):
    """An operator description failed its construction-time certificate."""


class ScenarioError(InputError):
    """A scenario file failed validation; the message names the offending field."""


class SolverFailError(RuntimeError):
    """A numerical subproblem did not reach its required residual.

    Parameters
    ----------
    message : str
        Human-readable description of the subproblem.
    residual : float, optional
        Best residual achieved before giving up.
    """

    def __init__(self, message, residual=None):
        if residual is not None:
            message = f"{message} (best residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class NoSelectionError(SolverFailError):
    """Minimal selection requested at a point outside the operator's domain."""

    def __init__(self, message):
        super().__init__(message, residual=None)


class FaceUndefinedError(ValueError):
    """Exposed face requested in a direction where the set is unbounded."""
