"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class ShellError(Exception):
    """Base class for all package errors."""


class DegenerateMetric(ShellError):
    """The first fundamental form is (numerically) singular."""


class NotOrientationPreserving(ShellError):
    """A matrix handed to the polar decomposition has det <= 0."""


class NotSkew(ShellError):
    """A matrix expected in so(3) is not skew-symmetric."""


class InvalidMaterial(ShellError):
    """Constitutive constants violate the positivity hypotheses."""


class ConditionsViolated(ShellError):
    """Thickness/curvature conditions needed for coercivity do not hold."""


class InconsistentGrid(ShellError):
    """Field arrays do not match the grid they are attached to."""


class LineSearchFailure(ShellError):
    """Backtracking could not produce a sufficient decrease.

    The last accepted iterate and the trace so far are attached so callers can
    still inspect or write them out.
    """

    def __init__(self, message: str, config=None, trace=None):
        super().__init__(message)
        self.config = config
        self.trace = trace


class ConfigError(ShellError):
    """A run configuration failed schema or physical validation."""
