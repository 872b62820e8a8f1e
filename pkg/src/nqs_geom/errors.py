"""Exception hierarchy shared by every nqs_geom module.

Everything raised on purpose derives from :class:`NqsGeomError`, so callers
(and the CLI task runner) can separate structured failures from genuine bugs.
"""

from __future__ import annotations


class NqsGeomError(Exception):
    """Base class for all structured errors raised by this package."""


class DimensionError(NqsGeomError):
    """Operands have incompatible or malformed shapes."""


class ConstructionError(NqsGeomError):
    """A validated container rejected its input (hermiticity, trace, ...)."""


class DomainError(NqsGeomError):
    """A scalar argument is outside the domain of the operation."""


class FaithfulnessError(NqsGeomError):
    """A state that must be full rank has an eigenvalue at or below threshold."""


class SupportError(NqsGeomError):
    """A classical probability vector has a zero entry where support is required."""


class EvaluationError(NqsGeomError):
    """A user-supplied callable returned a non-finite or malformed value."""


class NonPrimitiveError(NqsGeomError):
    """The generator does not relax to a unique faithful stationary state."""


class InvalidGeneratorError(NqsGeomError):
    """The matrix is not usable as a generator (bad kernel, bad residuals)."""


class InvalidPerturbationError(NqsGeomError):
    """A perturbation direction is not trace annihilating."""


class UnsupportedDivergenceError(NqsGeomError):
    """Only the relative-entropy divergence is implemented."""


class FieldError(NqsGeomError):
    """A vertex field does not match the graph (missing vertex, wrong size)."""


class DegenerateSpecError(NqsGeomError):
    """The assembled self-consistency system is singular."""


class NonConvergenceError(NqsGeomError):
    """The iterative solver exhausted its budget.

    Carries the last residual norm so callers can report it.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DegenerateCartanError(NqsGeomError):
    """The Gram matrix of the charge generators is singular."""


class LoopError(NqsGeomError):
    """A transport chain is inconsistent or does not close."""


class ScenarioError(NqsGeomError):
    """Base class for scenario loading problems.  Carries a field path."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ScenarioParseError(ScenarioError):
    """The scenario text is not parseable."""


class ScenarioValidationError(ScenarioError):
    """The scenario parsed but violates the schema or an invariant."""


class UnsupportedTaskError(ScenarioValidationError):
    """A task names a kind this version does not implement."""


class UsageError(NqsGeomError):
    """Bad command-line arguments or report format."""
