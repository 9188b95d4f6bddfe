"""
Exception hierarchy for the solver library.

INFEASIBLE outcomes are statuses, not exceptions; everything here signals a
broken precondition, an exceeded cap, or a failed self-check.
"""


class StochSupError(Exception):
    """Base class for every library error."""


class InvalidInstance(StochSupError, ValueError):
    """Instance, scenario or constraint data failed validation."""


class InvalidMatroid(InvalidInstance):
    """Explicit independence data does not describe a matroid."""


class InvalidConfig(StochSupError, ValueError):
    """A run or generator parameter is out of range."""


class EmptyBall(StochSupError):
    """A client ball has no facility (standing assumption violated)."""


class MissingScenario(StochSupError):
    """A strategy has neither a stage-II set nor an extension rule for a scenario."""


class IterationLimitExceeded(StochSupError):
    """A pivot, separation or cut loop ran past its cap."""


class SeparationError(StochSupError):
    """A separation oracle returned a row the current point already satisfies."""


class TableCapExceeded(StochSupError):
    """The knapsack dynamic-program table would exceed the configured cap."""


class CapExceeded(StochSupError):
    """An exhaustive routine was asked to enumerate past its cap."""


class ConstraintMismatch(StochSupError):
    """An algorithm was paired with a stage-I structure or radii it cannot handle."""


class RoundingError(StochSupError):
    """Iterative rounding could not proceed."""


class NoIntegralClientFound(RoundingError):
    """No undecided client has an integral ball mass at the current vertex."""


class InvariantViolation(RoundingError):
    """A live invariant check failed."""


__all__ = [
    'StochSupError',
    'InvalidInstance',
    'InvalidMatroid',
    'InvalidConfig',
    'EmptyBall',
    'MissingScenario',
    'IterationLimitExceeded',
    'SeparationError',
    'TableCapExceeded',
    'CapExceeded',
    'ConstraintMismatch',
    'RoundingError',
    'NoIntegralClientFound',
    'InvariantViolation',
]
