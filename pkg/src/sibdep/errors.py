"""Exception hierarchy for the toolkit.

Domain errors (invalid laws, degenerate inputs, failed calibrations) derive from
SibdepError so the command line layer can map them to a single exit code.
Format errors raised while parsing ensemble documents derive from
EnsembleFormatError and are treated as usage errors.
"""

from __future__ import annotations


class SibdepError(Exception):
    """Base class for all domain errors raised by this package."""


class InvalidLawError(SibdepError, ValueError):
    """An offspring law failed validation; the report is attached."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EnsembleFormatError(SibdepError, ValueError):
    """An ensemble document is structurally malformed (schema or encoding)."""


class DegenerateEnvironmentError(SibdepError, ValueError):
    """An environment lacks the mass needed for the requested statistic."""


class DegenerateProductError(SibdepError, ArithmeticError):
    """A matrix product collapsed to zero and cannot be renormalized."""

    def __init__(self, message, steps=None):
        super().__init__(message)
        self.steps = steps


class PowerIterationError(SibdepError, RuntimeError):
    """Power iteration failed to converge; diagnostic residual attached."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class CalibrationError(SibdepError, RuntimeError):
    """Critical calibration could not bracket or localize a sign change."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class InsufficientSurvivorsError(SibdepError, RuntimeError):
    """Too few surviving replicas to form the requested conditional estimate."""

    def __init__(self, message, survivors=None, required=None):
        super().__init__(message)
        self.survivors = survivors
        self.required = required


class PopulationCapError(SibdepError, RuntimeError):
    """A simulated population crossed the per-generation size cap."""

    def __init__(self, message, generation=None, cap=None, trajectory=None):
        super().__init__(message)
        self.generation = generation
        self.cap = cap
        self.trajectory = trajectory   # partial results up to the failing step
