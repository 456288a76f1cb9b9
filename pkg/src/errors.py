"""
Error hierarchy for the hydride discovery pipeline.

Every error raised on purpose by the package derives from HydrideDiscoveryError and
carries the process exit code the command line maps it to.
"""


class HydrideDiscoveryError(Exception):
    """Base class for all pipeline errors."""

    exit_code: int = 1


class MissingInputError(HydrideDiscoveryError):
    """A required input file or prior stage output is absent."""

    exit_code = 2


class ValidationFailure(HydrideDiscoveryError, ValueError):
    """Input data or configuration violates a documented invariant."""

    exit_code = 3


class NumericDivergenceError(HydrideDiscoveryError, ArithmeticError):
    """A numerical procedure produced non-finite values."""

    exit_code = 4


class FormulaError(ValidationFailure):
    """Chemical formula could not be parsed or is not a valid composition."""


class CifError(ValidationFailure):
    """CIF text is malformed or missing mandatory tags."""


class ScoringError(ValidationFailure):
    """Scoring input outside its domain (NaN energy, fraction outside [0, 1])."""


class SchemaError(ValidationFailure):
    """Tabular input does not match the documented column schema."""


class RecordValidationError(ValidationFailure):
    """A material record violates its invariants."""


class DatasetError(ValidationFailure):
    """Invalid dataset operation (degenerate split, duplicate ids, bad discretization)."""


class CausalDiscoveryError(ValidationFailure):
    """Invalid causal discovery request (unknown variable, too few rows)."""


class PcrError(ValidationFailure):
    """Principal component regression input is invalid."""


class ModelError(ValidationFailure):
    """VAE input has the wrong shape or the model is invalid."""


class CheckpointError(ValidationFailure):
    """A model checkpoint is unreadable or violates model invariants."""


class EstimatorError(ValidationFailure):
    """Energy estimator misuse (no training data, unfitted)."""


class ScreeningError(ValidationFailure):
    """Candidate screening or accuracy evaluation input is invalid."""
