"""Application-specific exceptions."""
from typing import Any, Dict, Optional


class GwModelError(Exception):
    """Base class for every error raised by the GW modelling services."""

    message = "GW model error"
    code = "gw_model_error"
    exit_code = 1
    status_code = 400

    def __init__(self, message: Optional[str] = None, **details: Any):
        self.message = message or self.message
        self.details: Dict[str, Any] = details
        super().__init__(self.message)


class GwValidationError(GwModelError):
    """Input, selection or configuration does not satisfy a precondition."""

    code = "validation_error"
    exit_code = 1
    status_code = 400


class GwNumericalError(GwModelError):
    """A numerical step failed (singular system, degenerate local sample, ...)."""

    code = "numerical_error"
    exit_code = 2
    status_code = 422


# Validation errors

class NonFiniteValueError(GwValidationError):
    message = "Dataset contains a non-finite value"
    code = "non_finite_value"


class DuplicateNameError(GwValidationError):
    message = "Column names must be unique and nonempty"
    code = "duplicate_name"


class EmptyDatasetError(GwValidationError):
    message = "Dataset has no rows or no attribute columns"
    code = "empty_dataset"


class GeographicRangeViolationError(GwValidationError):
    message = "Longitude must lie in [-180, 180] and latitude in [-90, 90]"
    code = "geographic_range_violation"


class ZeroVarianceError(GwValidationError):
    message = "Column has zero standard deviation"
    code = "zero_variance"


class InvalidPowerError(GwValidationError):
    message = "Minkowski power must be >= 1"
    code = "invalid_power"


class InvalidKernelSpecError(GwValidationError):
    message = "Invalid kernel specification"
    code = "invalid_kernel_spec"


class AdaptiveCountExceedsNError(GwValidationError):
    message = "Adaptive bandwidth exceeds the number of data points"
    code = "adaptive_count_exceeds_n"


class InvalidSelectionError(GwValidationError):
    message = "Invalid variable selection"
    code = "invalid_selection"


class MissingColumnError(GwValidationError):
    message = "Column not found"
    code = "missing_column"


class ParseError(GwValidationError):
    message = "Value could not be parsed as a number"
    code = "parse_error"


class EmptyFileError(GwValidationError):
    message = "Input file has no data rows"
    code = "empty_file"


class InvalidComponentCountError(GwValidationError):
    message = "Number of retained components must be between 1 and the number of variables"
    code = "invalid_component_count"


class KEqualsMError(GwValidationError):
    message = "Cross-validation needs fewer retained components than variables"
    code = "k_equals_m"


class ScoresUnavailableError(GwValidationError):
    message = "Component scores cannot be obtained at unobserved target locations"
    code = "scores_unavailable"


class ConfigError(GwValidationError):
    message = "Invalid run configuration"
    code = "config_error"


# Numerical errors

class AllScoresNonFiniteError(GwNumericalError):
    message = "Every evaluated bandwidth produced a non-finite score"
    code = "all_scores_non_finite"


class ZeroWeightSumError(GwNumericalError):
    message = "Weights sum to zero"
    code = "zero_weight_sum"


class DegenerateLocalDistributionError(GwNumericalError):
    message = "Local distribution is degenerate"
    code = "degenerate_local_distribution"


class ZeroMeanError(GwNumericalError):
    message = "Coefficient of variation is undefined for a zero local mean"
    code = "zero_mean"


class InsufficientLocalDataError(GwNumericalError):
    message = "Not enough positively weighted data at this location"
    code = "insufficient_local_data"


class SingularLocalCovarianceError(GwNumericalError):
    message = "Local covariance matrix is singular"
    code = "singular_local_covariance"


class DegenerateSubsetError(GwNumericalError):
    message = "Every candidate MCD subset has a singular covariance"
    code = "degenerate_subset"


class SingularLocalFitError(GwNumericalError):
    message = "Local regression system is singular"
    code = "singular_local_fit"


class AiccUndefinedError(GwNumericalError):
    message = "AICc is undefined because n - 2 - tr(S) <= 0"
    code = "aicc_undefined"


class TooFewAfterFilterError(GwNumericalError):
    message = "Too few observations remain after outlier filtering"
    code = "too_few_after_filter"


class ZeroColumnError(GwNumericalError):
    message = "Design matrix has a zero column"
    code = "zero_column"


class SingularCorrelationMatrixError(GwNumericalError):
    message = "Local correlation matrix of the predictors is singular"
    code = "singular_correlation_matrix"


class ResultIoError(GwNumericalError):
    message = "Results could not be written"
    code = "io_error"
    status_code = 500
