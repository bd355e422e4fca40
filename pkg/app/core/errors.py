"""
Error hierarchy shared by every module.

ConfigError covers bad caller input (exit status 2, HTTP 400);
ValidationFailure covers data that fails a runtime check (exit status 3, HTTP 422).
"""


class IANetError(ValueError):
    """Base class for all domain errors"""

    exit_code = 1


class ConfigError(IANetError):
    exit_code = 2


class ValidationFailure(IANetError):
    exit_code = 3


# ======================================
# Configuration errors
# ======================================

class IndivisibleInput(ConfigError):
    """Input length is not a multiple of the pipeline's composed temporal denominator"""


class EmptyChain(ConfigError):
    """A plan was requested for a chain without processing nodes"""


class PlanChainMismatch(ConfigError):
    """A partition plan does not fit the scenario's pipeline or chain"""


class MalformedConfig(ConfigError):
    """A pipeline, plan or scenario document failed to parse or validate"""


# ======================================
# Runtime validation errors
# ======================================

class ShapeMismatch(ValidationFailure):
    """A tensor does not have the shape a block expects"""


class EmptyRange(ValidationFailure):
    """A block-index interval selects no blocks"""


class MalformedHeader(ValidationFailure):
    """A serialized tensor header is missing or invalid"""


class TruncatedPayload(ValidationFailure):
    """A serialized tensor holds fewer payload bytes than its header declares"""


class MissingBaseline(ValidationFailure):
    """A latency report carries no SF baseline byte count"""


class DimensionMismatch(ValidationFailure):
    """Feature sets being compared have different dimensions"""


class DegenerateLabels(ValidationFailure):
    """AUC needs at least one normal and one anomalous sample"""
