"""Exception types shared across the toolkit."""


class PersumError(Exception):
    """Base class for all toolkit errors."""


class AnnotationSchemaError(PersumError):
    """Annotation file violates the annotation schema; message names the field."""


class SpanIntegrityError(PersumError):
    """Excerpt text disagrees with the substring at its span."""


class DegenerateCompositionError(PersumError):
    """Composition with k_g = k_b = 0; faithfulness is 0/0."""


class SplitSizeError(PersumError):
    """Requested train/test sizes exceed the available pairs."""


class TransportError(PersumError):
    """Endpoint unreachable after all retries.

    Carries the per-attempt error log in ``attempts``.
    """

    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = list(attempts or [])


class ProtocolError(PersumError):
    """Endpoint reply was malformed or out of the allowed range."""


class RenderError(PersumError):
    """Prompt rendering failed; message names the unbound placeholder."""


class ScoreParseError(PersumError):
    """Judge completion did not end in an integer from the 1..5 scale."""


class ScoringError(PersumError):
    """Judging failed after all retries; the instance stays unscored."""


class UndefinedMetricError(PersumError):
    """Metric is undefined for the given input (e.g. summary shorter than n)."""


class UndefinedCorrelationError(PersumError):
    """Spearman correlation undefined (constant input vector)."""


class ParameterError(PersumError):
    """Invalid parameter value for a simulation or statistic."""


class NoValidPairsError(PersumError):
    """Winrate has no within-article pair with distinct ground truth."""


class RerankError(PersumError):
    """Too many candidates unscored to select a best summary."""


class BootstrapError(PersumError):
    """A bootstrap resample kept failing to fit after the redraw budget."""


class ConfigError(PersumError):
    """Invalid run or endpoint configuration."""
