class AttentionAlignError(ValueError):
    """Base class for every domain error raised by the package."""


class InvalidTemperatureError(AttentionAlignError):
    """Temperature is not strictly positive."""


class EmptyInputError(AttentionAlignError):
    """An input vector, sequence or collection is empty."""


class EncoderConfigError(AttentionAlignError):
    """Encoder configuration or weight shapes are inconsistent."""


class VocabularyError(AttentionAlignError):
    """A token id falls outside the embedding table."""


class ShapeError(AttentionAlignError):
    """Logit rows of mixed lengths, or an array of the wrong shape."""


class ZeroSigmaError(AttentionAlignError):
    """A Gaussian fit was requested for a constant vector."""


class NoRealRootError(AttentionAlignError):
    """The max-probability quadratic has a negative discriminant."""

    def __init__(self, discriminant: float):
        super().__init__(f"no real root: discriminant {discriminant:.6g} < 0")
        self.discriminant = discriminant


class DegenerateCoefficientError(AttentionAlignError):
    """The leading coefficient of the max-probability quadratic is not positive."""


class PreconditionError(AttentionAlignError):
    """An operation was called outside its documented domain."""


class DegenerateSamplesError(AttentionAlignError):
    """Sample set is constant or too small for the requested statistic."""


class UsageError(AttentionAlignError):
    """Command-line input is missing or malformed."""
