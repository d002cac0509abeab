"""Exception taxonomy shared across the toolkit."""


class MagwireError(Exception):
    """Base class for all toolkit errors."""


class FormatError(MagwireError, ValueError):
    """A serialized file violates its format contract."""


class BadMagicError(FormatError):
    """File does not start with the expected magic bytes."""


class TruncatedPayloadError(FormatError):
    """File ends before the declared payload is complete."""


class SizeMismatchError(FormatError):
    """Declared dimensions are invalid or inconsistent with the payload."""


class VersionMismatchError(FormatError):
    """Weight file declares an unsupported format version."""


class ShapeMismatchError(FormatError):
    """Weight file layers do not match the fixed network architecture."""


class NonFiniteParameterError(FormatError):
    """Weight file contains NaN or infinite parameters."""


class EstimationError(MagwireError, ValueError):
    """Initial parameter estimation cannot proceed (degenerate image)."""


class NoiseUndefinedError(MagwireError, ValueError):
    """Operation requires a known noise level but the image has none."""


class HeadMismatchError(MagwireError, ValueError):
    """Weight file head kind does not match the requested inference."""
