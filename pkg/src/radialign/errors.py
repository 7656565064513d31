"""Exception hierarchy shared across the package.

Every error raised by radialign derives from :class:`RadialignError`, so
callers (and the CLI) can distinguish data problems from programming bugs.
"""


class RadialignError(Exception):
    """Base class for all radialign errors."""


class ZeroVector(RadialignError):
    """A vector with (near-)zero norm was used where a direction is required."""


class DimensionMismatch(RadialignError):
    """Vectors of different dimensionality were combined."""


class DegenerateAngle(RadialignError):
    """An angle is undefined because two of its defining points coincide."""


class CountMismatch(RadialignError):
    """A fixed-arity operation received the wrong number of inputs."""


class EmptyBatch(RadialignError):
    """An aggregate loss was requested over an empty minibatch."""


class MissingNegatives(RadialignError):
    """A hierarchy record without negative captions was used for training."""


class KeyNotFound(RadialignError):
    """An embedding key does not resolve in the store."""

    def __init__(self, key: str, context: str = ""):
        self.key = key
        msg = f"key not found: {key!r}"
        if context:
            msg += f" ({context})"
        super().__init__(msg)


class NonFiniteLoss(RadialignError):
    """Training produced a NaN or infinite loss value."""


class EmptyCandidates(RadialignError):
    """Retrieval was attempted over an empty candidate set."""


class BadK(RadialignError):
    """k is outside the valid range for a top-k query."""


class BadGroundTruth(RadialignError):
    """Ground-truth input does not have the required shape."""


class DegenerateInput(RadialignError):
    """A statistic is undefined for the given input (e.g. constant series)."""


class OrderViolation(RadialignError):
    """A label pair violates the root-distance ordering precondition."""


class GridMisconfigured(RadialignError):
    """The cross-validation constant grid deviates from the required one."""


class StoreError(RadialignError):
    """Base class for embedding-store file errors; carries a byte offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (byte offset {offset})")


class CorruptHeader(StoreError):
    """The store file header is malformed."""


class TruncatedFile(StoreError):
    """The store file ends before the declared payload."""


class DuplicateKey(StoreError):
    """The same key occurs more than once in a store file."""


class SchemaError(RadialignError):
    """A structured data file violates its schema."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        parts = [message]
        if line is not None:
            parts.append(f"line {line}")
        if field is not None:
            parts.append(f"field {field!r}")
        super().__init__(" | ".join(parts))
