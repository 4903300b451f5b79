"""Exception types shared across the package."""


class MarnError(Exception):
    """Base class for errors raised by this package."""


class ShapeError(MarnError):
    """Operands have incompatible shapes for the requested kernel."""


class IdLookupError(MarnError):
    """A token id falls outside the embedding table."""


class StatisticsError(MarnError):
    """Too few contributing samples to compute batch statistics."""


class EmptySequenceError(MarnError):
    """Every position of a sequence is masked out."""


class ConfigError(MarnError):
    """A configuration value is outside its valid range."""


class NumericError(MarnError):
    """A non-finite value appeared where finite math was required."""


class DataFormatError(MarnError):
    """An on-disk artifact does not match its documented format."""


class MappingConflictError(DataFormatError):
    """An ICD code is mapped to more than one CCS code."""


class MappingGapError(MarnError):
    """A document carries an ICD code absent from the ICD-to-CCS map."""


class InputError(MarnError):
    """An in-memory input violates an operation's precondition."""


class CheckpointError(DataFormatError):
    """A checkpoint file is unreadable or inconsistent with the model."""
