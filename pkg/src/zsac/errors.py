"""Exception types raised by the zsac package."""


class ZsacError(Exception):
    """Base class for all domain errors."""


class DimensionError(ZsacError):
    """Embedding or matrix dimensions do not line up."""


class ClassIndexError(ZsacError):
    """A class id is outside the class set, or ids are not 0..C-1."""


class EmptyClassSetError(ZsacError):
    """An operation requires at least one class."""


class EmptyDatasetError(ZsacError):
    """An operation requires at least one sample."""


class InsufficientClassesError(ZsacError):
    """Training requires at least two classes."""


class ParseError(ZsacError):
    """A file does not conform to its documented format."""


class EmptyTableError(ZsacError):
    """A word-vector table contains no entries."""


class DuplicateLabelError(ZsacError):
    """A label text occurs more than once where uniqueness is required."""


class MissingEmbeddingError(ZsacError):
    """A referenced embedding or sample id does not exist."""


class OovError(ZsacError):
    """A token has no entry in the word-vector table."""


class EmptyCompositionError(ZsacError):
    """No tokens of a label could be resolved to vectors."""


class EmptyFramesError(ZsacError):
    """Frame aggregation requires at least one frame."""


class ProtocolError(ZsacError):
    """The dataset shape violates an evaluation-protocol precondition."""


class ParameterError(ZsacError):
    """A configuration parameter is out of range or inconsistent."""
