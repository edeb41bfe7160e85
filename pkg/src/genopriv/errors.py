"""Exception hierarchy shared by every layer of the toolkit."""


class GenoprivError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(GenoprivError):
    """Group or key parameters could not be generated or are invalid."""


class ValidationError(GenoprivError):
    """A received value failed a membership or range check."""


class ProtocolError(GenoprivError):
    """Malformed message, length mismatch or otherwise unusable payload."""


class ProtocolStateError(ProtocolError):
    """A message arrived in the wrong phase, or a phase was replayed."""


class ConfigMismatchError(ProtocolError):
    """The two parties do not share the same common input."""


class MarkerAmbiguityError(GenoprivError):
    """A marker probe selected more than one fragment."""
