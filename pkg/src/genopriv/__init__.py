"""Privacy-preserving genetic tests built on private set operations."""

from .errors import (ConfigMismatchError, GenoprivError, MarkerAmbiguityError, ParameterError,
                     ProtocolError, ProtocolStateError, ValidationError)
from .genome import Genome, synth_family, synth_genome, synth_reference
from .groups import CaKey, RsaGroup, SchnorrGroup, default_ca, default_schnorr, gen_rsa, gen_schnorr

__version__ = "0.1.0"

__all__ = [
    "CaKey", "ConfigMismatchError", "Genome", "GenoprivError", "MarkerAmbiguityError",
    "ParameterError", "ProtocolError", "ProtocolStateError", "RsaGroup", "SchnorrGroup",
    "ValidationError", "default_ca", "default_schnorr", "gen_rsa", "gen_schnorr",
    "synth_family", "synth_genome", "synth_reference",
]
