"""Private equality testing over ordered vectors.

The client encrypts its vector under exponent ElGamal; the server returns
the randomized differences ``(Enc(c_i) * Enc(-s_i))^{r_i}`` in a freshly
shuffled order, so the client can count zero plaintexts without learning
where they were.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from . import elgamal
from .elgamal import Ciphertext, PublicKey, SecretKey
from .errors import ProtocolError, ValidationError
from .groups import SchnorrGroup, default_rng
from .psi import new_session_id
from .wire import Kind, Phase, ProtocolMessage

NUCLEOTIDE_CODES = {"A": 1, "C": 2, "G": 3, "T": 4, "-": 5}


def encode_nucleotides(seq: str) -> list[int]:
    return [NUCLEOTIDE_CODES[b] for b in seq]


@dataclass(frozen=True)
class PetQuery:
    pk: PublicKey
    ciphertexts: tuple[Ciphertext, ...]
    session_id: bytes

    def __len__(self):
        return len(self.ciphertexts)

    def to_message(self) -> ProtocolMessage:
        G = self.pk.group
        flat = [G.encode(x) for c in self.ciphertexts for x in c]
        return ProtocolMessage(self.session_id, Kind.PET, Phase.REQUEST, ([G.encode(self.pk.h)], flat))

    @classmethod
    def from_message(cls, group: SchnorrGroup, msg: ProtocolMessage) -> "PetQuery":
        msg.expect(Kind.PET, Phase.REQUEST)
        if len(msg.lists) != 2 or len(msg.lists[0]) != 1:
            raise ProtocolError("malformed PET query")
        pk = PublicKey(group, group.decode(msg.lists[0][0]))
        return cls(pk, _pairs(group, msg.lists[1]), msg.session_id)


@dataclass(frozen=True)
class PetResponse:
    ciphertexts: tuple[Ciphertext, ...]
    session_id: bytes

    def __len__(self):
        return len(self.ciphertexts)

    def to_message(self, group: SchnorrGroup) -> ProtocolMessage:
        flat = [group.encode(x) for c in self.ciphertexts for x in c]
        return ProtocolMessage(self.session_id, Kind.PET, Phase.RESPONSE, (flat,))

    @classmethod
    def from_message(cls, group: SchnorrGroup, msg: ProtocolMessage) -> "PetResponse":
        msg.expect(Kind.PET, Phase.RESPONSE)
        if len(msg.lists) != 1:
            raise ProtocolError("malformed PET response")
        return cls(_pairs(group, msg.lists[0]), msg.session_id)


def _pairs(group, flat) -> tuple[Ciphertext, ...]:
    if len(flat) % 2:
        raise ProtocolError("odd number of ciphertext components")
    vals = [group.decode(x) for x in flat]
    return tuple(zip(vals[0::2], vals[1::2]))


def _check_message(pk: PublicKey, values: Sequence[int]) -> list[int]:
    q = pk.group.q
    out = []
    for v in values:
        v = int(v)
        if not 0 <= v < q:
            raise ValidationError(f"value {v} outside the message space")
        out.append(v)
    return out


def pet_query(pk: PublicKey, values: Sequence[int], rng=None,
              session_id: bytes | None = None) -> PetQuery:
    rng = rng or default_rng()
    values = _check_message(pk, values)
    if not values:
        raise ValueError("query vector must not be empty")
    cts = tuple(elgamal.encrypt(pk, v, rng) for v in values)
    return PetQuery(pk, cts, session_id or new_session_id(rng))


def pet_respond(pk: PublicKey, query: PetQuery, values: Sequence[int], rng=None) -> PetResponse:
    """Randomize each difference with a fresh non-zero exponent, then shuffle."""
    rng = rng or default_rng()
    values = _check_message(pk, values)
    if len(values) != len(query):
        raise ProtocolError("query length does not match the server vector")
    G = pk.group
    out = []
    for c, s in zip(query.ciphertexts, values):
        elgamal.check(pk, c)
        diff = elgamal.product(pk, c, elgamal.encrypt(pk, -s, rng))
        out.append(elgamal.scale(pk, diff, G.random_scalar(rng)))
    rng.shuffle(out)
    return PetResponse(tuple(out), query.session_id)


def pet_count_matches(sk: SecretKey, response: PetResponse) -> int:
    return sum(elgamal.is_zero(sk, c) for c in response.ciphertexts)
