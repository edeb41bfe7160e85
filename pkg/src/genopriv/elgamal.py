"""Exponent ElGamal over a Schnorr group.

Messages live in the exponent, so ciphertexts add under componentwise
multiplication and scale under exponentiation.  Only a zero test is offered:
recovering a general plaintext would need a discrete logarithm, and private
equality testing never needs one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .groups import SchnorrGroup, default_rng, powmod

Ciphertext = tuple[int, int]


@dataclass(frozen=True)
class PublicKey:
    group: SchnorrGroup
    h: int


@dataclass(frozen=True)
class SecretKey:
    public: PublicKey
    x: int = field(repr=False)


def keygen(group: SchnorrGroup, rng=None) -> tuple[PublicKey, SecretKey]:
    x = group.random_scalar(rng)
    pk = PublicKey(group, powmod(group.g, x, group.p))
    return pk, SecretKey(pk, x)


def encrypt(pk: PublicKey, m: int, rng=None) -> Ciphertext:
    """Encrypt ``m`` (taken mod q, so negative messages are fine)."""
    G = pk.group
    r = G.random_scalar(rng or default_rng())
    return (powmod(G.g, r, G.p),
            powmod(pk.h, r, G.p) * powmod(G.g, m % G.q, G.p) % G.p)


def product(pk: PublicKey, c1: Ciphertext, c2: Ciphertext) -> Ciphertext:
    """Ciphertext of the sum of the two plaintexts."""
    p = pk.group.p
    return (c1[0] * c2[0] % p, c1[1] * c2[1] % p)


def scale(pk: PublicKey, c: Ciphertext, r: int) -> Ciphertext:
    """Ciphertext of ``r`` times the plaintext."""
    p = pk.group.p
    return (powmod(c[0], r, p), powmod(c[1], r, p))


def check(pk: PublicKey, c: Ciphertext) -> Ciphertext:
    G = pk.group
    if len(c) != 2 or not (G.is_element(c[0]) and G.is_element(c[1])):
        raise ValidationError("ciphertext component outside the subgroup")
    return c


def is_zero(sk: SecretKey, c: Ciphertext) -> bool:
    """True iff ``c`` encrypts 0 (mod q)."""
    G = sk.public.group
    check(sk.public, c)
    return c[1] == powmod(c[0], sk.x, G.p)


def encode_ciphertext(pk: PublicKey, c: Ciphertext) -> list[bytes]:
    return [pk.group.encode(c[0]), pk.group.encode(c[1])]
