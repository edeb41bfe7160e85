"""Algebraic parameter sets, hash-to-group maps and the RSA authority.

Two kinds of public parameters are used by the set protocols:

* :class:`SchnorrGroup`: the order-``q`` subgroup of ``Z_p^*`` used by
  PSI-CA, PSI and the exponent-ElGamal scheme.
* :class:`RsaGroup`: an RSA modulus built from two safe primes, used by
  APSI.  The matching private exponent lives in :class:`CaKey` and is only
  ever held by the authorization authority.

Arithmetic is delegated to gmpy2; values crossing the module boundary are
plain Python ints.
"""

from __future__ import annotations

import hashlib
import math
import random
import secrets
import struct
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import gmpy2

from .errors import ParameterError, ValidationError

DEFAULT_DIGEST = "sha1"
DEFAULT_SEED = 2013
MAX_ATTEMPTS = 200_000


def powmod(base: int, exp: int, mod: int) -> int:
    return int(gmpy2.powmod(base, exp, mod))


def invert(value: int, mod: int) -> int:
    try:
        return int(gmpy2.invert(value, mod))
    except ZeroDivisionError:
        raise ValidationError(f"{value} is not invertible modulo the group order") from None


def is_prime(n: int) -> bool:
    return bool(gmpy2.is_prime(n, 30))


def default_rng() -> random.Random:
    """Randomness source used when the caller does not supply one."""
    return secrets.SystemRandom()


def _width(bits: int) -> int:
    return (bits + 7) // 8


def _expand(label: bytes, data: bytes, counter: int, nbytes: int) -> int:
    out = bytearray()
    block = 0
    while len(out) < nbytes:
        out += hashlib.sha256(
            label + counter.to_bytes(4, "big") + block.to_bytes(4, "big") + data
        ).digest()
        block += 1
    return int.from_bytes(bytes(out[:nbytes]), "big")


@dataclass(frozen=True)
class SchnorrGroup:
    """Prime-order subgroup of ``Z_p^*``: ``q | p - 1`` and ``g`` has order ``q``."""

    p: int
    q: int
    g: int
    digest: str = DEFAULT_DIGEST

    def __post_init__(self):
        p, q, g = self.p, self.q, self.g
        if p < 5 or q < 2 or not is_prime(p) or not is_prime(q):
            raise ParameterError("p and q must be primes")
        if (p - 1) % q:
            raise ParameterError("q does not divide p - 1")
        if not 1 < g < p or powmod(g, q, p) != 1:
            raise ParameterError("g does not generate the order-q subgroup")
        hashlib.new(self.digest)

    @cached_property
    def cofactor(self) -> int:
        return (self.p - 1) // self.q

    @property
    def element_size(self) -> int:
        return _width(self.p.bit_length())

    @cached_property
    def tag_size(self) -> int:
        return hashlib.new(self.digest).digest_size

    def is_element(self, x: int) -> bool:
        return 0 < x < self.p and powmod(x, self.q, self.p) == 1

    def check_element(self, x: int) -> int:
        if not self.is_element(x):
            raise ValidationError("value is not a member of the order-q subgroup")
        return x

    def random_scalar(self, rng=None) -> int:
        """Uniform exponent in ``[1, q-1]`` (zero excluded so inverses exist)."""
        return (rng or default_rng()).randrange(1, self.q)

    def encode(self, x: int) -> bytes:
        return int(x).to_bytes(self.element_size, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.element_size:
            raise ValidationError("element has the wrong width")
        return self.check_element(int.from_bytes(data, "big"))

    def tag(self, x: int) -> bytes:
        """Outer hash H' over the canonical serialization of an element."""
        return hashlib.new(self.digest, self.encode(x)).digest()


@dataclass(frozen=True)
class RsaGroup:
    """Public RSA parameters ``(N, e, g)`` with ``N`` a product of safe primes."""

    N: int
    e: int
    g: int
    digest: str = DEFAULT_DIGEST

    def __post_init__(self):
        if self.N < 15 or self.e < 3:
            raise ParameterError("degenerate RSA parameters")
        if not 1 < self.g < self.N or math.gcd(self.g, self.N) != 1:
            raise ParameterError("g must be a unit modulo N")
        hashlib.new(self.digest)

    @property
    def element_size(self) -> int:
        return _width(self.N.bit_length())

    @cached_property
    def tag_size(self) -> int:
        return hashlib.new(self.digest).digest_size

    @cached_property
    def half_range(self) -> int:
        """Upper end of the short exponent range ``[1, floor(sqrt(N)/2)]``."""
        return math.isqrt(self.N) // 2

    def random_scalar(self, rng=None) -> int:
        return (rng or default_rng()).randint(1, self.half_range)

    def is_element(self, x: int) -> bool:
        return 0 < x < self.N and math.gcd(x, self.N) == 1

    def check_element(self, x: int) -> int:
        if not self.is_element(x):
            raise ValidationError("value is not a unit modulo N")
        return x

    def encode(self, x: int) -> bytes:
        return int(x).to_bytes(self.element_size, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.element_size:
            raise ValidationError("element has the wrong width")
        return self.check_element(int.from_bytes(data, "big"))

    def tag(self, x: int) -> bytes:
        return hashlib.new(self.digest, self.encode(x)).digest()


@dataclass(frozen=True)
class CaKey:
    """Authority key pair.  ``d`` never leaves the authority."""

    rsa: RsaGroup
    d: int = field(repr=False)

    def __post_init__(self):
        if self.d <= 1:
            raise ParameterError("invalid private exponent")


# -- parameter generation ---------------------------------------------------

def _seeded(seed) -> random.Random:
    return default_rng() if seed is None else random.Random(seed)


def _random_prime(bits: int, rng: random.Random) -> int:
    for _ in range(MAX_ATTEMPTS):
        cand = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if is_prime(cand):
            return cand
    raise ParameterError(f"no {bits}-bit prime found")


def gen_schnorr(bits_p: int = 1024, bits_q: int = 160, seed=None,
                digest: str = DEFAULT_DIGEST) -> SchnorrGroup:
    """Generate ``(p, q, g)``; the result is a pure function of ``seed``."""
    if bits_q < 32:
        raise ParameterError("bits_q must be at least 32")
    if bits_q >= bits_p:
        raise ParameterError("bits_q must be smaller than bits_p")
    rng = _seeded(seed)
    q = _random_prime(bits_q, rng)
    kbits = bits_p - bits_q
    for _ in range(MAX_ATTEMPTS):
        k = rng.getrandbits(kbits) | (1 << (kbits - 1))
        k -= k % 2
        p = k * q + 1
        if p.bit_length() == bits_p and is_prime(p):
            break
    else:
        raise ParameterError("no suitable p found")
    cof = (p - 1) // q
    while True:
        g = powmod(rng.randrange(2, p - 1), cof, p)
        if g != 1:
            return SchnorrGroup(p, q, g, digest)


def _safe_prime(bits: int, rng: random.Random, max_attempts: int) -> int:
    for _ in range(max_attempts):
        half = rng.getrandbits(bits - 1) | (3 << (bits - 3)) | 1
        # a safe prime 2h+1 > 7 needs h = 2 mod 3
        if half % 3 != 2 or not gmpy2.is_prime(half, 1):
            continue
        cand = 2 * half + 1
        if is_prime(cand) and is_prime(half):
            return cand
    raise ParameterError(f"no {bits}-bit safe prime within {max_attempts} attempts")


def gen_rsa(bits: int = 1024, seed=None, e: int = 65537,
            digest: str = DEFAULT_DIGEST, max_attempts: int = MAX_ATTEMPTS) -> CaKey:
    """Generate an authority key over a modulus of two ``bits/2`` safe primes."""
    if bits < 64 or bits % 2:
        raise ParameterError("RSA modulus size must be an even number >= 64")
    rng = _seeded(seed)
    while True:
        p1 = _safe_prime(bits // 2, rng, max_attempts)
        p2 = _safe_prime(bits // 2, rng, max_attempts)
        N = p1 * p2
        phi = (p1 - 1) * (p2 - 1)
        if p1 != p2 and N.bit_length() == bits and math.gcd(e, phi) == 1:
            break
    while True:
        g = rng.randrange(2, N - 1)
        if math.gcd(g, N) == 1:
            break
    return CaKey(RsaGroup(N, e, g, digest), invert(e, phi))


@lru_cache(maxsize=None)
def default_schnorr(bits_p: int = 1024, bits_q: int = 160) -> SchnorrGroup:
    return gen_schnorr(bits_p, bits_q, seed=DEFAULT_SEED)


@lru_cache(maxsize=None)
def default_ca(bits: int = 1024) -> CaKey:
    """Deterministic test/benchmark authority.  Not for real deployments."""
    return gen_rsa(bits, seed=DEFAULT_SEED)


# -- hashing into groups ----------------------------------------------------

def hash_to_schnorr(group: SchnorrGroup, data: bytes) -> int:
    """Map bytes to a non-identity subgroup element via cofactor exponentiation."""
    nbytes = group.element_size + 8
    span = group.p - 3
    counter = 0
    while True:
        u = _expand(b"H2S", data, counter, nbytes) % span + 2
        t = powmod(u, group.cofactor, group.p)
        if t != 1:
            return t
        counter += 1


def hash_to_rsa(rsa: RsaGroup, data: bytes) -> int:
    nbytes = rsa.element_size + 8
    counter = 0
    while True:
        u = _expand(b"H2R", data, counter, nbytes) % rsa.N
        if u > 1 and math.gcd(u, rsa.N) == 1:
            return u
        counter += 1


def ca_authorize(ca: CaKey, element: bytes) -> int:
    """Authorization ``sigma = H(element)^d mod N``."""
    return powmod(hash_to_rsa(ca.rsa, element), ca.d, ca.rsa.N)


def verify_authorization(rsa: RsaGroup, sigma: int, element: bytes) -> bool:
    return 0 < sigma < rsa.N and powmod(sigma, rsa.e, rsa.N) == hash_to_rsa(rsa, element)


# -- parameter files --------------------------------------------------------

_MAGIC = b"GPPR"
_VERSION = 1
_KIND_SCHNORR, _KIND_RSA, _KIND_CA = 1, 2, 3


def dumps_params(obj) -> bytes:
    """Serialize a SchnorrGroup, RsaGroup or CaKey to the binary parameter format."""
    if isinstance(obj, SchnorrGroup):
        kind, bits1, bits2, digest = _KIND_SCHNORR, obj.p.bit_length(), obj.q.bit_length(), obj.digest
        w1, w2 = _width(bits1), _width(bits2)
        body = obj.p.to_bytes(w1, "big") + obj.q.to_bytes(w2, "big") + obj.g.to_bytes(w1, "big")
    elif isinstance(obj, (RsaGroup, CaKey)):
        rsa = obj.rsa if isinstance(obj, CaKey) else obj
        kind = _KIND_CA if isinstance(obj, CaKey) else _KIND_RSA
        bits1, bits2, digest = rsa.N.bit_length(), rsa.e.bit_length(), rsa.digest
        w1, w2 = _width(bits1), _width(bits2)
        body = rsa.N.to_bytes(w1, "big") + rsa.e.to_bytes(w2, "big") + rsa.g.to_bytes(w1, "big")
        if isinstance(obj, CaKey):
            body += obj.d.to_bytes(w1, "big")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")
    name = digest.encode("ascii")
    header = _MAGIC + struct.pack(">BBHHB", _VERSION, kind, bits1, bits2, len(name)) + name
    return header + body


def loads_params(data: bytes):
    if data[:4] != _MAGIC:
        raise ParameterError("not a parameter file")
    try:
        version, kind, bits1, bits2, nlen = struct.unpack_from(">BBHHB", data, 4)
    except struct.error:
        raise ParameterError("truncated parameter header") from None
    if version != _VERSION:
        raise ParameterError(f"unsupported parameter file version {version}")
    off = 4 + struct.calcsize(">BBHHB")
    digest = data[off:off + nlen].decode("ascii")
    off += nlen
    w1, w2 = _width(bits1), _width(bits2)
    widths = {_KIND_SCHNORR: (w1, w2, w1), _KIND_RSA: (w1, w2, w1), _KIND_CA: (w1, w2, w1, w1)}
    if kind not in widths:
        raise ParameterError(f"unknown group kind {kind}")
    values = []
    for w in widths[kind]:
        chunk = data[off:off + w]
        if len(chunk) != w:
            raise ParameterError("truncated parameter body")
        values.append(int.from_bytes(chunk, "big"))
        off += w
    if kind == _KIND_SCHNORR:
        return SchnorrGroup(*values, digest=digest)
    rsa = RsaGroup(*values[:3], digest=digest)
    return rsa if kind == _KIND_RSA else CaKey(rsa, values[3])


def write_params(path, obj) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_params(obj))


def read_params(path):
    with open(path, "rb") as fh:
        return loads_params(fh.read())
