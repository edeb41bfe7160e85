"""Digitized genomes, element encoding, reference diffs and synthetic data.

A genome is a string over ``ACGT-`` where ``-`` marks a deletion or a
sequencing failure.  Positions are 1-based throughout.  Only substitutions
and deletions are modelled; insertions cannot be expressed.

Generators take anything :func:`numpy.random.default_rng` accepts as ``rng``
(an int seed, a ``Generator`` or ``None``).
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .groups import SchnorrGroup, hash_to_schnorr

ALPHABET = "ACGT-"
BASES = "ACGT"
REAL_GENOME_LENGTH = 3_000_000_000
DESK_GENOME_LENGTH = 1_000_000
ELEMENT_SIZE = 9

_ALPHABET_SET = frozenset(ALPHABET)
_CODE = np.full(256, 255, dtype=np.uint8)
for _i, _c in enumerate(ALPHABET):
    _CODE[ord(_c)] = _i
_SYMBOLS = np.frombuffer(ALPHABET.encode("ascii"), dtype=np.uint8)


def _as_rng(rng) -> np.random.Generator:
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class Genome:
    """Immutable sequence plus the factor that scales it to a real genome."""

    seq: str = field(repr=False)
    scale: float = 0.0

    def __post_init__(self):
        if not _ALPHABET_SET.issuperset(self.seq):
            bad = sorted(set(self.seq) - _ALPHABET_SET)
            raise ValueError(f"symbols outside the alphabet: {bad[:5]}")
        if not self.scale:
            object.__setattr__(self, "scale", REAL_GENOME_LENGTH / max(len(self.seq), 1))

    def __len__(self) -> int:
        return len(self.seq)

    def __repr__(self) -> str:
        return f"Genome(n={len(self.seq)}, scale={self.scale:g})"

    def symbol(self, i: int) -> str:
        return self.seq[i - 1]

    def codes(self) -> np.ndarray:
        """Symbols as uint8 codes (index into ``ALPHABET``)."""
        return _CODE[np.frombuffer(self.seq.encode("ascii"), dtype=np.uint8)]

    @classmethod
    def from_codes(cls, codes: np.ndarray, scale: float = 0.0) -> "Genome":
        return cls(_SYMBOLS[codes].tobytes().decode("ascii"), scale)

    def elements(self, positions: Iterable[int] | None = None) -> Iterator[bytes]:
        """Encoded ``(symbol, position)`` elements, in position order."""
        if positions is None:
            positions = range(1, len(self.seq) + 1)
        for i in positions:
            yield encode_element(self.seq[i - 1], i)


# -- element encoding ---------------------------------------------------------

def encode_element(symbol: str, position: int) -> bytes:
    """Fixed 9-byte injective encoding: ASCII symbol then u64 position."""
    if len(symbol) != 1:
        raise ValueError("an element holds exactly one symbol; insertions are not supported")
    if symbol not in _ALPHABET_SET:
        raise ValueError(f"invalid symbol {symbol!r}")
    if position < 1:
        raise ValueError("positions are 1-based")
    return symbol.encode("ascii") + position.to_bytes(8, "big")


def decode_element(data: bytes) -> tuple[str, int]:
    if len(data) != ELEMENT_SIZE:
        raise ValueError("encoded element must be 9 bytes")
    symbol = chr(data[0])
    if symbol not in _ALPHABET_SET:
        raise ValueError(f"invalid symbol {symbol!r}")
    return symbol, int.from_bytes(data[1:], "big")


class GenomeHashStream:
    """Restartable lazy stream of ``H(b_i || i)`` over a genome."""

    def __init__(self, group: SchnorrGroup, genome: Genome, positions: Sequence[int] | None = None):
        self.group = group
        self.genome = genome
        self.positions = positions

    def __iter__(self) -> Iterator[int]:
        for element in self.genome.elements(self.positions):
            yield hash_to_schnorr(self.group, element)

    def __len__(self) -> int:
        return len(self.genome) if self.positions is None else len(self.positions)


def hash_genome(group: SchnorrGroup, genome: Genome, positions: Sequence[int] | None = None) -> GenomeHashStream:
    return GenomeHashStream(group, genome, positions)


# -- reference-based compression ----------------------------------------------

def reference_id(reference: Genome) -> str:
    return hashlib.sha256(reference.seq.encode("ascii")).hexdigest()[:16]


@dataclass(frozen=True)
class ReferenceDiff:
    reference_id: str
    length: int
    records: tuple[tuple[int, str], ...]

    def __post_init__(self):
        last = 0
        for pos, sym in self.records:
            if pos <= last or pos > self.length:
                raise ValueError("diff positions must be strictly increasing and in range")
            if sym not in _ALPHABET_SET:
                raise ValueError(f"invalid symbol {sym!r}")
            last = pos

    def __len__(self) -> int:
        return len(self.records)

    @property
    def fraction(self) -> float:
        return len(self.records) / self.length if self.length else 0.0

    def elements(self, offset: int = 0) -> list[bytes]:
        return [encode_element(sym, pos + offset) for pos, sym in self.records]


def diff_against_reference(genome: Genome, reference: Genome) -> ReferenceDiff:
    if len(genome) != len(reference):
        raise ValueError("genome and reference lengths differ")
    a, r = genome.codes(), reference.codes()
    idx = np.flatnonzero(a != r)
    syms = _SYMBOLS[a[idx]].tobytes().decode("ascii")
    return ReferenceDiff(reference_id(reference), len(reference),
                         tuple(zip((idx + 1).tolist(), syms)))


def expand_diff(diff: ReferenceDiff, reference: Genome) -> Genome:
    if diff.length != len(reference):
        raise ValueError("diff and reference lengths differ")
    if diff.reference_id != reference_id(reference):
        raise ValueError("diff was taken against a different reference")
    codes = reference.codes().copy()
    if diff.records:
        pos = np.fromiter((p for p, _ in diff.records), dtype=np.int64, count=len(diff))
        sym = np.frombuffer("".join(s for _, s in diff.records).encode("ascii"), dtype=np.uint8)
        codes[pos - 1] = _CODE[sym]
    return Genome.from_codes(codes, reference.scale)


# -- synthetic data -------------------------------------------------------------

@dataclass(frozen=True)
class Population:
    """Common variant sites ``(position, alternate symbol, frequency)``."""

    variants: tuple[tuple[int, str, float], ...] = ()


def synth_reference(n: int = DESK_GENOME_LENGTH, rng=None) -> Genome:
    rng = _as_rng(rng)
    return Genome.from_codes(rng.integers(0, 4, n, dtype=np.uint8))


def _substitute(codes: np.ndarray, idx: np.ndarray, rng: np.random.Generator) -> None:
    # a different base for ACGT sites, any base for '-'
    old = codes[idx]
    shift = rng.integers(1, 4, idx.size).astype(np.uint8)
    new = (old + shift) % 4
    gap = old == 4
    new[gap] = rng.integers(0, 4, int(gap.sum()))
    codes[idx] = new


def synth_genome(reference: Genome, divergence: float, rng=None,
                 population: Population | None = None, error_rate: float = 0.0) -> Genome:
    """Independent individual differing from ``reference`` at ``round(divergence*n)`` sites.

    Alleles at population variant sites are sampled first; private point
    substitutions make up the rest of the divergence budget.
    """
    if not 0.0 <= divergence <= 1.0:
        raise ValueError("divergence must lie in [0, 1]")
    rng = _as_rng(rng)
    codes = reference.codes().copy()
    n = codes.size
    taken = np.zeros(n, dtype=bool)
    if population is not None and population.variants:
        pos = np.array([p for p, _, _ in population.variants], dtype=np.int64) - 1
        alt = _CODE[np.frombuffer("".join(s for _, s, _ in population.variants).encode("ascii"), dtype=np.uint8)]
        freq = np.array([f for _, _, f in population.variants])
        carry = rng.random(pos.size) < freq
        codes[pos[carry]] = alt[carry]
        taken[pos] = True
    budget = round(divergence * n) - int(np.count_nonzero(codes != reference.codes()))
    if budget > 0:
        free = np.flatnonzero(~taken)
        idx = rng.choice(free, size=min(budget, free.size), replace=False)
        _substitute(codes, idx, rng)
    genome = Genome.from_codes(codes, reference.scale)
    return inject_errors(genome, error_rate, rng) if error_rate else genome


def inject_errors(genome: Genome, rate: float, rng=None, deletion_fraction: float = 0.0) -> Genome:
    """Uniformly distributed point errors; a share of them become ``-``."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("error rate must lie in [0, 1]")
    rng = _as_rng(rng)
    codes = genome.codes().copy()
    count = rng.binomial(codes.size, rate)
    if count:
        idx = rng.choice(codes.size, size=count, replace=False)
        _substitute(codes, idx, rng)
        gaps = idx[rng.random(count) < deletion_fraction]
        codes[gaps] = 4
    return Genome.from_codes(codes, genome.scale)


def synth_child(parent_a: Genome, parent_b: Genome, mutation_rate: float, rng=None,
                block_length: int = 10_000) -> Genome:
    """Contiguous inheritance blocks from either parent, then point mutations."""
    if len(parent_a) != len(parent_b):
        raise ValueError("parents must have equal length")
    if block_length < 1:
        raise ValueError("block_length must be positive")
    rng = _as_rng(rng)
    a, b = parent_a.codes(), parent_b.codes()
    n = a.size
    coins = rng.integers(0, 2, math.ceil(n / block_length)).astype(bool)
    mask = np.repeat(coins, block_length)[:n]
    codes = np.where(mask, b, a)
    count = rng.binomial(n, mutation_rate) if mutation_rate else 0
    if count:
        _substitute(codes, rng.choice(n, size=count, replace=False), rng)
    return Genome.from_codes(codes, parent_a.scale)


INHERITANCE_MODELS = ("uniparental", "blocks")


@dataclass(frozen=True)
class SyntheticFamily:
    parent_a: Genome
    parent_b: Genome
    child: Genome
    mutation_rate: float
    inheritance: str
    block_length: int


def synth_family(reference: Genome, rng=None, divergence: float = 0.005,
                 mutation_rate: float = 1e-4, inheritance: str = "uniparental",
                 block_length: int = 10_000, population: Population | None = None) -> SyntheticFamily:
    """Two unrelated parents and a child; ``parent_a`` is the tested parent.

    ``uniparental`` transmits the whole sequence from ``parent_a`` (a
    single-copy, Y-chromosome style locus set); ``blocks`` mixes both parents
    block by block.
    """
    if inheritance not in INHERITANCE_MODELS:
        raise ValueError(f"inheritance must be one of {INHERITANCE_MODELS}")
    rng = _as_rng(rng)
    pa = synth_genome(reference, divergence, rng, population)
    pb = synth_genome(reference, divergence, rng, population)
    other = pa if inheritance == "uniparental" else pb
    child = synth_child(pa, other, mutation_rate, rng, block_length)
    return SyntheticFamily(pa, pb, child, mutation_rate, inheritance, block_length)


def identity(a: Genome, b: Genome) -> float:
    """Fraction of positions where the two genomes carry the same symbol."""
    if len(a) != len(b):
        raise ValueError("genome lengths differ")
    return float(np.mean(a.codes() == b.codes()))


# -- files ------------------------------------------------------------------------

_GENOME_HEAD = struct.Struct(">4sBQd")
_GENOME_MAGIC = b"GPGN"
_DIFF_MAGIC = b"GPDF"
_SHIFTS = np.array([2, 1, 0], dtype=np.uint8)


def dumps_genome(genome: Genome) -> bytes:
    codes = genome.codes()
    bits = ((codes[:, None] >> _SHIFTS) & 1).astype(np.uint8)
    return _GENOME_HEAD.pack(_GENOME_MAGIC, 1, len(genome), genome.scale) + np.packbits(bits.ravel()).tobytes()


def loads_genome(data: bytes) -> Genome:
    if len(data) < _GENOME_HEAD.size:
        raise ValueError("not a genome file")
    magic, version, n, scale = _GENOME_HEAD.unpack_from(data)
    if magic != _GENOME_MAGIC or version != 1:
        raise ValueError("not a genome file")
    packed = np.frombuffer(data, dtype=np.uint8, offset=_GENOME_HEAD.size)
    bits = np.unpackbits(packed)[: 3 * n]
    if bits.size != 3 * n:
        raise ValueError("truncated genome file")
    codes = (bits.reshape(n, 3) << _SHIFTS).sum(axis=1).astype(np.uint8)
    if codes.size and codes.max() > 4:
        raise ValueError("corrupt symbol code in genome file")
    return Genome.from_codes(codes, scale)


def write_genome(path, genome: Genome) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_genome(genome))


def read_genome(path) -> Genome:
    with open(path, "rb") as fh:
        return loads_genome(fh.read())


def dumps_diff(diff: ReferenceDiff) -> bytes:
    rid = diff.reference_id.encode("ascii")
    out = [_DIFF_MAGIC, struct.pack(">BQB", 1, diff.length, len(rid)), rid, struct.pack(">Q", len(diff))]
    out.extend(struct.pack(">Qc", pos, sym.encode("ascii")) for pos, sym in diff.records)
    return b"".join(out)


def loads_diff(data: bytes) -> ReferenceDiff:
    if data[:4] != _DIFF_MAGIC:
        raise ValueError("not a reference-diff file")
    version, length, rlen = struct.unpack_from(">BQB", data, 4)
    if version != 1:
        raise ValueError(f"unsupported diff version {version}")
    off = 4 + 10
    rid = data[off:off + rlen].decode("ascii")
    off += rlen
    (count,) = struct.unpack_from(">Q", data, off)
    off += 8
    records = []
    for pos, sym in struct.iter_unpack(">Qc", data[off:off + 9 * count]):
        records.append((pos, sym.decode("ascii")))
    if len(records) != count:
        raise ValueError("truncated reference-diff file")
    return ReferenceDiff(rid, length, tuple(records))


def write_diff(path, diff: ReferenceDiff) -> None:
    with open(path, "wb") as fh:
        fh.write(dumps_diff(diff))


def read_diff(path) -> ReferenceDiff:
    with open(path, "rb") as fh:
        return loads_diff(fh.read())
