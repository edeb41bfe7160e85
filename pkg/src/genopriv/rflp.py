"""Restriction digestion, marker probing and SNP-based fragment selection.

Digestion cuts the genome at every leftmost, non-overlapping occurrence of
each enzyme's recognition pattern; cut positions from all enzymes are
merged before fragments are extracted, so fragments always partition the
genome.  ``-`` never matches an enzyme or a probe.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import MarkerAmbiguityError
from .genome import BASES, Genome, Population

#: length recorded for a marker that selected no fragment
ABSENT_LENGTH = 2**20 - 1
RECORD_SIZE = 10
MAX_SNP_WINDOW = 27


@dataclass(frozen=True)
class Enzyme:
    name: str
    pattern: str
    offset: int

    def __post_init__(self):
        if not self.pattern or set(self.pattern) - set(BASES):
            raise ValueError(f"{self.name}: pattern must be a non-empty string over ACGT")
        if not 1 <= self.offset <= len(self.pattern):
            raise ValueError(f"{self.name}: cut offset must lie within the pattern")


PSTI = Enzyme("PstI", "CTGCAG", 5)


@dataclass(frozen=True)
class Marker:
    id: int
    probe: str

    def __post_init__(self):
        if not 0 <= self.id < 2**16:
            raise ValueError("marker ids are 16-bit")
        if not self.probe or set(self.probe) - set(BASES):
            raise ValueError("probe must be a non-empty string over ACGT")


class Fragment(NamedTuple):
    start: int  # 0-based offset into the genome
    seq: str


@dataclass(frozen=True)
class FragmentRecord:
    length: int
    marker_id: int

    def encode(self) -> bytes:
        """Set-element encoding: u64 length then u16 marker id."""
        return self.length.to_bytes(8, "big") + self.marker_id.to_bytes(2, "big")

    @property
    def absent(self) -> bool:
        return self.length == ABSENT_LENGTH


@dataclass(frozen=True)
class FragmentSet:
    records: tuple[FragmentRecord, ...]

    def __len__(self) -> int:
        return len(self.records)

    def elements(self) -> list[bytes]:
        return [r.encode() for r in self.records]

    def lengths(self) -> list[int]:
        return [r.length for r in self.records]

    def matches(self, other: "FragmentSet") -> int:
        """Plaintext count of equal records (the quantity PSI-CA and PET compute)."""
        return len(set(self.records) & set(other.records))


# -- digestion ------------------------------------------------------------------

def find_sites(seq: str, enzyme: Enzyme) -> list[int]:
    """Start offsets of leftmost non-overlapping pattern occurrences."""
    out = []
    pat, step = enzyme.pattern, len(enzyme.pattern)
    i = seq.find(pat)
    while i != -1:
        out.append(i)
        i = seq.find(pat, i + step)
    return out


def cut_positions(seq: str, enzymes: Sequence[Enzyme]) -> list[int]:
    cuts = set()
    for enz in enzymes:
        cuts.update(i + enz.offset for i in find_sites(seq, enz))
    cuts.discard(0)
    cuts.discard(len(seq))
    return sorted(cuts)


def digest(genome: Genome | str, enzymes: Sequence[Enzyme]) -> list[Fragment]:
    if not enzymes:
        raise ValueError("at least one enzyme is required")
    seq = genome.seq if isinstance(genome, Genome) else genome
    bounds = [0, *cut_positions(seq, enzymes), len(seq)]
    return [Fragment(a, seq[a:b]) for a, b in zip(bounds, bounds[1:])]


def probe_markers(fragments: Sequence[Fragment], markers: Sequence[Marker]) -> FragmentSet:
    """One record per marker, in marker order; absent markers get ``ABSENT_LENGTH``.

    Raises :class:`MarkerAmbiguityError` when a probe lies in two fragments.
    """
    if not markers:
        raise ValueError("at least one marker is required")
    text = "".join(f.seq for f in fragments)
    starts = [f.start for f in fragments]
    records = []
    for mk in markers:
        hits = set()
        i = text.find(mk.probe)
        while i != -1:
            k = bisect.bisect_right(starts, i) - 1
            if i + len(mk.probe) <= starts[k] + len(fragments[k].seq):
                hits.add(k)
            i = text.find(mk.probe, i + 1)
        if len(hits) > 1:
            raise MarkerAmbiguityError(f"marker {mk.id} selects {len(hits)} fragments")
        length = len(fragments[hits.pop()].seq) if hits else ABSENT_LENGTH
        records.append(FragmentRecord(length, mk.id))
    return FragmentSet(tuple(records))


def fragment_set(genome: Genome, enzymes: Sequence[Enzyme], markers: Sequence[Marker]) -> FragmentSet:
    return probe_markers(digest(genome, enzymes), markers)


def snp_fragment_select(genome: Genome, panel: Sequence[tuple[int, int]]) -> FragmentSet:
    """One record per ``(position, window)`` entry encoding the window's content.

    The window starting at the 1-based position is packed base-5 into the
    record's length field, so equal records mean equal windows.
    """
    seq = genome.seq
    records = []
    for idx, (pos, window) in enumerate(panel):
        if not 1 <= window <= MAX_SNP_WINDOW:
            raise ValueError(f"window must be between 1 and {MAX_SNP_WINDOW}")
        if pos < 1 or pos - 1 + window > len(seq):
            raise IndexError(f"panel entry {idx} lies outside the genome")
        code = 0
        for ch in seq[pos - 1:pos - 1 + window]:
            code = code * 5 + "ACGT-".index(ch)
        records.append(FragmentRecord(code, idx))
    return FragmentSet(tuple(records))


def snp_panel(population: Population, size: int = 52, window: int = 1) -> list[tuple[int, int]]:
    """Panel over the first ``size`` population variant sites (by position)."""
    sites = sorted({p for p, _, _ in population.variants})
    if len(sites) < size:
        raise ValueError(f"population has only {len(sites)} variant sites")
    return [(p, window) for p in sites[:size]]


# -- marker and population tooling -------------------------------------------------

def select_markers(reference: Genome, enzymes: Sequence[Enzyme], count: int, rng=None,
                   probe_length: int = 20, min_fragment: int = 300,
                   max_fragment: int = 50_000) -> list[Marker]:
    """Pick probes that occur exactly once in the reference, one per fragment.

    Chosen fragments are never adjacent, so a polymorphic cut site never
    joins two marker fragments.
    """
    rng = np.random.default_rng(rng)
    seq = reference.seq
    frags = digest(reference, enzymes)
    candidates = [k for k, f in enumerate(frags) if min_fragment <= len(f.seq) <= max_fragment]
    rng.shuffle(candidates)
    used: set[int] = set()
    markers: list[Marker] = []
    margin = 2 * max(len(e.pattern) for e in enzymes)
    for k in candidates:
        if len(markers) == count:
            break
        if used & {k - 1, k, k + 1}:
            continue
        frag = frags[k]
        for _ in range(8):
            off = int(rng.integers(margin, len(frag.seq) - margin - probe_length))
            probe = frag.seq[off:off + probe_length]
            if "-" not in probe and seq.count(probe) == 1:
                markers.append(Marker(len(markers), probe))
                used.add(k)
                break
    if len(markers) < count:
        raise ValueError(f"reference supports only {len(markers)} markers")
    return markers


def make_population(reference: Genome, enzymes: Sequence[Enzyme], markers: Sequence[Marker],
                    rng=None, frequency: float = 0.5) -> Population:
    """Common site-destroying variants on the cut sites flanking each marker fragment.

    These are the restriction fragment length polymorphisms: carriers of an
    alternate allele lose the site and the marker fragment merges with its
    neighbour.
    """
    rng = np.random.default_rng(rng)
    seq = reference.seq
    frags = digest(reference, enzymes)
    starts = [f.start for f in frags]
    site_at: dict[int, tuple[int, Enzyme]] = {}
    for enz in enzymes:
        for i in find_sites(seq, enz):
            site_at.setdefault(i + enz.offset, (i, enz))
    variants: dict[int, tuple[int, str, float]] = {}
    for mk in markers:
        at = seq.find(mk.probe)
        if at < 0:
            continue
        k = bisect.bisect_right(starts, at) - 1
        for cut in (frags[k].start, frags[k].start + len(frags[k].seq)):
            if cut not in site_at:
                continue
            occ, enz = site_at[cut]
            j = int(rng.integers(0, len(enz.pattern)))
            ref_base = enz.pattern[j]
            alt = [b for b in BASES if b != ref_base][int(rng.integers(0, 3))]
            pos = occ + j + 1
            variants[pos] = (pos, alt, frequency)
    return Population(tuple(variants[p] for p in sorted(variants)))


# -- catalog files ------------------------------------------------------------------

def parse_catalog(text: str) -> tuple[list[Enzyme], list[Marker]]:
    """Lines ``name<TAB>pattern<TAB>offset`` or ``id<TAB>probe``; ``#`` comments."""
    enzymes, markers = [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) == 3:
            enzymes.append(Enzyme(fields[0], fields[1], int(fields[2])))
        elif len(fields) == 2:
            markers.append(Marker(int(fields[0]), fields[1]))
        else:
            raise ValueError(f"catalog line {lineno}: expected 2 or 3 tab-separated fields")
    return enzymes, markers


def format_catalog(enzymes: Iterable[Enzyme] = (), markers: Iterable[Marker] = ()) -> str:
    lines = [f"{e.name}\t{e.pattern}\t{e.offset}" for e in enzymes]
    lines += [f"{m.id}\t{m.probe}" for m in markers]
    return "\n".join(lines) + "\n"


def load_catalog(path) -> tuple[list[Enzyme], list[Marker]]:
    with open(path) as fh:
        return parse_catalog(fh.read())


def write_catalog(path, enzymes: Iterable[Enzyme] = (), markers: Iterable[Marker] = ()) -> None:
    with open(path, "w") as fh:
        fh.write(format_catalog(enzymes, markers))


def default_enzymes() -> list[Enzyme]:
    return parse_catalog(resources.files(__package__).joinpath("data/enzymes.tsv").read_text())[0]
