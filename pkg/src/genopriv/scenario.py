"""Deterministic synthetic world shared by the benchmarks, the CLI and the tests."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .apps import PaternityConfig
from .genome import DESK_GENOME_LENGTH, Genome, Population, synth_reference
from .rflp import Enzyme, Marker, default_enzymes, make_population, select_markers

REFERENCE_SEED = 7
MARKER_SEED = 11
POPULATION_SEED = 13


@dataclass(frozen=True)
class Scenario:
    reference: Genome
    enzymes: tuple[Enzyme, ...]
    markers: tuple[Marker, ...]
    population: Population

    def config(self, mode: str = "rflp-psica", **kw) -> PaternityConfig:
        return PaternityConfig(mode=mode, enzymes=self.enzymes, markers=self.markers, **kw)


@lru_cache(maxsize=8)
def default_scenario(markers: int = 25, n: int = DESK_GENOME_LENGTH) -> Scenario:
    """Reference genome, ``markers`` probes and the RFLP population on top of them."""
    reference = synth_reference(n, REFERENCE_SEED)
    enzymes = tuple(default_enzymes())
    mk = tuple(select_markers(reference, enzymes, markers, MARKER_SEED))
    population = make_population(reference, enzymes, mk, POPULATION_SEED)
    return Scenario(reference, enzymes, mk, population)
