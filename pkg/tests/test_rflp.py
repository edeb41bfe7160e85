import pytest
from hypothesis import given, settings, strategies as st

from genopriv.errors import MarkerAmbiguityError
from genopriv.genome import Genome, synth_genome
from genopriv.rflp import (ABSENT_LENGTH, PSTI, Enzyme, FragmentRecord, Marker, digest,
                           fragment_set, load_catalog, make_population, parse_catalog,
                           probe_markers, select_markers, snp_fragment_select, snp_panel,
                           write_catalog, default_enzymes)


def seqs(frags):
    return [f.seq for f in frags]


def test_single_site():
    assert seqs(digest("AACTGCAGTT", [PSTI])) == ["AACTGCA", "GTT"]


def test_adjacent_sites():
    assert seqs(digest("CTGCAGCTGCAG", [PSTI])) == ["CTGCA", "GCTGCA", "G"]


def test_overlapping_pattern_is_leftmost_nonoverlapping():
    enz = Enzyme("X", "AAA", 1)
    assert seqs(digest("AAAAA", [enz])) == ["A", "AAAA"]


def test_no_site_and_gap():
    assert seqs(digest("CTG-CAG", [PSTI])) == ["CTG-CAG"]


@settings(max_examples=50, deadline=None)
@given(st.text("ACGT", max_size=300), st.sampled_from(["GAATTC", "GG", "ACGT", "TTTT"]))
def test_partition_property(seq, pattern):
    frags = digest(seq, [PSTI, Enzyme("E", pattern, 1)])
    assert "".join(seqs(frags)) == seq
    assert all(frags[i].start + len(frags[i].seq) == frags[i + 1].start for i in range(len(frags) - 1))


def test_enzyme_validation():
    with pytest.raises(ValueError):
        Enzyme("bad", "CTGNAG", 2)
    with pytest.raises(ValueError):
        Enzyme("bad", "CTG", 4)
    with pytest.raises(ValueError):
        Marker(70000, "ACGT")


def test_probe_records():
    seq = "AAAACTGCAGGGGGGGCTGCAGTTTT"
    fs = probe_markers(digest(seq, [PSTI]), [Marker(0, "GGGGG"), Marker(1, "CCCCCC")])
    assert fs.records == (FragmentRecord(len("GGGGGGGCTGCA"), 0), FragmentRecord(ABSENT_LENGTH, 1))
    assert fs.records[1].absent
    assert len(fs.elements()[0]) == 10


def test_probe_straddling_a_cut_does_not_select():
    fs = probe_markers(digest("AAACTGCAGTT", [PSTI]), [Marker(0, "CAGT")])
    assert fs.records[0].absent


def test_ambiguous_marker_raises():
    with pytest.raises(MarkerAmbiguityError):
        probe_markers(digest("TTTACTGCAGTTTA", [PSTI]), [Marker(0, "TTTA")])


def test_scenario_markers_are_unique_and_polymorphic(scenario):
    fs = fragment_set(scenario.reference, scenario.enzymes, scenario.markers)
    assert len(fs) == 25 and not any(r.absent for r in fs.records)
    assert len({m.probe for m in scenario.markers}) == 25
    assert len(scenario.population.variants) >= 40
    lengths = set()
    for seed in range(6):
        g = synth_genome(scenario.reference, 0.005, seed, scenario.population)
        lengths.add(fragment_set(g, scenario.enzymes, scenario.markers).records[0].length)
    assert len(lengths) > 1


def test_select_markers_fails_when_reference_too_small():
    with pytest.raises(ValueError):
        select_markers(Genome("ACGT" * 100), [PSTI], 5, 0)


def test_snp_selection(scenario):
    panel = snp_panel(scenario.population, size=20, window=3)
    a = snp_fragment_select(scenario.reference, panel)
    assert len(a) == 20 and a.matches(a) == 20
    with pytest.raises(ValueError):
        snp_fragment_select(scenario.reference, [(1, 40)])
    with pytest.raises(IndexError):
        snp_fragment_select(scenario.reference, [(len(scenario.reference), 2)])


def test_catalog_roundtrip(tmp_path, scenario):
    write_catalog(tmp_path / "c.tsv", scenario.enzymes, scenario.markers)
    enz, mk = load_catalog(tmp_path / "c.tsv")
    assert tuple(enz) == scenario.enzymes and tuple(mk) == scenario.markers
    with pytest.raises(ValueError):
        parse_catalog("a\tb\tc\td\n")
    assert default_enzymes() == [PSTI]


def test_population_is_deterministic(scenario):
    again = make_population(scenario.reference, scenario.enzymes, scenario.markers, 13)
    assert again == scenario.population
