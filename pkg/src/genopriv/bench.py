"""Benchmark suites: wall time and exact bytes per role, plus full-genome extrapolation.

Every suite returns a list of flat records with fixed field names.  They
print as a text table or as JSON lines.
"""

from __future__ import annotations

import json
import os
import statistics
import tempfile
import time
import tracemalloc
from dataclasses import asdict, dataclass

import numpy as np

from . import apps
from .genome import REAL_GENOME_LENGTH, synth_family, synth_genome
from .groups import default_ca, default_schnorr
from .psi import iter_psi_tags, write_tag_file
from .scenario import default_scenario
from .wire import Phase

GIB = 2**30
SUITES = ("rflp", "strawman", "pm", "compat", "tags")

# Figures measured for the original implementation on an i5-560M (2.66 GHz):
# (suite, row, party) -> (online ms, bytes).
REFERENCE_FIGURES = {
    ("rflp", "25 markers", "client"): (3.4, 3 * 1024),
    ("rflp", "25 markers", "server"): (3.4, 3.5 * 1024),
    ("rflp", "50 markers", "client"): (6.7, 6 * 1024),
    ("rflp", "50 markers", "server"): (6.7, 7 * 1024),
    ("strawman", "full genome", "client"): (4.5 * 86400e3, 358 * GIB),
    ("strawman", "full genome", "server"): (4.5 * 86400e3, 414 * GIB),
    ("strawman", "1% of genome", "client"): (67 * 60e3, 3.57 * GIB),
    ("strawman", "1% of genome", "server"): (67 * 60e3, 4.14 * GIB),
    ("pm", "hla-B", "client"): (0.82, 256),
    ("pm", "tpmt", "client"): (2.46, 768),
    ("compat", "Roberts syndrome", "client"): (7.26, None),
    ("compat", "Beta-Thalassemia", "client"): (70.0, None),
}


@dataclass
class BenchRecord:
    suite: str
    row: str
    party: str
    offline_ms: float | None
    online_ms: float | None
    payload_bytes: int | None
    frame_bytes: int | None
    elements: int | None = None
    extrapolated: bool = False
    reference_online_ms: float | None = None
    reference_bytes: float | None = None

    def __post_init__(self):
        ref = REFERENCE_FIGURES.get((self.suite, self.row, self.party))
        if ref:
            self.reference_online_ms, self.reference_bytes = ref


def _median_report(runs: list[apps.TestReport]) -> tuple[dict, apps.TestReport]:
    keys = runs[0].timings.keys()
    return {k: statistics.median(r.timings.get(k, 0.0) for r in runs) for k in keys}, runs[-1]


def _party_rows(suite, row, t, report, client_offline_keys=("client_offline",),
                server_offline_keys=("server_offline",), elements=None):
    ms = lambda keys: 1e3 * sum(t.get(k, 0.0) for k in keys)  # noqa: E731
    client_bytes = report.payload("c2s", Phase.REQUEST)
    server_bytes = report.payload("s2c", Phase.RESPONSE) + report.payload("s2c", Phase.OFFER)
    return [
        BenchRecord(suite, row, "client", ms(client_offline_keys), ms(("client_online",)),
                    client_bytes, report.frames("c2s"), elements),
        BenchRecord(suite, row, "server", ms(server_offline_keys), ms(("server_online",)),
                    server_bytes, report.frames("s2c"), elements),
    ]


def bench_rflp(markers=(25, 50), repeat: int = 5, seed: int = 0) -> list[BenchRecord]:
    group = default_schnorr()
    rows = []
    for count in markers:
        sc = default_scenario(count)
        fam = synth_family(sc.reference, seed, population=sc.population)
        config = sc.config("rflp-psica")
        server = apps.PaternityServer(config, fam.parent_a, group)
        runs = [apps.paternity_test(config, fam.child, server, group) for _ in range(repeat)]
        t, last = _median_report(runs)
        rows += _party_rows("rflp", f"{count} markers", t, last, elements=count)
    return rows


def bench_strawman(n: int = 1_000_000, fraction: float = 0.01, seed: int = 0) -> list[BenchRecord]:
    """Desk-scale strawman PSI-CA, extrapolated per element to the full genome and to 1% of it."""
    sc = default_scenario(25, n)
    fam = synth_family(sc.reference, seed, population=sc.population)
    config = sc.config("strawman-psica", sampling_fraction=fraction)
    report = apps.paternity_test(config, fam.child, fam.parent_a, default_schnorr())
    k = report.params["compared"]
    rows = _party_rows("strawman", f"desk n={n}", report.timings, report, elements=k)
    for label, target in (("full genome", REAL_GENOME_LENGTH), ("1% of genome", REAL_GENOME_LENGTH // 100)):
        for r in rows[:2]:
            f = target / k
            rows.append(BenchRecord("strawman", label, r.party, r.offline_ms * f, r.online_ms * f,
                                    round(r.payload_bytes * f), round(r.frame_bytes * f), target, True))
    return rows


def _diploid_patient(sc, fp, seed):
    rng = np.random.default_rng(seed)
    n = len(sc.reference)
    haps = [synth_genome(sc.reference, 0.005, rng) for _ in range(2)]
    haps[0] = apps.plant_variants(haps[0], [(s, p) for s, p in fp.pairs if p <= n])
    haps[1] = apps.plant_variants(haps[1], [(s, p - n) for s, p in fp.pairs if p > n])
    return apps.diploid_elements(haps, sc.reference)


PM_PANELS = {"hla-B": 1, "tpmt": 3}
COMPAT_PANELS = {"Roberts syndrome": 26, "Beta-Thalassemia": 250}


def bench_pm(repeat: int = 5, seed: int = 0) -> list[BenchRecord]:
    sc = default_scenario()
    ca = default_ca()
    rows = []
    for i, (name, mutations) in enumerate(PM_PANELS.items()):
        fp = apps.synthetic_panel(sc.reference, mutations, seed + i, kind="drug", name=name)
        patient = apps.PatientServer(ca.rsa, _diploid_patient(sc, fp, seed + i))
        sigmas = apps.authorize_fingerprint(ca, fp)
        runs = [apps.pm_test(ca.rsa, fp, patient, sigmas) for _ in range(repeat)]
        t, last = _median_report(runs)
        rows += _party_rows("pm", name, t, last, client_offline_keys=(), elements=len(fp))
        rows.append(_extrapolated_offline("pm", name, patient, sc.reference))
    return rows


def bench_compat(repeat: int = 3, seed: int = 0) -> list[BenchRecord]:
    sc = default_scenario()
    group = default_schnorr()
    rows = []
    for i, (name, mutations) in enumerate(COMPAT_PANELS.items()):
        fp = apps.synthetic_panel(sc.reference, mutations, seed + 10 + i, name=name)
        server = apps.CompatServer(group, _diploid_patient(sc, fp, seed + i))
        runs = [apps.compat_test(fp, server, group=group) for _ in range(repeat)]
        t, last = _median_report(runs)
        rows += _party_rows("compat", name, t, last, elements=len(fp))
        rows.append(_extrapolated_offline("compat", name, server, sc.reference))
    return rows


def _extrapolated_offline(suite, name, role, reference) -> BenchRecord:
    """Server offline work and tag bytes scaled from the desk genome to a real one."""
    f = reference.scale
    count = len(role.tags)
    tag_bytes = sum(map(len, role.tags))
    return BenchRecord(suite, f"{name} (full genome)", "server", role.offline_seconds * 1e3 * f,
                       None, round(tag_bytes * f), None, round(count * f), True)


def bench_tags(n: int = 5_000, seed: int = 0, path=None) -> list[BenchRecord]:
    """Peak Python heap when tags stream to a file versus when they are collected."""
    group = default_schnorr()
    sc = default_scenario()
    g = synth_genome(sc.reference, 0.005, seed)
    positions = range(1, n + 1)
    rows = []
    for mode in ("streamed", "collected"):
        fd, tmp = tempfile.mkstemp(suffix=".tags") if path is None else (None, path)
        if fd is not None:
            os.close(fd)
        tracemalloc.start()
        t0 = time.perf_counter()
        tags = iter_psi_tags(group, g.elements(positions), group.random_scalar())
        if mode == "collected":
            tags = list(tags)
        write_tag_file(tmp, tags, group.tag_size)
        elapsed = time.perf_counter() - t0
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        size = os.path.getsize(tmp)
        if path is None:
            os.unlink(tmp)
        rows.append(BenchRecord("tags", f"{mode} (peak heap {peak} B)", "server", elapsed * 1e3,
                                None, size, None, n))
    return rows


def run_suite(name: str, **kw) -> list[BenchRecord]:
    fn = {"rflp": bench_rflp, "strawman": bench_strawman, "pm": bench_pm,
          "compat": bench_compat, "tags": bench_tags}.get(name)
    if fn is None:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    return fn(**kw)


def _fmt_ms(v):
    if v is None:
        return "-"
    if v >= 3_600_000:
        return f"{v / 3_600_000:.1f} h"
    if v >= 60_000:
        return f"{v / 60_000:.1f} min"
    return f"{v:.2f} ms"


def _fmt_bytes(v):
    if v is None:
        return "-"
    if v >= GIB:
        return f"{v / GIB:.2f} GiB"
    if v >= 2**20:
        return f"{v / 2**20:.1f} MiB"
    if v >= 10 * 1024:
        return f"{v / 1024:.1f} KiB"
    return f"{int(v)} B"


def format_table(rows: list[BenchRecord]) -> str:
    head = ("suite", "row", "party", "offline", "online", "payload", "framed", "ref online", "ref bytes")
    body = [(r.suite, r.row + (" *" if r.extrapolated else ""), r.party, _fmt_ms(r.offline_ms),
             _fmt_ms(r.online_ms), _fmt_bytes(r.payload_bytes), _fmt_bytes(r.frame_bytes),
             _fmt_ms(r.reference_online_ms), _fmt_bytes(r.reference_bytes)) for r in rows]
    widths = [max(len(str(x)) for x in col) for col in zip(head, *body)]
    line = lambda cells: "  ".join(str(c).ljust(w) for c, w in zip(cells, widths))  # noqa: E731
    out = [line(head), line("-" * w for w in widths), *map(line, body)]
    if any(r.extrapolated for r in rows):
        out.append("* linear extrapolation from the desk-scale run")
    return "\n".join(out)


def format_jsonl(rows: list[BenchRecord]) -> str:
    return "\n".join(json.dumps(asdict(r), sort_keys=True) for r in rows)
