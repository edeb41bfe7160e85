"""Command-line interface.

Exit codes: 0 success, 2 protocol error, 3 validation error, 4 I/O error.
Relative input paths that do not exist in the working directory are looked
up under ``$GENOPRIV_DATA``.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from pathlib import Path

import click

from . import apps, bench, genome, groups, net, rflp
from .errors import ParameterError, ProtocolError, ValidationError
from .scenario import default_scenario

EXIT_PROTOCOL, EXIT_VALIDATION, EXIT_IO = 2, 3, 4


def data_path(p) -> Path:
    path = Path(p)
    root = os.environ.get("GENOPRIV_DATA")
    if root and not path.is_absolute() and not path.exists():
        return Path(root) / path
    return path


class InPath(click.Path):
    def convert(self, value, param, ctx):
        return super().convert(str(data_path(value)), param, ctx)


IN = InPath(exists=True, dir_okay=False)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log protocol activity to stderr.")
def cli(verbose):
    """Privacy-preserving genetic tests over private set operations."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)


# -- keys -------------------------------------------------------------------------

@cli.command()
@click.option("--kind", type=click.Choice(["schnorr", "rsa", "ca"]), default="schnorr", show_default=True)
@click.option("--bits", type=int, default=1024, show_default=True, help="Modulus size.")
@click.option("--qbits", type=int, default=160, show_default=True, help="Subgroup order size (schnorr).")
@click.option("--seed", type=int, default=None, help="Deterministic generation.")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
@click.option("--public-out", type=click.Path(dir_okay=False), help="Also write the public part of a CA key.")
def keygen(kind, bits, qbits, seed, out, public_out):
    """Generate group parameters or an authority key."""
    if kind == "schnorr":
        obj = groups.gen_schnorr(bits, qbits, seed)
    else:
        obj = groups.gen_rsa(bits, seed)
        if kind == "rsa":
            obj = obj.rsa
    groups.write_params(out, obj)
    if public_out and isinstance(obj, groups.CaKey):
        groups.write_params(public_out, obj.rsa)
    click.echo(f"wrote {kind} parameters to {out}")


@cli.group()
def ca():
    """Certification authority operations."""


@ca.command("authorize")
@click.option("--key", "key_file", type=IN, required=True, help="Authority key file.")
@click.option("--fingerprint", type=IN, required=True)
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def ca_authorize(key_file, fingerprint, out):
    """Sign every fingerprint element; writes an authorization bundle."""
    key = groups.read_params(key_file)
    if not isinstance(key, groups.CaKey):
        raise click.UsageError("the key file holds no private authority key")
    fp = apps.parse_fingerprint(Path(fingerprint).read_text(), kind="drug")
    Path(out).write_bytes(apps.dumps_authorizations(key.rsa, apps.authorize_fingerprint(key, fp)))
    click.echo(f"authorized {len(fp)} elements")


# -- genomes ----------------------------------------------------------------------

@cli.group("genome")
def genome_cmd():
    """Synthetic genomes, reference diffs and RFLP digests."""


@genome_cmd.command("synth")
@click.option("--markers", type=int, default=25, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--inheritance", type=click.Choice(genome.INHERITANCE_MODELS), default="uniparental",
              show_default=True)
@click.option("--divergence", type=float, default=0.005, show_default=True)
@click.option("--mutation-rate", type=float, default=1e-4, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
def genome_synth(markers, seed, inheritance, divergence, mutation_rate, out_dir):
    """Write the reference, a marker catalog, a family and a paternity config."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sc = default_scenario(markers)
    fam = genome.synth_family(sc.reference, seed, divergence, mutation_rate, inheritance,
                              population=sc.population)
    genome.write_genome(out / "reference.gnm", sc.reference)
    for name in ("parent_a", "parent_b", "child"):
        genome.write_genome(out / f"{name}.gnm", getattr(fam, name))
    rflp.write_catalog(out / "catalog.tsv", sc.enzymes, sc.markers)
    (out / "paternity.json").write_text(json.dumps(sc.config().to_dict(), indent=2))
    click.echo(f"wrote reference, catalog, family and config to {out}")


@genome_cmd.command("diff")
@click.argument("genome_file", type=IN)
@click.argument("reference_file", type=IN)
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def genome_diff(genome_file, reference_file, out):
    """Reference-based compression of a genome."""
    d = genome.diff_against_reference(genome.read_genome(genome_file), genome.read_genome(reference_file))
    genome.write_diff(out, d)
    click.echo(f"{len(d)} differences ({d.fraction:.4%} of positions)")


@genome_cmd.command("digest")
@click.argument("genome_file", type=IN)
@click.option("--catalog", type=IN, required=True, help="Enzyme and marker catalog.")
def genome_digest(genome_file, catalog):
    """Print the marker fragment records (length, marker id)."""
    enzymes, markers = rflp.load_catalog(catalog)
    fs = rflp.fragment_set(genome.read_genome(genome_file), enzymes or rflp.default_enzymes(), markers)
    for r in fs.records:
        click.echo(f"{r.marker_id}\t{'absent' if r.absent else r.length}")


# -- serving ----------------------------------------------------------------------

@cli.command()
@click.argument("role", type=click.Choice(["paternity-server", "pm-patient", "compat-server"]))
@click.option("--listen", default="127.0.0.1:7531", show_default=True)
@click.option("--genome", "genome_files", type=IN, multiple=True, required=True,
              help="Server genome; give two haplotypes for the fingerprint tests.")
@click.option("--reference", type=IN, help="Reference genome (fingerprint tests).")
@click.option("--config", type=IN, help="Paternity config JSON.")
@click.option("--params", type=IN, help="Group parameters (or the authority public key for pm-patient).")
@click.option("--strict", is_flag=True, help="Use every genome position instead of the reference diff.")
@click.option("--tag-file", type=click.Path(dir_okay=False), help="Deliver tags by file reference.")
def serve(role, listen, genome_files, reference, config, params, strict, tag_file):
    """Serve one protocol role until interrupted."""
    if role == "paternity-server":
        if not config:
            raise click.UsageError("--config is required")
        group = groups.read_params(params) if params else groups.default_schnorr()
        cfg = apps.PaternityConfig.from_dict(json.loads(Path(config).read_text()))
        r = apps.PaternityServer(cfg, genome.read_genome(genome_files[0]), group)
    else:
        if not reference and not strict:
            raise click.UsageError("--reference is required unless --strict")
        haps = [genome.read_genome(f) for f in genome_files]
        elements = (apps.strict_elements(haps) if strict
                    else apps.diploid_elements(haps, genome.read_genome(reference)))
        if role == "pm-patient":
            if not params:
                raise click.UsageError("--params (authority public key) is required")
            key = groups.read_params(params)
            rsa = key.rsa if isinstance(key, groups.CaKey) else key
            r = apps.PatientServer(rsa, elements, tag_file=tag_file)
        else:
            group = groups.read_params(params) if params else groups.default_schnorr()
            r = apps.CompatServer(group, elements, tag_file=tag_file)
    host, port = net.parse_addr(listen)
    click.echo(f"serving {role} on {host}:{port}", err=True)
    try:
        net.serve(r, (host, port))
    except KeyboardInterrupt:
        pass


# -- tests ------------------------------------------------------------------------

@cli.group("test")
def test_cmd():
    """Run a test against a server, described by a JSON spec file."""


def _run_test(expected, spec, connect, report_file):
    kind = json.loads(Path(spec).read_text()).get("test")
    if kind != expected:
        raise click.UsageError(f"spec describes a {kind!r} test")
    report = net.run_client(spec, connect)
    text = report.to_json()
    if report_file:
        Path(report_file).write_text(text)
    click.echo(text)


def _test_command(name):
    @test_cmd.command(name)
    @click.argument("spec", type=IN)
    @click.option("--connect", default="127.0.0.1:7531", show_default=True)
    @click.option("--report", "report_file", type=click.Path(dir_okay=False))
    def command(spec, connect, report_file):
        _run_test(name, spec, connect, report_file)

    command.__doc__ = f"Run a {name} test."
    return command


test_paternity = _test_command("paternity")
test_pm = _test_command("pm")
test_compat = _test_command("compat")


# -- benchmarks -------------------------------------------------------------------

@cli.command("bench")
@click.argument("suites", nargs=-1, type=click.Choice(bench.SUITES))
@click.option("--jsonl", "as_json", is_flag=True, help="Line-delimited JSON records instead of a table.")
@click.option("--strawman-n", type=int, default=1_000_000, show_default=True)
@click.option("--strawman-fraction", type=float, default=0.01, show_default=True)
def bench_cmd(suites, as_json, strawman_n, strawman_fraction):
    """Measure wall time and bytes per role (all suites by default)."""
    rows = []
    for s in suites or bench.SUITES:
        kw = dict(n=strawman_n, fraction=strawman_fraction) if s == "strawman" else {}
        rows += bench.run_suite(s, **kw)
    click.echo(bench.format_jsonl(rows) if as_json else bench.format_table(rows))


def main(argv=None):
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except (ValidationError, ValueError) as exc:
        click.echo(f"validation error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except ProtocolError as exc:
        click.echo(f"protocol error: {exc}", err=True)
        sys.exit(EXIT_PROTOCOL)
    except (OSError, EOFError, ParameterError) as exc:
        click.echo(f"i/o error: {exc}", err=True)
        sys.exit(EXIT_IO)
    sys.exit(0)


if __name__ == "__main__":
    main()
