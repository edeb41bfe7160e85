import json

import pytest
from click.testing import CliRunner

from genopriv import apps
from genopriv.cli import cli, main


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    d = tmp_path_factory.mktemp("world")
    r = CliRunner().invoke(cli, ["genome", "synth", "--out-dir", str(d), "--seed", "3"])
    assert r.exit_code == 0, r.output
    return d


def test_synth_outputs(world):
    for name in ("reference.gnm", "parent_a.gnm", "parent_b.gnm", "child.gnm", "catalog.tsv", "paternity.json"):
        assert (world / name).exists()
    assert json.loads((world / "paternity.json").read_text())["tau"] == 24


def test_digest_and_diff(world, tmp_path):
    r = CliRunner().invoke(cli, ["genome", "digest", str(world / "child.gnm"), "--catalog", str(world / "catalog.tsv")])
    assert r.exit_code == 0 and len(r.output.splitlines()) == 25
    r = CliRunner().invoke(cli, ["genome", "diff", str(world / "child.gnm"), str(world / "reference.gnm"),
                                 "-o", str(tmp_path / "d")])
    assert r.exit_code == 0 and "differences" in r.output


def test_data_directory_env(world):
    r = CliRunner(env={"GENOPRIV_DATA": str(world)}).invoke(
        cli, ["genome", "digest", "child.gnm", "--catalog", "catalog.tsv"])
    assert r.exit_code == 0, r.output


def test_keygen_and_authorize(tmp_path):
    run = CliRunner().invoke
    assert run(cli, ["keygen", "--kind", "ca", "--bits", "256", "--seed", "1", "-o", str(tmp_path / "ca"),
                     "--public-out", str(tmp_path / "ca.pub")]).exit_code == 0
    assert run(cli, ["keygen", "--bits", "256", "--qbits", "64", "-o", str(tmp_path / "g")]).exit_code == 0
    (tmp_path / "fp.tsv").write_text("A\t5\nC\t7\n")
    r = run(cli, ["ca", "authorize", "--key", str(tmp_path / "ca"), "--fingerprint", str(tmp_path / "fp.tsv"),
                  "-o", str(tmp_path / "sig")])
    assert r.exit_code == 0, r.output
    assert len(apps.loads_authorizations((tmp_path / "sig").read_bytes())) == 2
    r = run(cli, ["ca", "authorize", "--key", str(tmp_path / "ca.pub"), "--fingerprint", str(tmp_path / "fp.tsv"),
                  "-o", str(tmp_path / "sig")])
    assert r.exit_code != 0


def test_exit_codes(world, tmp_path, monkeypatch):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"test": "paternity", "config": str(world / "paternity.json"),
                                "genome": str(world / "child.gnm")}))
    with pytest.raises(SystemExit) as exc:
        main(["test", "paternity", str(spec), "--connect", "127.0.0.1:1"])
    assert exc.value.code == 4
    (tmp_path / "bad.gnm").write_bytes(b"junk")
    with pytest.raises(SystemExit) as exc:
        main(["genome", "digest", str(tmp_path / "bad.gnm"), "--catalog", str(world / "catalog.tsv")])
    assert exc.value.code == 3
    with pytest.raises(SystemExit) as exc:
        main(["test", "pm", str(spec)])
    assert exc.value.code == 1


def test_bench_tags_jsonl():
    r = CliRunner().invoke(cli, ["bench", "tags", "--jsonl"])
    assert r.exit_code == 0, r.output
    rows = [json.loads(x) for x in r.output.splitlines()]
    assert {x["suite"] for x in rows} == {"tags"} and len(rows) == 2
