"""Command-line interface."""
import json

from click.testing import CliRunner

from thresholdmc import benchmarks
from thresholdmc.cli import main

STRB = str(benchmarks.path("strb.ta"))
STRB_WEAK = str(benchmarks.path("strb_weak.ta"))
SPEC = str(benchmarks.path("strb.spec"))


def run(*args):
    return CliRunner().invoke(main, list(args))


def test_verify_verified_exit_zero():
    result = run("verify", "--ta", STRB, "--spec", SPEC, "--name", "unforg",
                 "--solver", "builtin")
    assert result.exit_code == 0, result.output
    assert "Verified" in result.output


def test_verify_counterexample_exit_one():
    result = run("verify", "--ta", STRB_WEAK, "--spec", SPEC,
                 "--name", "unforg", "--solver", "builtin")
    assert result.exit_code == 1
    assert "Counterexample" in result.output


def test_verify_json_output(tmp_path):
    out = tmp_path / "verdict.json"
    result = run("verify", "--ta", STRB, "--spec", SPEC, "--name", "corr",
                 "--solver", "builtin", "--json", str(out))
    assert result.exit_code == 0
    data = json.loads(out.read_text())
    assert data["verdict"] == "Verified"
    assert len(data["shapes"]) == 3


def test_verify_report_and_dump(tmp_path):
    report = tmp_path / "report"
    dump = tmp_path / "smt"
    result = run("verify", "--ta", STRB, "--spec", SPEC, "--name", "corr",
                 "--solver", "builtin", "--report", str(report),
                 "--dump-smt", str(dump))
    assert result.exit_code == 0, result.output
    assert (report / "report.json").exists()
    assert (report / "frames.csv").exists()
    assert (report / "counters.png").exists()
    assert sorted(p.name for p in dump.iterdir()) == \
        ["shape_000.smt2", "shape_001.smt2", "shape_002.smt2"]


def test_shapes_command():
    result = run("shapes", "--ta", STRB, "--spec", SPEC, "--name", "corr")
    assert result.exit_code == 0
    assert "loop_start" in result.output
    assert "x >= -f + t + 1" in result.output


def test_oracle_no_witness_exit_zero():
    result = run("oracle", "--ta", STRB, "--spec", SPEC, "--name", "unforg",
                 "--params", "n=4,t=1,f=1")
    assert result.exit_code == 0, result.output


def test_oracle_witness_exit_one():
    result = run("oracle", "--ta", STRB_WEAK, "--spec", SPEC,
                 "--name", "unforg", "--params", "n=4,t=1,f=2")
    assert result.exit_code == 1
    data = json.loads(result.output)
    assert data["prefix"]


def test_reduce_srep():
    result = run("reduce", "--ta", STRB, "--params", "n=4,t=1,f=1",
                 "--initial", "l1=3", "--schedule", "r1,r1,r1",
                 "--mode", "srep")
    assert result.exit_code == 0, result.output
    assert "r1" in result.output
