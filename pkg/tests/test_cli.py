import csv
import io
import json
import subprocess
import sys

import pytest

from powerbias.cli import emit, main, parse_param, render_csv, write_plot_data
from powerbias.metrics import CheckReport
from powerbias.suites import SUITES, UsageError, resolve_candidate, run_suite

SMALL = 5_000


def test_exit_codes(capsys):
    assert main(["--suite", "carleman"]) == 0
    assert main(["--suite", "conjecture", "-p", "a=1", "-p", "n=2", "-p", "candidate=uniform01",
                 "--samples", str(SMALL)]) == 1
    assert main(["--suite", "carleman", "-p", "bogus=1"]) == 2
    assert main(["--suite", "gaussian-fixed-point", "-p", "candidate=cauchy"]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["--suite", "no-such-suite"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_conjecture_failure_has_ks_detail(capsys):
    main(["--suite", "conjecture", "-p", "a=1", "-p", "n=2", "-p", "candidate=uniform01", "--samples", str(SMALL)])
    data = json.loads(capsys.readouterr().out)
    row = data["subtests"][0]
    assert row["pass"] is False and row["statistic"] > row["threshold"]
    assert set(data) >= {"schema_version", "suite", "params", "seed", "samples", "chunks", "statistic", "threshold",
                         "pass", "subtests"}


def test_transform_mode(capsys):
    assert main(["--transform", "power-bias", "--dist", '{"type": "Gamma", "r": 1, "scale": 1}', "--arg", "1"]) == 0
    assert json.loads(capsys.readouterr().out) == {"type": "Gamma", "r": 2.0, "scale": 1}
    assert main(["--transform", "zero-bias", "--dist", "rademacher"]) == 0
    assert json.loads(capsys.readouterr().out)["type"] == "UniformInterval"
    assert main(["--transform", "equilibrium", "--dist", "normal"]) == 2
    assert main(["--transform", "scale", "--dist", "normal"]) == 2
    capsys.readouterr()


def test_emit_round_trip(tmp_path):
    rep = run_suite("moment-ladder", {}, 42, SMALL, 2)
    path = tmp_path / "r.json"
    emit(rep, path, "json")
    back = CheckReport.from_dict(json.loads(path.read_text()))
    assert back.to_dict() == rep.to_dict()


def test_emit_bad_path(tmp_path):
    rep = run_suite("carleman", {}, 42, SMALL, 1)
    with pytest.raises(OSError, match="cannot write report"):
        emit(rep, tmp_path / "missing" / "r.json")


def test_same_seed_same_bytes():
    a = emit(run_suite("archimedes", {}, 7, SMALL, 3), None)
    b = emit(run_suite("archimedes", {}, 7, SMALL, 3), None)
    assert a == b


def test_csv_rows_match_subtests():
    rep = run_suite("beta-gamma", {}, 42, SMALL, 2)
    rows = list(csv.DictReader(io.StringIO(render_csv(rep))))
    assert len(rows) == len(rep.subtests)
    assert rows[0]["suite"] == "beta-gamma"


def test_plot_data(tmp_path):
    rep = run_suite("archimedes", {}, 42, SMALL, 1, plot=True)
    files = write_plot_data(rep, tmp_path)
    assert files
    header = files[0].read_text().splitlines()[0]
    assert header == "x,ecdf,reference"


def test_parse_param():
    assert parse_param("a=1") == ("a", 1)
    assert parse_param("candidate=uniform01") == ("candidate", "uniform01")
    assert parse_param('candidate={"type": "Exponential", "rate": 2}')[1] == {"type": "Exponential", "rate": 2}
    with pytest.raises(UsageError):
        parse_param("novalue")


def test_resolve_candidate():
    assert resolve_candidate("uniform", 0).b == pytest.approx(3**0.5)
    assert resolve_candidate({"type": "Exponential", "rate": 2.0}, 0).rate == 2.0
    assert resolve_candidate("lognormal", 1) == resolve_candidate("lognormal", 1)
    with pytest.raises(UsageError):
        resolve_candidate({"type": "Nope"}, 0)


def test_run_suite_validation():
    with pytest.raises(UsageError):
        run_suite("all", {"a": 1})
    with pytest.raises(UsageError):
        run_suite("carleman", {}, samples=1)
    with pytest.raises(UsageError):
        run_suite("carleman", {}, chunks=0)


@pytest.mark.parametrize("name", sorted(SUITES))
def test_every_suite_passes_small(name):
    assert run_suite(name, {}, 42, 20_000, 4).passed


@pytest.mark.parametrize("name,params", [
    ("gaussian-fixed-point", {"candidate": "uniform"}),
    ("exponential-fixed-point", {"candidate": "uniform01"}),
    ("gamma-fixed-point", {"candidate": "pointmass1"}),
    ("stein-normal", {"candidate": "centered-exponential"}),
    ("lemma-s1", {"candidate": {"type": "Gamma", "r": 3.0, "scale": 1.0}}),
])
def test_candidate_mode(name, params):
    rep = run_suite(name, params, 42, 20_000, 2)
    # the lemma is unconditional, every other candidate here is wrong
    assert rep.passed is (name == "lemma-s1")


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "powerbias", "--suite", "laplace-ode"], capture_output=True, text=True)
    assert out.returncode == 0
    assert json.loads(out.stdout)["pass"] is True
