import json
import os
import subprocess
import sys

import pytest

from hecode.cli import SpecError, main, parse_spec
from hecode.stats import read_stats_csv

SPEC = """\
[experiment]
problems = example2
algorithms = HECO-DE, HCO-DE
runs = {runs}
fes = {fes}
seed = 3
out = {out}
[solver:example2]
lam = 10
"""


def write_spec(tmp_path, runs=2, fes=1500, out="res", name="spec.ini"):
    path = tmp_path / name
    path.write_text(SPEC.format(runs=runs, fes=fes, out=tmp_path / out))
    return path


def test_run_writes_traces_stats_and_sidecars(tmp_path):
    spec = write_spec(tmp_path)
    assert main(["run", "--spec", str(spec)]) == 0
    out = tmp_path / "res"
    traces = sorted(p.relative_to(out).as_posix() for p in (out / "traces").rglob("*.csv"))
    assert traces == [f"traces/example2/{a}/run_00{i}.csv" for a in ("HCO-DE", "HECO-DE") for i in (0, 1)]
    for p in out.rglob("*.csv"):
        meta = json.loads(p.with_name(p.name + ".meta.json").read_text())
        assert set(meta) >= {"spec_sha256", "seed", "version"}
    meta = json.loads((out / "traces/example2/HECO-DE/run_001.csv.meta.json").read_text())
    assert meta["seed"] == 4
    stats = read_stats_csv((out / "stats.csv").read_text())
    assert [s.algorithm for s in stats] == ["HECO-DE", "HCO-DE"]


def test_single_run_gives_one_trace(tmp_path):
    spec = tmp_path / "one.ini"
    spec.write_text(f"[experiment]\nproblems = g24\nalgorithms = HECO-DE\nruns = 1\nfes = 1000\nout = {tmp_path / 'o'}\n")
    assert main(["run", "--spec", str(spec), "--format", "json"]) == 0
    assert len(list((tmp_path / "o" / "traces").rglob("*.csv"))) == 1
    assert json.loads((tmp_path / "o" / "stats.json").read_text())[0]["problem"] == "g24"


def test_rerun_is_byte_identical_and_seed_flag_matters(tmp_path):
    spec = write_spec(tmp_path)
    assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "a"), "--jobs", "2"]) == 0
    assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "b")]) == 0
    assert main(["run", "--spec", str(spec), "--out", str(tmp_path / "c"), "--seed", "99"]) == 0
    a, b, c = ((tmp_path / d / "stats.csv").read_bytes() for d in "abc")
    assert a == b and a != c


def test_example2_success_rate(tmp_path):
    spec = tmp_path / "e2.ini"
    spec.write_text(f"[experiment]\nproblems = example2\nalgorithms = HECO-DE\nruns = 25\nfes = 20000\nout = {tmp_path}\n")
    assert main(["run", "--spec", str(spec)]) == 0
    assert read_stats_csv((tmp_path / "stats.csv").read_text())[0].SR >= 95


@pytest.mark.parametrize(
    "text, message",
    [
        ("[experiment]\nproblems = nope\nalgorithms = HECO-DE\n", "unknown problem"),
        ("[experiment]\nproblems = g06\nalgorithms = XYZ\n", "unknown algorithm"),
        ("[experiment]\nproblems = g06\nalgorithms = HECO-DE\nruns = 0\n", "runs"),
        ("[solver]\nlam = 4\n", "experiment"),
        ("[experiment]\nproblems = g06\nalgorithms = HECO-DE\n[solver]\nlambda = 4\n", "unknown solver option"),
        ("[experiment]\nproblems = g06\nalgorithms = HECO-DE\nruns = many\n", "bad"),
    ],
)
def test_bad_specs(tmp_path, capsys, text, message):
    with pytest.raises(SpecError, match=message):
        parse_spec(text)
    spec = tmp_path / "bad.ini"
    spec.write_text(text)
    assert main(["run", "--spec", str(spec)]) != 0
    assert message in capsys.readouterr().err


def test_failing_cell_is_reported(tmp_path, capsys):
    spec = tmp_path / "fail.ini"
    # lam above the initial population fails validation inside the cell
    spec.write_text(
        f"[experiment]\nproblems = g06, example1\nalgorithms = HECO-DE\nruns = 1\nfes = 1000\nout = {tmp_path}\n"
        "[solver:g06]\npop_initial = 10\n"
    )
    assert main(["run", "--spec", str(spec)]) == 1
    assert "failed cell g06/HECO-DE" in capsys.readouterr().err
    assert [s.problem for s in read_stats_csv((tmp_path / "stats.csv").read_text())] == ["example1"]


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    spec = write_spec(tmp_path, runs=1, out="file/sub")
    assert main(["run", "--spec", str(spec)]) == 2
    assert "error" in capsys.readouterr().err


def _stats_file(tmp_path, name, rows):
    path = tmp_path / name
    header = "problem,algorithm,best,median,worst,mean,std,SR,c1,c2,c3,vbar,mean_vio\n"
    path.write_text(header + "".join(f"{p},{a},{m},{m},{m},{m},0,100,0,0,0,0,0\n" for p, a, m in rows))
    return path


def test_rank_command(tmp_path, capsys):
    a = _stats_file(tmp_path, "a.csv", [("g06", "A", 1.0), ("g08", "A", 2.0)])
    b = _stats_file(tmp_path, "b.csv", [("g06", "B", 1.0), ("g08", "B", 2.0)])
    assert main(["rank", str(a), str(b)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-2:] == ["A,TOTAL,2,2,4", "B,TOTAL,2,2,4"]
    assert main(["rank", str(a), str(b), "--format", "json", "--out", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["totals"] == {"A": 4, "B": 4}
    assert (tmp_path / "r.json.meta.json").exists()


def test_rank_rejects_mismatched_problem_sets(tmp_path, capsys):
    a = _stats_file(tmp_path, "a.csv", [("g06", "A", 1.0), ("g08", "A", 2.0)])
    b = _stats_file(tmp_path, "b.csv", [("g06", "B", 1.0)])
    assert main(["rank", str(a), str(b)]) == 2
    assert "B lacks problem(s) g08" in capsys.readouterr().err
    assert main(["rank", str(a)]) == 2


def test_widegap_command(tmp_path, capsys):
    out = tmp_path / "wg.csv"
    assert main(["widegap", "--trials", "1", "--max-generations", "0", "--out", str(out)]) == 0
    assert out.read_text() == "arm,trial,hit_generation,censored\nSOCO-elitist,0,,1\nHECO-two-weight,0,,1\n"
    assert main(["widegap", "--trials", "2", "--max-generations", "50", "--seed", "5", "--format", "json"]) == 0
    first = capsys.readouterr().out
    assert main(["widegap", "--trials", "2", "--max-generations", "50", "--seed", "5", "--format", "json"]) == 0
    assert capsys.readouterr().out == first
    assert main(["widegap", "--trials", "0"]) == 2


def test_list_problems(capsys):
    assert main(["list-problems"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [l.split("\t")[0] for l in lines] == ["example1", "example2", "g06", "g08", "g11", "g24"]


def test_module_entry_point():
    done = subprocess.run(
        [sys.executable, "-m", "hecode", "list-problems"], capture_output=True, text=True, env=dict(os.environ)
    )
    assert done.returncode == 0 and "g24" in done.stdout
