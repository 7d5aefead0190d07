from pathlib import Path

import pytest

from misdid.cli import build_parser, run
from misdid.core import ObservedPanel
from misdid.dataio import write_panel

GOLDEN = Path(__file__).parent / "golden"

SIM_TSV = ["simulate", "--mode", "nondifferential", "--panel", "symmetric", "--rate", "0.1,0.2",
           "--n", "500", "--reps", "5", "--seed", "42", "--threads", "1"]
SIM_MD = ["simulate", "--mode", "differential", "--panel", "asymmetric", "--rate", "0.2", "--n", "500",
          "--reps", "5", "--seed", "42", "--threads", "1", "--format", "md", "--lambda", "0.2,0.4"]


@pytest.mark.parametrize("argv, golden", [(SIM_TSV, "simulate_nondiff.tsv"), (SIM_MD, "simulate_diff_asym.md")])
def test_simulate_matches_golden(capsys, argv, golden):
    assert run(argv) == 0
    assert capsys.readouterr().out == (GOLDEN / golden).read_text()


def test_simulate_thread_count_irrelevant(capsys):
    run(SIM_TSV)
    one = capsys.readouterr().out
    run(SIM_TSV[:-1] + ["8"])
    assert capsys.readouterr().out == one


def test_simulate_env_threads(capsys, monkeypatch):
    argv = [a for a in SIM_TSV if a not in ("--threads",)][:-1]
    monkeypatch.setenv("DIDMC_THREADS", "3")
    assert run(argv) == 0
    assert capsys.readouterr().out == (GOLDEN / "simulate_nondiff.tsv").read_text()


def test_simulate_to_file(tmp_path, capsys):
    out = tmp_path / "t.tsv"
    assert run(SIM_TSV + ["--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert out.read_text() == (GOLDEN / "simulate_nondiff.tsv").read_text()


def test_simulate_explicit_rates(capsys):
    assert run(["simulate", "--fn", "0.2", "--fp", "0", "--n", "200", "--reps", "2", "--seed", "1"]) == 0
    assert capsys.readouterr().out.splitlines()[1].startswith("10%\t")


def test_bounds_output(capsys):
    assert run(["bounds", "--theta", "2.4", "--lambda", "0.4"]) == 0
    assert capsys.readouterr().out == "(2.400000, 4.000000)\n"
    assert run(["bounds", "--theta", "-0.1537", "--lambda", "0.07"]) == 0
    assert capsys.readouterr().out == "(-0.165269, -0.153700)\n"


def test_lambda_output(capsys):
    assert run(["lambda", "--periods", "2", "7"]) == 0
    assert capsys.readouterr().out == "lambda=0.285714 method=PeriodRatio inputs=(2, 7)\n"
    assert run(["lambda", "--counts", "0", "1000"]) == 0
    assert "method=CaseCountRatio" in capsys.readouterr().out


def test_regions_output(capsys):
    assert run(["regions", "--a", "0.5", "--b", "2", "--c", "1", "--att", "1,3,4,5,-1"]) == 0
    regions = [line.split("\t")[1] for line in capsys.readouterr().out.splitlines()]
    assert regions == ["region=SignReversal", "region=Attenuation", "region=FixedPoint",
                       "region=Expansion", "region=OutOfCharacterizedRange"]


def test_decompose_output(capsys):
    assert run(["decompose", "--mode", "differential", "--rate", "0.3", "--n", "2000", "--seed", "1"]) == 0
    out = dict(line.split("\t") for line in capsys.readouterr().out.splitlines())
    assert out["theta_did"] == out["theta_reconstructed"]
    assert abs(float(out["residual"])) <= 1e-10


@pytest.mark.parametrize("argv, code", [
    (["bounds", "--theta", "1", "--lambda", "1.2"], 2),
    (["lambda", "--periods", "7", "7"], 2),
    (["regions", "--a", "1.5", "--b", "1", "--c", "0.5", "--att", "1"], 2),
    (["simulate", "--rate", "0.1", "--bogus"], 1),
    (["simulate", "--rate", "0.1"], 1),
    (["decompose", "--rate", "0.1"], 1),
    (["simulate", "--rate", "0.1", "--fn", "0.1", "--fp", "0.1", "--seed", "1"], 1),
    (["simulate", "--fn", "0.1", "--seed", "1"], 1),
    (["frobnicate"], 1),
    ([], 1),
], ids=lambda x: " ".join(x) if isinstance(x, list) else str(x))
def test_exit_codes(capsys, argv, code):
    assert run(argv) == code
    assert capsys.readouterr().err


def test_estimate_on_csv(tmp_path, capsys):
    panel = ObservedPanel([0, 1, 2, 3, 0, 1, 2, 3], [3, 4, 5, 7, 1, 2, 3, 4], [1, 1, 1, 1, 0, 0, 0, 0])
    path = tmp_path / "p.csv"
    write_panel(panel, path)
    assert run(["estimate", "--data", str(path), "--bootstrap", "0", "--label", "y",
                "--lambda", "0.4", "--format", "md"]) == 0
    out = capsys.readouterr().out
    assert "| y | 2.2500 |  | (2.2500 , 3.7500) |" in out
    assert run(["estimate", "--data", str(path), "--bootstrap", "50", "--seed", "3", "--threads", "1"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split("\t")
    assert row[1] == "2.2500" and float(row[2]) >= 0


def test_estimate_bad_file(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("unit_id,y0,y1,d\n1,0,1,1\n2,0,1,2\n")
    assert run(["estimate", "--data", str(path), "--format-in", "wide"]) == 2
    assert "row 3" in capsys.readouterr().err


def test_help_lists_flags(capsys):
    parser = build_parser()
    subs = parser._subparsers._group_actions[0].choices
    assert set(subs) == {"simulate", "estimate", "bounds", "lambda", "regions", "decompose"}
    for name, sub in subs.items():
        help_text = sub.format_help()
        for action in sub._actions:
            for flag in action.option_strings:
                assert flag in help_text, (name, flag)
        with pytest.raises(SystemExit) as exc:
            run([name, "--help"])
        assert exc.value.code == 0
