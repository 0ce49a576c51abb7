from __future__ import annotations

import numpy as np
import pytest

from tailchain.cli import main, read_spec_file, run_identity_suite, write_spec_file
from tailchain.laws import DiscreteLaw, ParametricLaw, TailChainSpec

SPEC_TEXT = """# two-sided discrete chain
p=0.5
alpha=1.0
[a1]
atom,mass
-0.5,0.25
0.8,0.75
[b1]
atom,mass
-0.5,0.25
0.8,0.75
"""


def _spec(tmp_path, text=SPEC_TEXT):
    p = tmp_path / "spec.txt"
    p.write_text(text)
    return p


def test_spec_file_round_trip(tmp_path):
    spec = TailChainSpec(1.0, 1.0, ParametricLaw("lognormal", (-0.125, 0.5)), None)
    p = tmp_path / "s.txt"
    write_spec_file(p, spec)
    assert read_spec_file(p) == spec
    disc = read_spec_file(_spec(tmp_path))
    assert disc.a1_law.atoms.tolist() == [-0.5, 0.8]


def test_identity_suite_passes():
    law = DiscreteLaw([-0.5, 0.8], [0.25, 0.75])
    report = run_identity_suite(TailChainSpec(0.5, 1.0, law, law))
    assert all(ok for _, ok, _ in report)


def test_verify_command(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert main(["verify", "--spec", str(_spec(tmp_path)), "--out", str(out)]) == 0
    assert "PASS time_change_formula" in capsys.readouterr().out
    assert out.read_text().startswith("check,passed,max_deviation")


def _run_twice(tmp_path, argv_builder, names):
    blobs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        assert main(argv_builder(d)) == 0
        blobs.append([(d / n).read_bytes() for n in names])
    return blobs


def test_simulate_estimate_deterministic(tmp_path):
    def argv_sim(d):
        return ["simulate", "--model", "tcopula", "--n", "500", "--seed", "4", "--burn-in", "20",
                "--out", str(d / "x.csv")]

    a, b = _run_twice(tmp_path, argv_sim, ["x.csv"])
    assert a == b
    series = tmp_path / "a" / "x.csv"
    for est in ("forward", "backward", "mixture", "monotonized_mixture"):
        out1, out2 = tmp_path / f"{est}1.csv", tmp_path / f"{est}2.csv"
        for out in (out1, out2):
            rc = main(["estimate", "--in", str(series), "--quantile", "0.95", "--estimator", est,
                       "--alpha-mode", "plugin", "--out", str(out)])
            assert rc == 0
        assert out1.read_bytes() == out2.read_bytes()


def test_mc_study_deterministic(tmp_path):
    def argv(d):
        return ["mc-study", "--model", "sre", "--n", "300", "--reps", "4", "--quantile", "0.95",
                "--burn-in", "50", "--seed", "2", "--grid-num", "11", "--out", str(d / "mc.csv")]

    a, b = _run_twice(tmp_path, argv, ["mc.csv", "mc_B1.csv", "mc_summary.csv"])
    assert a == b


def test_case_study_command(tmp_path, capsys):
    def argv(d):
        return ["case-study", "--synthetic-seed", "3", "--out", str(d / "cs.csv")]

    a, b = _run_twice(tmp_path, argv, ["cs.csv", "cs_summary.csv", "cs_prices.csv"])
    assert a == b
    assert "n_extremes: 114" in capsys.readouterr().out
    header = (tmp_path / "a" / "cs.csv").read_text().splitlines()[0]
    assert header == "x,A1*,A-1*,B1*,B-1*"


def test_asymvar_command(tmp_path):
    spec = tmp_path / "nn.txt"
    spec.write_text("p=1\nalpha=1\n[a1]\n0.5,0.5\n1.5,0.5\n")

    def argv(d):
        return ["asymvar", "--spec", str(spec), "--x", "0.5,1,2", "--K", "20", "--out", str(d / "av.csv")]

    a, b = _run_twice(tmp_path, argv, ["av.csv"])
    assert a == b
    rows = a[0].decode().splitlines()
    assert rows[0] == "x,var_f,var_b,sd_pred_f,sd_pred_b,cov_fb,tail_diag"
    assert float(rows[2].split(",")[2]) == pytest.approx(1 / 12)


@pytest.mark.parametrize(
    "argv, code",
    [
        (["simulate", "--model", "nope", "--n", "5", "--out", "x"], 1),
        (["estimate", "--in", "/nonexistent/file.csv", "--out", "x"], 2),
        (["simulate", "--model", "tcopula", "--rho", "1.5", "--n", "5", "--out", "x"], 2),
        ([], 1),
    ],
)
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_no_exceedance_is_data_error(tmp_path):
    x = tmp_path / "x.csv"
    x.write_text("x\n" + "\n".join(["1.0"] * 10 + ["-2.0", "0.5"]) + "\n")
    rc = main(["estimate", "--in", str(x), "--quantile", "0.9", "--target", "A1", "--estimator", "forward",
               "--alpha-mode", "plugin", "--out", str(tmp_path / "o.csv")])
    assert rc == 2


def test_invalid_spec_is_data_error(tmp_path):
    assert main(["verify", "--spec", str(_spec(tmp_path, "p=1\nalpha=1\n[a1]\n2.0,1.0\n"))]) == 2
