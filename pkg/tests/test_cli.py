import json
import math
import re

import numpy as np
import pytest

from gibbsdice.cli import main
from gibbsdice.datasets import load_experiment
from gibbsdice.model import GeneralDieSpec, general_energies, gibbs_probabilities, xxy_pxx_ratio, Normalization


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv, "--format", "json")
    assert code == 0, err
    return json.loads(out)


# ---------------------------------------------------------------- fit


def test_fit_budden(capsys):
    doc = run_json(capsys, "fit", "--builtin", "budden")
    assert doc["command"] == "fit"
    assert round(doc["results"]["beta_hat"], 2) == 4.46
    assert doc["results"]["norm"] == "geometric-mean"
    assert doc["input_digest"].startswith("sha256:")


def test_fit_control_table(capsys):
    code, out, _ = run(capsys, "fit", "--builtin", "control-I", "--norm", "half-diagonal")
    assert code == 0
    assert re.search(r"beta_hat: 4\.89\d*", out)
    assert "half-diagonal" in out
    # per-state percentages to one decimal
    assert "31.6" in out and "11.2" in out


def test_fit_control_json(capsys):
    doc = run_json(capsys, "fit", "--builtin", "control-I", "--norm", "half-diagonal")
    assert abs(doc["results"]["beta_hat"] - 4.90) <= 0.05
    assert len(doc["results"]["rows"]) == 6


def test_fit_exact_model_file(capsys, tmp_path):
    heights = (10, 11.5, 7.61, 5.39, 11.5, 10)
    p = gibbs_probabilities(general_energies(GeneralDieSpec(heights, 16.45)), 7.0)
    counts = [round(x * 10**9) for x in p]
    path = tmp_path / "exact.csv"
    path.write_text(
        "heights," + ",".join(map(str, heights)) + "\nscale,16.45\ncounts," + ",".join(map(str, counts)) + "\n"
    )
    doc = run_json(capsys, "fit", "--file", str(path))
    assert f"{doc['results']['beta_hat']:.2f}" == "7.00"


def test_fit_missing_file_is_data_error(capsys, tmp_path):
    code, _, err = run(capsys, "fit", "--file", str(tmp_path / "nope.csv"))
    assert code == 2
    assert "nope.csv" in err


def test_fit_bad_file_is_data_error(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("sx,sy,N,nxx\n15,7,10,20\n")
    code, _, err = run(capsys, "fit", "--file", str(path))
    assert code == 2
    assert "line 2" in err


def test_unknown_builtin_is_data_error(capsys):
    code, _, err = run(capsys, "fit", "--builtin", "nope")
    assert code == 2
    assert "budden" in err


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["fit"],
        ["fit", "--builtin", "budden", "--file", "x.csv"],
        ["frobnicate"],
        ["predict", "--cuboid", "13x20x23"],
        ["predict", "--cuboid", "13x20"],
        ["bootstrap", "--builtin", "budden"],
        ["fit", "--builtin", "budden", "--format", "xml"],
    ],
)
def test_usage_errors_exit_1(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 1


def test_help_exits_0(capsys):
    code, out, _ = run(capsys, "--help")
    assert code == 0 and "fit" in out


# ---------------------------------------------------------------- predict


def test_predict_control_gibbs(capsys):
    doc = run_json(capsys, "predict", "--cuboid", "13x20x23", "--beta", "10.2", "--norm", "half-diagonal")
    pct = [r["p_percent"] for r in doc["results"]["rows"]]
    assert [round(x, 1) for x in pct] == [5.0, 2.0, 43.0, 43.0, 2.0, 5.0]


def test_predict_table_format_rounds(capsys):
    code, out, _ = run(capsys, "predict", "--cuboid", "13x20x23", "--beta", "4.90", "--norm", "half-diagonal")
    assert code == 0
    for v in ("11.2", "7.2", "31.6"):
        assert v in out


def test_predict_simpson(capsys):
    doc = run_json(capsys, "predict", "--cuboid", "13x20x23", "--model", "simpson")
    pct = [round(r["p_percent"], 1) for r in doc["results"]["rows"]]
    assert pct == [13.5, 10.5, 26.0, 26.0, 10.5, 13.5]


def test_predict_cube(capsys):
    code, out, _ = run(capsys, "predict", "--cuboid", "10x10x10", "--beta", "3")
    assert code == 0
    assert out.count("16.7") == 6
    doc = run_json(capsys, "predict", "--cuboid", "10x10x10", "--beta", "3")
    assert all(f"{r['p_percent']:.2f}" == "16.67" for r in doc["results"]["rows"])


def test_predict_xxy_and_heights(capsys):
    doc = run_json(capsys, "predict", "--xxy", "15x7.1", "--beta", "4.46")
    assert doc["results"]["norm"] == "geometric-mean"
    doc = run_json(capsys, "predict", "--heights", "10,11.5,7.61,5.39,11.5,10", "--scale", "16.45", "--beta", "5.02")
    pct = [r["p_percent"] for r in doc["results"]["rows"]]
    assert sum(pct) == pytest.approx(100.0)


def test_predict_negative_beta_is_error(capsys):
    code, _, _ = run(capsys, "predict", "--cuboid", "13x20x23", "--beta", "-1")
    assert code in (1, 2)


# ---------------------------------------------------------------- gof


@pytest.mark.parametrize("name,expected", [("budden", 6.2), ("heilbronner", 6.6)])
def test_gof_fit(capsys, name, expected):
    doc = run_json(capsys, "gof", "--builtin", name, "--fit")
    assert abs(doc["results"]["chi2_per_m"] - expected) <= 0.3
    assert doc["results"]["verdict"] == "rejected"


def test_gof_perfect_synthetic(capsys, tmp_path):
    beta = 3.0
    lines = ["sx,sy,N,nxx"]
    for sy in (10.0, 20.0, 30.0):
        from gibbsdice.model import xxy_pxx

        lines.append(f"25,{sy},{10**12},{round(10**12 * xxy_pxx(25, sy, beta))}")
    path = tmp_path / "perfect.csv"
    path.write_text("\n".join(lines) + "\n")
    doc = run_json(capsys, "gof", "--file", str(path), "--beta", "3")
    assert doc["results"]["chi2"] < 1e-6


def test_gof_single_die(capsys):
    doc = run_json(capsys, "gof", "--builtin", "control-I", "--beta", "4.90")
    assert doc["results"]["m"] == 6
    assert doc["results"]["chi2_per_m"] <= 1.5


# ---------------------------------------------------------------- bootstrap


@pytest.mark.parametrize("seed", ["0", "1", "18446744073709551615"])
def test_bootstrap_single_iteration(capsys, seed):
    doc = run_json(capsys, "bootstrap", "--builtin", "budden", "--epsilon", "0.05", "--iterations", "1", "--seed", seed)
    assert doc["results"]["p_value"] in (0.0, 1.0)


def test_bootstrap_workers_do_not_change_output(capsys):
    argv = ["bootstrap", "--builtin", "heilbronner", "--epsilon", "0.04", "--iterations", "100", "--seed", "9"]
    a = run_json(capsys, *argv, "--workers", "1")
    b = run_json(capsys, *argv, "--workers", "3")
    assert a["results"] == b["results"]


def test_bootstrap_bad_seed(capsys):
    code, _, _ = run(capsys, "bootstrap", "--builtin", "budden", "--epsilon", "0.05", "--seed", "-1")
    assert code in (1, 2)


def test_bootstrap_heilbronner_reference(capsys):
    doc = run_json(capsys, "bootstrap", "--builtin", "heilbronner", "--epsilon", "0.05", "--iterations", "999", "--seed", "1")
    assert abs(doc["results"]["p_value"] - 0.090) <= 0.03


def test_bootstrap_budden_reference(capsys):
    doc = run_json(capsys, "bootstrap", "--builtin", "budden", "--epsilon", "0.06", "--iterations", "999")
    assert abs(doc["results"]["p_value"] - 0.187) <= 0.04


# ---------------------------------------------------------------- simulate


def test_simulate_zero_tosses(capsys):
    doc = run_json(capsys, "simulate", "--cuboid", "13x20x23", "--beta", "4.9", "-N", "0")
    assert doc["results"]["counts"] == [0] * 6


def test_simulate_uniform(capsys):
    doc = run_json(capsys, "simulate", "--cuboid", "13x20x23", "--beta", "0", "-N", str(6 * 10**5), "--seed", "4")
    bound = 4 * math.sqrt(1e5 * 5 / 36)
    for c in doc["results"]["counts"]:
        assert abs(c - 1e5) <= bound


def test_simulate_round_trip_into_fit(capsys, tmp_path):
    path = tmp_path / "sim.csv"
    run_json(capsys, "simulate", "--cuboid", "13x20x23", "--beta", "6", "-N", "200000", "--seed", "11",
             "--out", str(path))
    assert load_experiment(path).counts.N == 200000
    doc = run_json(capsys, "fit", "--file", str(path))
    # sd of beta_hat at this N is about 0.02
    assert abs(doc["results"]["beta_hat"] - 6.0) <= 0.1


def test_simulate_xxy_round_trip(capsys, tmp_path):
    path = tmp_path / "sim.csv"
    run_json(capsys, "simulate", "--xxy", "15x12", "--beta", "4.46", "-N", "500000", "--seed", "2", "--out", str(path))
    doc = run_json(capsys, "fit", "--file", str(path))
    assert abs(doc["results"]["beta_hat"] - 4.46) <= 0.1


def test_simulate_seeded(capsys):
    argv = ["simulate", "--cuboid", "13x20x23", "--beta", "5", "-N", "1000", "--seed", "8"]
    assert run_json(capsys, *argv) == run_json(capsys, *argv)


def test_simulate_negative_n(capsys):
    code, _, _ = run(capsys, "simulate", "--cuboid", "13x20x23", "--beta", "5", "-N", "-3")
    assert code == 1


# ---------------------------------------------------------------- plot


def test_plot_budden_heilbronner(capsys, tmp_path):
    out = tmp_path / "fig.svg"
    doc = run_json(capsys, "plot", "--builtin", "budden", "--builtin", "heilbronner", "--fit", "--out", str(out))
    svg = out.read_text()
    assert svg.startswith("<?xml") or svg.startswith("<svg")
    assert svg.count('class="marker"') == 22
    assert svg.count('class="model-curve"') == 2
    assert doc["results"]["markers"] == 22
    betas = [float(b) for b in re.findall(r'data-beta="([^"]+)"', svg)]
    assert [round(b, 2) for b in betas] == [4.46, 3.53]
    # each curve passes through 1/3 at the cube
    for b in betas:
        assert xxy_pxx_ratio(1.0, b, Normalization.GEOMETRIC_MEAN) == pytest.approx(1 / 3)


def test_plot_curve_has_200_points(capsys, tmp_path):
    out = tmp_path / "fig.svg"
    run_json(capsys, "plot", "--builtin", "heilbronner", "--out", str(out))
    pts = re.search(r'class="model-curve"[^>]*points="([^"]+)"', out.read_text())
    if pts is None:
        pts = re.search(r'points="([^"]+)"[^>]*class="model-curve"', out.read_text())
    assert len(pts.group(1).split()) == 200


def test_plot_zero_nxx_flagged(capsys, tmp_path):
    data = tmp_path / "z.csv"
    data.write_text("sx,sy,N,nxx\n15,10,100,60\n15,40,100,0\n")
    out = tmp_path / "fig.svg"
    run_json(capsys, "plot", "--file", str(data), "--beta", "4", "--out", str(out))
    svg = out.read_text()
    assert svg.count('class="ybar"') == 1
    assert "n_xx = 0" in svg


def test_plot_empty_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "plot", "--out", str(tmp_path / "x.svg"))
    assert code == 1
    assert "nothing to plot" in err


def test_plot_rejects_die_dataset(capsys, tmp_path):
    code, _, _ = run(capsys, "plot", "--builtin", "control-I", "--out", str(tmp_path / "x.svg"))
    assert code == 1


# ---------------------------------------------------------------- output


@pytest.mark.parametrize("fmt", ["json", "csv"])
def test_output_is_byte_stable(capsys, fmt):
    argv = ["bootstrap", "--builtin", "budden", "--epsilon", "0.05", "--iterations", "30", "--seed", "5", "--format", fmt]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b and a


def test_json_full_precision(capsys):
    doc = run_json(capsys, "fit", "--builtin", "budden")
    text = repr(doc["results"]["beta_hat"])
    assert len(re.sub(r"[^0-9]", "", text).lstrip("0")) >= 10


def test_json_envelope_keys(capsys):
    doc = run_json(capsys, "predict", "--cuboid", "13x20x23", "--beta", "4.9")
    assert list(doc) == ["command", "arguments", "input_digest", "format", "results"]
    assert doc["format"] == "json"


def test_csv_output(capsys):
    code, out, _ = run(capsys, "fit", "--builtin", "heilbronner", "--format", "csv")
    assert code == 0
    assert "beta_hat" in out
    assert "sx,sy,N,nxx" in out


def test_env_default_format(capsys, monkeypatch):
    monkeypatch.setenv("GIBBSDICE_FORMAT", "json")
    code, out, _ = run(capsys, "fit", "--builtin", "budden")
    assert code == 0
    assert json.loads(out)["format"] == "json"
    code, out, _ = run(capsys, "fit", "--builtin", "budden", "--format", "table")
    assert not out.lstrip().startswith("{")


def test_norm_always_echoed(capsys):
    doc = run_json(capsys, "fit", "--builtin", "budden", "--norm", "half-diagonal")
    assert doc["arguments"]["norm"] == "half-diagonal"
    assert doc["results"]["beta_hat"] != pytest.approx(4.458, abs=1e-3)


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "gibbsdice", "predict", "--cuboid", "10x10x10", "--beta", "1"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "16.7" in res.stdout
