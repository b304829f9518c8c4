import csv
import json

import pytest

from noiseprop.cli import main

SYM_CFG = {
    "network": {"symmetric": {"sizes": [1, 200, 200, 1], "activation": {"kind": "shifted_sigmoid", "alpha": 4}}},
    "noise": {"d_add_uncorr": 1e-4, "d_add_corr": 1e-4, "d_mult_uncorr": 1e-3, "d_mult_corr": 1e-3},
    "K": 300,
    "T": 200,
    "order": 3,
    "metric": "variance",
    "mean_window": [0.1, 0.9],
}


def _cfg(tmp_path, cfg):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_compare_symmetric(tmp_path):
    out = tmp_path / "c"
    assert main(["compare", "--config", _cfg(tmp_path, SYM_CFG), "--out", str(out), "--seed", "2024"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["median_rel_err"] <= 0.15
    assert set(summary) >= {"median_rel_err", "p95_rel_err"}
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 2024 and manifest["config"]["K"] == 300
    header = next(csv.reader(open(out / "comparison.csv")))
    assert header == ["t", "neuron", "mc_mean", "mc_variance", "pred_variance", "rel_err"]


def test_simulate_rerun_is_bit_exact(tmp_path):
    cfg = dict(SYM_CFG, T=5, K=20)
    cfg["network"] = {"symmetric": {"sizes": [1, 10, 1]}}
    for name in ("a", "b"):
        assert main(["simulate", "--config", _cfg(tmp_path, cfg), "--out", str(tmp_path / name), "--seed", "7"]) == 0
    for n in (1, 2, 3):
        assert (tmp_path / "a" / f"layer_{n}.csv").read_text() == (tmp_path / "b" / f"layer_{n}.csv").read_text()
    # the manifest alone reproduces the run
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    cfg2 = {k: v for k, v in manifest["config"].items() if k != "command"}
    assert main(["simulate", "--config", _cfg(tmp_path, cfg2), "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "c" / "layer_3.csv").read_text() == (tmp_path / "a" / "layer_3.csv").read_text()


def test_simulate_k1_rejected(tmp_path, capsys):
    assert main(["simulate", "--config", _cfg(tmp_path, SYM_CFG), "--out", str(tmp_path), "--set", "K=1"]) == 2
    assert "K must be >= 2" in capsys.readouterr().err


@pytest.mark.parametrize("args", [
    ["predict", "--set", 'network={"file": "/nonexistent/model.json"}'],
    ["predict", "--set", 'noise={"d_add_uncorr": -1}'],
    ["predict", "--set", "order=99"],
    ["train", "--set", "train={}"],
])
def test_config_errors_exit_2(tmp_path, args):
    assert main(args + ["--out", str(tmp_path)]) == 2


def test_bad_json_exit_2(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{not json")
    assert main(["predict", "--config", str(p), "--out", str(tmp_path)]) == 2


def test_numerical_failure_exit_1(tmp_path):
    net = {"layers": [{"size": 1, "activation": {"kind": "identity"}},
                      {"size": 1, "activation": {"kind": "identity"}, "weights": [[1e308]], "biases": [0.0]},
                      {"size": 1, "activation": {"kind": "identity"}, "weights": [[1e308]], "biases": [0.0]}]}
    (tmp_path / "net.json").write_text(json.dumps(net))
    cfg = {"network": {"file": str(tmp_path / "net.json")}, "K": 4, "T": 2}
    assert main(["simulate", "--config", _cfg(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 1


def test_lamerey_three_regimes(tmp_path):
    out = tmp_path / "l"
    assert main(["lamerey", "--out", str(out), "--set", 'noise={"d_add_uncorr": 1e-4}', "--set", "order=3",
                 "--set", "alphas=[1.5, 2.0, 3.0]"]) == 0
    rows = list(csv.DictReader(open(out / "lamerey.csv")))
    seq = {}
    for r in rows:
        seq.setdefault(float(r["alpha"]), []).append(float(r["S_n"]))
    assert all(b < a for a, b in zip(seq[1.5], seq[1.5][1:]))
    s2 = seq[2.0]
    assert max(s2) / min(s2) < 1.05
    s3 = seq[3.0]
    assert all(b > a for a, b in zip(s3, s3[1:]))
    assert (s3[-1] - s3[-2]) / s3[-2] < 0.05
    assert s3[-1] > s2[-1] > seq[1.5][-1]


def test_train_fit_predict_pipeline(tmp_path):
    dataset = {"name": "digits", "test_size": 500}
    tr = tmp_path / "tr"
    assert main(["train", "--out", str(tr), "--seed", "1", "--set",
                 json.dumps({"dataset": dataset, "sizes": [64, 20, 10], "epochs": 2}).join(["train=", ""])]) == 0
    assert {"model.json", "history.csv", "stats.json", "manifest.json"} <= {p.name for p in tr.iterdir()}
    inputs = json.dumps({"dataset": dataset, "count": 200})
    fd = tmp_path / "fd"
    assert main(["fit-density", "--out", str(fd), "--set", f'network={{"file": "{tr / "model.json"}"}}',
                 "--set", f"inputs={inputs}", "--set", "layer=2"]) == 0
    assert json.loads((fd / "density_2.json").read_text())["kind"] == "quartic_exp"
    pr = tmp_path / "pr"
    assert main(["predict", "--out", str(pr), "--set", f'network={{"file": "{tr / "model.json"}"}}',
                 "--set", f"inputs={inputs}", "--set", 'noise={"d_add_uncorr": 1e-4}']) == 0
    lines = (pr / "sn.csv").read_text().splitlines()
    assert lines[0] == "n,S_n" and len(lines) == 3
    assert len((pr / "prediction.csv").read_text().splitlines()) == 1 + 200 * 10


def test_mackey_glass_series(tmp_path):
    assert main(["mackey-glass", "--out", str(tmp_path), "--set", 'mackey_glass={"length": 50}']) == 0
    rows = list(csv.reader(open(tmp_path / "series.csv")))
    assert rows[0] == ["i", "x"] and len(rows) == 51
