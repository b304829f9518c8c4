"""Command-line experiment runner.

    noiseprop <command> [--config cfg.json] [--out DIR] [--seed N] [--set key=json ...]

Commands: simulate, predict, compare, lamerey, train, fit-density, mackey-glass.
The config is a JSON object; command-line flags override its values. Keys:

    network   {"symmetric": {"sizes": [...], "activation": {...}}} or {"file": "model.json"}
    noise     {"d_add_uncorr": .., "d_add_corr": .., "d_mult_uncorr": .., "d_mult_corr": ..}
    inputs    {"grid": [lo, hi]}                  T evenly spaced scalars
              {"values": [[...], ...]}            explicit rows
              {"dataset": {...}, "split": "test", "count": n}
    dataset   {"name": "digits", "test_size": .., "seed": ..}
              {"name": "mackey_glass", "length": .., "window": .., "train": .., <MackeyGlassParams fields>}
              {"name": "idx", "train": [images, labels], "test": [images, labels]}
    K, T, seed, order, workers, density, metric, mean_window, layer
    lamerey   alphas, depth, input, s2
    train     sizes, hidden, output, dataset and any TrainConfig field

Every run writes manifest.json with the resolved config. Exit status: 0 success,
2 invalid configuration or input, 1 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .activations import ShiftedSigmoid, activation_from_dict
from .analytic import (propagate_symmetric, sn_sequence, write_budget_csv, write_lamerey_csv)
from .compare import relative_errors, summarize, write_comparison_csv
from .datasets import MackeyGlassParams, load_digits, load_idx, mackey_glass, windowize
from .density import (QuadratureError, collect_preactivations, fit_density, predict_trained,
                      save_density, write_histogram_csv)
from .network import Network, NoiseConfig, is_symmetric, make_symmetric, weight_stats
from .simulate import NumericalError, estimate, write_layer_csv
from .train import TrainConfig, init_network, train, write_history_csv

log = logging.getLogger("noiseprop")

COMMANDS = ("simulate", "predict", "compare", "lamerey", "train", "fit-density", "mackey-glass")

DEFAULTS = {
    "K": 300,
    "T": 100,
    "seed": 0,
    "order": 1,
    "workers": 1,
    "density": "quartic_exp",
    "metric": "snr",
    "out": "out",
}


class ConfigError(ValueError):
    pass


def _require(cfg, key):
    if key not in cfg:
        raise ConfigError(f"config is missing {key!r}")
    return cfg[key]


def resolve_config(command, cfg, out=None, seed=None, overrides=()):
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    cfg = {**DEFAULTS, **cfg}
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        try:
            cfg[key] = json.loads(value)
        except json.JSONDecodeError:
            cfg[key] = value
    if out is not None:
        cfg["out"] = out
    if seed is not None:
        cfg["seed"] = seed
    cfg["command"] = command
    for key in ("K", "T", "order", "workers"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool):
            raise ConfigError(f"{key} must be an integer")
    if not isinstance(cfg["seed"], int) or not 0 <= cfg["seed"] < 2**64:
        raise ConfigError("seed must be an integer in [0, 2^64)")
    if command in ("simulate", "compare") and cfg["K"] < 2:
        raise ConfigError(f"K must be >= 2 to estimate a variance, got {cfg['K']}")
    if cfg["T"] < 1 or cfg["workers"] < 1:
        raise ConfigError("T and workers must be positive")
    if not 1 <= cfg["order"] <= 15:
        raise ConfigError("order must be in [1, 15]")
    if cfg["metric"] not in ("snr", "variance"):
        raise ConfigError("metric must be 'snr' or 'variance'")
    if "noise" in cfg:
        try:
            NoiseConfig.from_dict(cfg["noise"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"noise: {exc}") from None
    for path in _referenced_files(cfg):
        if not Path(path).exists():
            raise ConfigError(f"referenced file does not exist: {path}")
    return cfg


def _referenced_files(cfg):
    net = cfg.get("network") or {}
    if isinstance(net, dict) and "file" in net:
        yield net["file"]
    for holder in (cfg.get("inputs") or {}, cfg.get("train") or {}, cfg):
        ds = holder.get("dataset") if isinstance(holder, dict) else None
        if isinstance(ds, dict) and ds.get("name") == "idx":
            for split in ("train", "test"):
                yield from ds.get(split, [])


# ---------------------------------------------------------------------------
# config -> objects
# ---------------------------------------------------------------------------

def build_network(opts):
    if not isinstance(opts, dict):
        raise ConfigError("network must be an object")
    if "file" in opts:
        return Network.load(opts["file"])
    if "symmetric" in opts:
        sym = opts["symmetric"]
        act = activation_from_dict(sym.get("activation", {"kind": "shifted_sigmoid", "alpha": 4.0}))
        return make_symmetric(_require(sym, "sizes"), act)
    raise ConfigError("network needs 'file' or 'symmetric'")


def build_dataset(opts):
    """(train, test) datasets."""
    name = _require(opts, "name")
    if name == "digits":
        return load_digits(opts.get("test_size", 0.25), opts.get("seed", 0))
    if name == "mackey_glass":
        fields = {k: opts[k] for k in MackeyGlassParams.__dataclass_fields__ if k in opts}
        series = mackey_glass(MackeyGlassParams(**fields), opts.get("length", 2100))
        data = windowize(series, opts.get("window", 100))
        n_train = opts.get("train", int(0.75 * len(data)))
        if not 0 < n_train < len(data):
            raise ConfigError(f"train split {n_train} out of range for {len(data)} windows")
        idx = np.arange(len(data))
        return data.subset(idx[:n_train], "train"), data.subset(idx[n_train:], "test")
    if name == "idx":
        tr = load_idx(*opts["train"], split="train") if "train" in opts else None
        te = load_idx(*opts["test"], split="test") if "test" in opts else None
        return tr, te
    raise ConfigError(f"unknown dataset {name!r}")


def build_inputs(cfg):
    opts = cfg.get("inputs") or {"grid": [0.0, 1.0]}
    if "grid" in opts:
        lo, hi = opts["grid"]
        return np.linspace(lo, hi, cfg["T"]).reshape(-1, 1)
    if "values" in opts:
        return np.atleast_2d(np.asarray(opts["values"], dtype=float))
    if "dataset" in opts:
        tr, te = build_dataset(opts["dataset"])
        data = te if opts.get("split", "test") == "test" else tr
        if data is None:
            raise ConfigError(f"dataset has no {opts.get('split', 'test')} split")
        X = data.inputs
        return X[: opts["count"]] if "count" in opts else X
    raise ConfigError("inputs needs 'grid', 'values' or 'dataset'")


def _noise(cfg):
    return NoiseConfig.from_dict(cfg.get("noise", {}))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2))


def _prediction_csv(path, mean, var, snr):
    fmt = lambda x: repr(float(x)) if np.isfinite(x) else ""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "neuron", "mean", "variance", "snr"])
        for t in range(mean.shape[0]):
            for i in range(mean.shape[1]):
                w.writerow([t, i + 1, fmt(mean[t, i]), fmt(var[t, i]), fmt(snr[t, i])])


def _predict(cfg, net, X, noise):
    """Analytic output (mean, variance, snr) arrays of shape (T, I_N) and extra artifacts."""
    if is_symmetric(net) and net.layers[0].size == 1:
        budgets = propagate_symmetric(net, X[:, 0], noise, cfg["order"])
        last = budgets[-1]
        col = lambda a: np.broadcast_to(np.asarray(a, dtype=float)[:, None], (X.shape[0], net.layers[-1].size))
        return col(last.mean_post), col(last.var_post), col(last.snr()), {"budgets": budgets}
    m, v, snr, S = predict_trained(net, X, noise, cfg["density"], cfg["order"])
    return m, v, snr, {"S": S}


def cmd_simulate(cfg, out):
    net = build_network(_require(cfg, "network"))
    X = build_inputs(cfg)
    est = estimate(net, X, _noise(cfg), cfg["K"], cfg["seed"], workers=cfg["workers"])
    files = []
    for n in range(1, net.depth + 1):
        path = out / f"layer_{n}.csv"
        write_layer_csv(est, n, path)
        files.append(path.name)
    return files


def cmd_predict(cfg, out):
    net = build_network(_require(cfg, "network"))
    X = build_inputs(cfg)
    m, v, snr, extra = _predict(cfg, net, X, _noise(cfg))
    _prediction_csv(out / "prediction.csv", m, v, snr)
    files = ["prediction.csv"]
    if "budgets" in extra:
        write_budget_csv(extra["budgets"], out / "budget.csv")
        files.append("budget.csv")
    else:
        with open(out / "sn.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "S_n"])
            w.writerows((n + 2, repr(s)) for n, s in enumerate(extra["S"]))
        files.append("sn.csv")
    return files


def cmd_compare(cfg, out):
    net = build_network(_require(cfg, "network"))
    X = build_inputs(cfg)
    noise = _noise(cfg)
    est = estimate(net, X, noise, cfg["K"], cfg["seed"], workers=cfg["workers"])
    m, v, snr, _ = _predict(cfg, net, X, noise)
    mc_mean = est.mean[-1]
    if cfg["metric"] == "snr":
        pred, ref = snr, est.snr(net.depth)
    else:
        pred, ref = v, est.variance[-1]
    rel = relative_errors(pred, ref)
    if "mean_window" in cfg:
        lo, hi = cfg["mean_window"]
        rel = np.where((mc_mean >= lo) & (mc_mean <= hi), rel, np.nan)
    write_comparison_csv(out / "comparison.csv", mc_mean, ref, pred, cfg["metric"])
    summary = summarize(rel)
    _write_json(out / "summary.json", summary)
    log.info("median relative error %.4f (p95 %.4f) over %d points", summary["median_rel_err"],
             summary["p95_rel_err"], summary["points"])
    return ["comparison.csv", "summary.json"]


def cmd_lamerey(cfg, out):
    """S_n of the symmetric accumulation map for each alpha (correlated forcing neglected)."""
    alphas = cfg.get("alphas", [1.5, 2.0, 3.0])
    depth = cfg.get("depth", 12)
    u = cfg.get("input", 0.5)
    noise = _noise(cfg)
    rows = []
    for alpha in alphas:
        net = make_symmetric([1] + [cfg.get("width", 100)] * (depth - 2) + [1], ShiftedSigmoid(float(alpha)))
        pre, _ = net.forward([[u]])
        means = [float(p[0, 0]) for p in pre[1:-1]]
        s2 = cfg.get("s2", noise.sigma2_add + noise.sigma2_mult * u * u)
        S = sn_sequence(ShiftedSigmoid(float(alpha)), means, s2, depth, cfg["order"])
        rows += [(float(alpha), n + 3, a, b) for n, (a, b) in enumerate(zip(S[:-1], S[1:]))]
    write_lamerey_csv(rows, out / "lamerey.csv")
    return ["lamerey.csv"]


def cmd_train(cfg, out):
    tcfg = dict(_require(cfg, "train"))
    tr, te = build_dataset(_require(tcfg, "dataset"))
    if tr is None:
        raise ConfigError("dataset has no training split")
    sizes = tcfg.get("sizes") or [tr.inputs.shape[1], 100, 100, tr.targets.shape[1]]
    hidden = activation_from_dict(tcfg.get("hidden", "sigmoid"))
    output = activation_from_dict(tcfg.get("output", "sigmoid"))
    known = set(TrainConfig.__dataclass_fields__)
    fields = {k: v for k, v in tcfg.items() if k in known}
    fields.setdefault("seed", cfg["seed"])
    tc = TrainConfig(**fields)
    net = init_network(sizes, hidden, output, seed=tc.seed)
    res = train(net, tr, tc, eval_data=te)
    res.net.save(out / "model.json")
    write_history_csv(res.history, out / "history.csv")
    stats = weight_stats(res.net).to_dict()
    stats["final"] = {"loss": res.history[-1][1], "error": res.history[-1][2]} if res.history else {}
    _write_json(out / "stats.json", stats)
    return ["model.json", "history.csv", "stats.json"]


def cmd_fit_density(cfg, out):
    net = build_network(_require(cfg, "network"))
    X = build_inputs(cfg)
    samples = collect_preactivations(net, X)
    layers = [cfg["layer"]] if "layer" in cfg else list(range(2, net.depth + 1))
    files = []
    for n in layers:
        if not 2 <= n <= net.depth:
            raise ConfigError(f"layer {n} out of range 2..{net.depth}")
        s = samples[n - 2]
        save_density(fit_density(s, cfg["density"], cfg.get("bins")), out / f"density_{n}.json")
        write_histogram_csv(s, out / f"histogram_{n}.csv", cfg.get("bins"))
        files += [f"density_{n}.json", f"histogram_{n}.csv"]
    return files


def cmd_mackey_glass(cfg, out):
    opts = cfg.get("mackey_glass", {})
    fields = {k: opts[k] for k in MackeyGlassParams.__dataclass_fields__ if k in opts}
    series = mackey_glass(MackeyGlassParams(**fields), opts.get("length", 2100), opts.get("rescale", True))
    with open(out / "series.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "x"])
        for i, x in enumerate(series):
            w.writerow([i, repr(float(x))])
    return ["series.csv"]


HANDLERS = {
    "simulate": cmd_simulate,
    "predict": cmd_predict,
    "compare": cmd_compare,
    "lamerey": cmd_lamerey,
    "train": cmd_train,
    "fit-density": cmd_fit_density,
    "mackey-glass": cmd_mackey_glass,
}


def run(command, cfg):
    """Execute one resolved config; returns the list of artifact file names."""
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files = HANDLERS[command](cfg, out)
    manifest = {
        "command": command,
        "config": cfg,
        "seed": cfg["seed"],
        "version": __version__,
        "backend": kernels.BACKEND,
        "artifacts": files,
        "seconds": round(time.perf_counter() - t0, 3),
    }
    _write_json(out / "manifest.json", manifest)
    return files


def main(argv=None):
    p = argparse.ArgumentParser(prog="noiseprop", description="noise propagation experiments")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--seed", type=int, help="master seed (u64)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=JSON", help="override a config key")
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = {}
        if args.config:
            cfg = json.loads(Path(args.config).read_text())
        cfg = resolve_config(args.command, cfg, args.out, args.seed, args.set)
        run(args.command, cfg)
    except (NumericalError, QuadratureError, FloatingPointError) as exc:
        print(f"noiseprop {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError, KeyError, TypeError, OSError) as exc:
        # json.JSONDecodeError and IDXFormatError are ValueErrors
        print(f"noiseprop {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
