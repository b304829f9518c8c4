"""Joining analytic predictions with Monte-Carlo estimates."""
from __future__ import annotations

import csv

import numpy as np


def relative_errors(pred, ref):
    """|pred - ref| / |ref| elementwise; NaN where either side is undefined or ref is 0."""
    pred = np.asarray(pred, dtype=float)
    ref = np.asarray(ref, dtype=float)
    out = np.full(np.broadcast(pred, ref).shape, np.nan)
    ok = np.isfinite(pred) & np.isfinite(ref) & (ref != 0)
    out[ok] = np.abs(pred[ok] - ref[ok]) / np.abs(ref[ok])
    return out


def summarize(rel):
    rel = np.asarray(rel, dtype=float).ravel()
    rel = rel[np.isfinite(rel)]
    if rel.size == 0:
        raise ValueError("no comparable points")
    return {"median_rel_err": float(np.median(rel)), "p95_rel_err": float(np.percentile(rel, 95)),
            "points": int(rel.size)}


def write_comparison_csv(path, mc_mean, mc_value, pred_value, what="snr"):
    """Columns t, neuron, mc_mean, mc_<what>, pred_<what>, rel_err."""
    mc_mean = np.atleast_2d(mc_mean)
    mc_value = np.atleast_2d(mc_value)
    pred_value = np.broadcast_to(pred_value, mc_value.shape)
    rel = relative_errors(pred_value, mc_value)
    fmt = lambda x: repr(float(x)) if np.isfinite(x) else ""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "neuron", "mc_mean", f"mc_{what}", f"pred_{what}", "rel_err"])
        for t in range(mc_value.shape[0]):
            for i in range(mc_value.shape[1]):
                w.writerow([t, i + 1, fmt(mc_mean[t, i]), fmt(mc_value[t, i]), fmt(pred_value[t, i]), fmt(rel[t, i])])
