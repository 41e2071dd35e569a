"""Static SVG figures for experiment reports.

Matplotlib with the Agg backend; every function writes one file and
returns its path.  Plots are diagnostics only — the CSV tables are the
contract surface.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _finish(fig, out_dir, name):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    fig.savefig(path, format="svg", bbox_inches="tight")
    plt.close(fig)
    return path


def cf_overlay(thetas, curves, labels, out_dir, name="cf_overlay.svg", title=""):
    """Overlay real characteristic functions over a theta grid."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for vals, label in zip(curves, labels):
        ax.plot(thetas, vals, label=label, lw=1.2)
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"Re $\varphi(\theta)$")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    return _finish(fig, out_dir, name)


def loglog_fit(x, y, slope, intercept, target, out_dir, name="loglog.svg", title=""):
    """Data on log-log axes with the fitted line and the target slope."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ax.loglog(x, y, "o", ms=3, label="data")
    xs = np.asarray(x, dtype=float)
    ax.loglog(
        xs,
        np.exp(intercept) * xs**slope,
        "-",
        lw=1.0,
        label=f"fit: slope {slope:.3f} (target {target:.3f})",
    )
    ax.set_xlabel("n")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    return _finish(fig, out_dir, name)


def sample_paths(grid, paths, out_dir, name="paths.svg", title="", n_show=20):
    """A handful of realizations from an ensemble."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    for row in np.asarray(paths)[:n_show]:
        ax.plot(grid, row, lw=0.7, alpha=0.7)
    ax.set_xlabel("t")
    if title:
        ax.set_title(title, fontsize=10)
    return _finish(fig, out_dir, name)


def hist_overlay(samples, labels, out_dir, name="hist.svg", title="", bins=80,
                 clip=None):
    """Overlaid normalized histograms of two or more samples."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    data = [np.asarray(s, dtype=float) for s in samples]
    if clip is not None:
        data = [d[np.abs(d) <= clip] for d in data]
    lo = min(d.min() for d in data)
    hi = max(d.max() for d in data)
    edges = np.linspace(lo, hi, bins + 1)
    for d, label in zip(data, labels):
        ax.hist(d, bins=edges, density=True, histtype="step", label=label)
    ax.set_ylabel("density")
    if title:
        ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    return _finish(fig, out_dir, name)
