"""Matplotlib renderers for the CLI report paths.

Figures are written next to the delimited output with pinned metadata so a
rerun with the same seed is byte-identical (they are digest-listed in the run
manifest like every other artifact).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 110, "metadata": {"Software": "gevreyns"}}


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_diagnostics(diag: dict, path: str | Path) -> Path:
    """Energy and recorded norms against time (semilog-y)."""
    t = np.asarray(diag["t"])
    fig, ax = plt.subplots(figsize=(6.0, 3.8))
    for name, series in diag.items():
        if name == "t":
            continue
        series = np.asarray(series, dtype=float)
        if np.all(series > 0):
            ax.semilogy(t, series, label=name, lw=1.2)
        else:
            ax.plot(t, series, label=name, lw=1.2)
    ax.set_xlabel("t")
    ax.set_title("solve diagnostics")
    ax.legend(fontsize=7, loc="best")
    return _finish(fig, Path(path))


def plot_picard(distances, ratios, path: str | Path) -> Path:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7.2, 3.2))
    if distances:
        ax1.semilogy(range(1, len(distances) + 1), distances, "o-", lw=1.2)
    ax1.set_xlabel("iterate")
    ax1.set_ylabel("metric distance")
    ax1.set_title("Picard distances")
    if ratios:
        ax2.plot(range(2, len(ratios) + 2), ratios, "s-", lw=1.2)
    ax2.axhline(0.5, color="k", ls="--", lw=0.8)
    ax2.set_xlabel("iterate")
    ax2.set_ylabel("ratio")
    ax2.set_title("contraction ratios (1/2 line)")
    return _finish(fig, Path(path))


def plot_norms(labels, values, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    pos = np.arange(len(labels))
    ax.bar(pos, values, width=0.6)
    ax.set_xticks(pos)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=7)
    ax.set_yscale("log")
    ax.set_ylabel("norm value")
    ax.set_title("requested norms")
    return _finish(fig, Path(path))


def plot_verify(reports, path: str | Path) -> Path:
    """Per-id strip plot of sample ratios with the empirical constant marked."""
    fig, ax = plt.subplots(figsize=(7.0, 3.8))
    for i, rep in enumerate(reports):
        ratios = np.asarray(rep.per_sample_ratio, dtype=float)
        ratios = ratios[np.isfinite(ratios) & (ratios > 0)]
        if ratios.size:
            x = i + 0.8 * (np.arange(ratios.size) / max(1, ratios.size - 1) - 0.5) * 0.5
            ax.semilogy(x, ratios, ".", ms=2.5, alpha=0.6)
        ax.semilogy([i], [rep.C_emp], "k_", ms=14)
    ax.set_xticks(range(len(reports)))
    ax.set_xticklabels([r.inequality_id for r in reports], rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("LHS/RHS ratio")
    ax.set_title("verification ratios (bar = C_emp)")
    return _finish(fig, Path(path))


def plot_radius(fits, exponent: float, path: str | Path) -> Path:
    ts = np.array([f.t for f in fits])
    rs = np.array([f.radius for f in fits])
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.loglog(ts, rs, "o", label="fitted radius")
    if len(ts) >= 2 and np.all(rs > 0):
        anchor = rs[0] / ts[0] ** exponent
        ax.loglog(ts, anchor * ts**exponent, "-", lw=1.0, label=f"slope {exponent:.3f}")
    ax.set_xlabel("t")
    ax.set_ylabel("analyticity radius (|k|_1 metric)")
    ax.legend(fontsize=8)
    ax.set_title("radius growth")
    return _finish(fig, Path(path))
