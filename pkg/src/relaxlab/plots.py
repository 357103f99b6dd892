"""Figure rendering for experiment output directories.

CSV and JSON files are the data contract; these helpers post-process them
into PNG figures written next to the data, so a finished run directory is
readable at a glance.  Nothing here feeds back into diagnostics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def _save(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_fields(csv_path: Path) -> Path:
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(7, 3.2))
    ax.plot(data["x"], data["u"], label="u", lw=1.2)
    ax.plot(data["x"], data["v"], label="v", lw=1.2, ls="--")
    ax.set_xlabel("x")
    ax.set_ylabel("concentration")
    ax.set_ylim(-0.05, 1.05)
    ax.set_title(csv_path.stem)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, csv_path.with_suffix(".png"))


def render_run_series(csv_path: Path) -> Path:
    data = np.genfromtxt(csv_path, delimiter=",", names=True,
                         dtype=None, encoding="utf-8")
    t = np.atleast_1d(data["t"])
    fig, axes = plt.subplots(3, 1, figsize=(7, 6), sharex=True)
    axes[0].plot(t, np.atleast_1d(data["l1_u"]) + np.atleast_1d(data["l1_v"]), lw=1.0)
    axes[0].set_ylabel("L1(u)+L1(v)")
    axes[1].plot(t, np.atleast_1d(data["tv_u"]) + np.atleast_1d(data["tv_v"]), lw=1.0)
    axes[1].set_ylabel("TV(u)+TV(v)")
    axes[2].plot(t, np.atleast_1d(data["relax_mass_cum"]), lw=1.0)
    axes[2].set_ylabel("relax mass")
    axes[2].set_xlabel("t")
    axes[0].set_title(csv_path.stem)
    return _save(fig, csv_path.with_suffix(".png"))


def render_loglog(csv_path: Path, x_name: str, y_name: str, group=None) -> Path:
    data = np.genfromtxt(csv_path, delimiter=",", names=True,
                         dtype=None, encoding="utf-8")
    fig, ax = plt.subplots(figsize=(5, 4))
    x = np.atleast_1d(data[x_name]).astype(float)
    y = np.atleast_1d(data[y_name]).astype(float)
    if group is not None:
        labels = np.atleast_1d(data[group])
        for lab in dict.fromkeys(labels.tolist()):
            sel = labels == lab
            ax.loglog(x[sel], y[sel], "o-", label=str(lab))
        ax.legend(fontsize=8)
    else:
        ax.loglog(x, y, "o-")
    ax.set_xlabel(x_name)
    ax.set_ylabel(y_name)
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title(csv_path.stem)
    return _save(fig, csv_path.with_suffix(".png"))


def render_series(csv_path: Path, x_name: str, y_name: str,
                  logy: bool = False) -> Path:
    data = np.genfromtxt(csv_path, delimiter=",", names=True)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    plot = ax.semilogy if logy else ax.plot
    plot(np.atleast_1d(data[x_name]), np.atleast_1d(data[y_name]), lw=1.0)
    ax.set_xlabel(x_name)
    ax.set_ylabel(y_name)
    ax.set_title(csv_path.stem)
    return _save(fig, csv_path.with_suffix(".png"))


def render_experiment(out_dir) -> list:
    """Render every recognized CSV in an experiment directory."""
    out_dir = Path(out_dir)
    written = []
    for path in sorted(out_dir.glob("fields_*.csv")):
        written.append(render_fields(path))
    for path in sorted(out_dir.glob("run*.csv")):
        written.append(render_run_series(path))
    for path, args in (
        (out_dir / "equilibrium_errors.csv", dict(x_name="h", y_name="l1_error", group="ordering")),
        (out_dir / "mollified_distances.csv", dict(x_name="epsilon", y_name="l1_distance")),
        (out_dir / "relax_mass_sweep.csv", dict(x_name="mu", y_name="measure_mass")),
        (out_dir / "stiff_regime_errors.csv", dict(x_name="mu", y_name="l1_error", group="ordering")),
    ):
        if path.exists():
            written.append(render_loglog(path, **args))
    path = out_dir / "contraction_worst_pair.csv"
    if path.exists():
        written.append(render_series(path, "t", "l1_distance"))
    return written
