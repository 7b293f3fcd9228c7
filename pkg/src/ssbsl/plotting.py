"""Figure rendering for experiment reports (matplotlib, file output only)."""
from __future__ import annotations

import csv
import io
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .bayes import ClassPosteriorState, class_posterior  # noqa: E402
from .data import TrialDataset, atomic_write  # noqa: E402
from .harness import ExperimentReport  # noqa: E402

MODE_STYLE = {
    "ss": dict(color="tab:red", marker="o", label="GCM + SS-BSL"),
    "fs": dict(color="tab:green", marker="s", label="GCM + FS-BSL"),
    "frozen": dict(color="tab:blue", marker="^", label="GCM (frozen)"),
}

RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.spines.top": False,
    "axes.spines.right": False,
}

# PNG metadata would otherwise embed the matplotlib version string
_SAVE_KW = dict(format="png", metadata={"Software": None})


def _style(mode: str) -> dict:
    return MODE_STYLE.get(mode, dict(label=mode))


def _save(fig, path: Path) -> None:
    buf = io.BytesIO()
    fig.savefig(buf, bbox_inches="tight", **_SAVE_KW)
    plt.close(fig)
    atomic_write(path, buf.getvalue())


def mean_accuracy_by_trial(reports: list[ExperimentReport]) -> tuple[list[int], dict[str, list[float | None]]]:
    """Accuracy per (mode, trial), averaged over reports."""
    trials = sorted({r.trial for rep in reports for r in rep.records})
    modes: list[str] = []
    for rep in reports:
        modes += [m for m in rep.modes if m not in modes]
    table: dict[str, list[float | None]] = {}
    for mode in modes:
        col = []
        for t in trials:
            vals = [r.accuracy for rep in reports for r in rep.for_mode(mode)
                    if r.trial == t and r.accuracy is not None]
            col.append(float(np.mean(vals)) if vals else None)
        table[mode] = col
    return trials, table


def plotdata_csvs(reports: list[ExperimentReport]) -> dict[str, str]:
    """CSV text for the per-trial accuracy curve and the per-mode distribution."""
    trials, table = mean_accuracy_by_trial(reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", *table])
    for i, t in enumerate(trials):
        w.writerow([t, *("" if table[m][i] is None else repr(table[m][i]) for m in table)])
    by_trial = buf.getvalue()

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["run", "mode", "trial", "accuracy"])
    for k, rep in enumerate(reports):
        for r in rep.records:
            if r.accuracy is not None:
                w.writerow([k, r.mode, r.trial, repr(r.accuracy)])
    return {"accuracy_by_trial.csv": by_trial, "accuracy_distribution.csv": buf.getvalue()}


def plot_accuracy_by_trial(reports: list[ExperimentReport], path: str | Path) -> None:
    trials, table = mean_accuracy_by_trial(reports)
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(4.5, 2.8))
        for mode, col in table.items():
            y = [np.nan if v is None else 100.0 * v for v in col]
            ax.plot(trials, y, lw=1.2, ms=3.5, **_style(mode))
        ax.set_xlabel("Trial")
        ax.set_ylabel("Accuracy [%]")
        ax.set_xticks(trials)
        ax.set_ylim(0, 102)
        ax.legend(frameon=False, loc="lower left")
        _save(fig, Path(path))


def plot_accuracy_boxplot(reports: list[ExperimentReport], path: str | Path) -> None:
    _, table = mean_accuracy_by_trial(reports)
    modes = list(table)
    data = [
        100.0 * np.array([r.accuracy for rep in reports for r in rep.for_mode(m) if r.accuracy is not None])
        for m in modes
    ]
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=(3.8, 2.8))
        ax.boxplot(data, showmeans=True, widths=0.5,
                   meanprops=dict(marker="^", markerfacecolor="k", markeredgecolor="k", markersize=4))
        ax.set_xticks(range(1, len(modes) + 1), [_style(m)["label"] for m in modes], rotation=15)
        ax.set_ylabel("Accuracy [%]")
        _save(fig, Path(path))


def plot_predictive_snapshots(
    states: list[ClassPosteriorState],
    trials: list[TrialDataset],
    path: str | Path,
    title: str = "",
    grid_points: int = 160,
) -> None:
    """Scatter of each trial with the pre-trial class posterior as background.

    Only for 2-D features. Class 0 is shaded red and class 1 blue; with more
    classes the background shows the confidence of the argmax class.
    """
    if states[0].dim != 2:
        raise ValueError("predictive snapshots need 2-D features")
    allx = np.vstack([t.features for t in trials])
    lo, hi = allx.min(axis=0) - 1.0, allx.max(axis=0) + 1.0
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], grid_points), np.linspace(lo[1], hi[1], grid_points))
    grid = np.column_stack([gx.ravel(), gy.ravel()])
    n = len(trials)
    ncols = min(n, 5)
    nrows = int(np.ceil(n / ncols))
    with plt.rc_context(RC):
        fig, axes = plt.subplots(nrows, ncols, figsize=(2.0 * ncols, 1.9 * nrows),
                                 sharex=True, sharey=True, squeeze=False)
        for ax in axes.ravel()[n:]:
            ax.set_visible(False)
        for ax, state, trial in zip(axes.ravel(), states, trials):
            probs = class_posterior(state, grid)
            if state.num_classes == 2:
                img = probs[:, 0].reshape(gx.shape)
                ax.contourf(gx, gy, img, levels=np.linspace(0, 1, 11), cmap="coolwarm", alpha=0.6)
            else:
                img = probs.max(axis=1).reshape(gx.shape)
                ax.contourf(gx, gy, img, levels=10, cmap="Greys", alpha=0.6)
            colors = np.array(["tab:red", "tab:blue", "tab:green", "tab:orange", "tab:purple", "tab:brown"])
            lab = trial.labels if trial.labels is not None else np.zeros(len(trial), dtype=int)
            ax.scatter(trial.features[:, 0], trial.features[:, 1], s=1.5,
                       c=colors[lab % len(colors)], linewidths=0)
            ax.set_title(f"t = {trial.trial_id}", fontsize=8)
        if title:
            fig.suptitle(title, fontsize=9)
        _save(fig, Path(path))


def write_report_outputs(reports: list[ExperimentReport], out_dir: str | Path, figures: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    for name, text in plotdata_csvs(reports).items():
        p = out_dir / "plotdata" / name
        atomic_write(p, text)
        written.append(p)
    if figures:
        for name, fn in (("accuracy_by_trial.png", plot_accuracy_by_trial),
                         ("accuracy_boxplot.png", plot_accuracy_boxplot)):
            p = out_dir / "figures" / name
            fn(reports, p)
            written.append(p)
    return written
