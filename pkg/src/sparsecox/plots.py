"""SVG figures: ROC curves, Kaplan-Meier curves per group, effect vs subgroup size."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .data import Dataset  # noqa: E402
from .estimators import kaplan_meier  # noqa: E402
from .evaluation import RocCurve, SubgroupReport  # noqa: E402

# fixed hash salt and no date metadata keep reruns byte-identical
plt.rcParams["svg.hashsalt"] = "sparsecox"
_META = {"Date": None, "Creator": None}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_roc(curves: Mapping[str, RocCurve], path) -> Path:
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot([0, 1], [0, 1], color="0.7", lw=1, ls="--")
    for label, c in curves.items():
        ax.plot(c.fpr, c.tpr, lw=1.5, label=f"{label} (AUC {c.auc:.3f})")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.legend(loc="lower right", fontsize=8)
    return _save(fig, path)


def plot_km_by_group(ds: Dataset, groups: np.ndarray, path, labels: Sequence[int] | None = None) -> Path:
    """Kaplan-Meier curves per (group, arm), one panel per group."""
    labels = list(labels) if labels is not None else sorted(set(int(g) for g in groups))
    fig, axes = plt.subplots(1, len(labels), figsize=(4 * len(labels), 3.5), sharey=True, squeeze=False)
    for ax, k in zip(axes[0], labels):
        for arm, style in ((0, "--"), (1, "-")):
            mask = (groups == k) & (ds.treatment == arm)
            if not mask.any():
                continue
            km = kaplan_meier(ds.subset(mask))
            t = np.r_[0.0, km.breakpoints]
            s = np.r_[1.0, km.values]
            ax.step(t, s, where="post", ls=style, label="treated" if arm else "control")
        ax.set_title(f"group {k:+d}" if k else "group 0")
        ax.set_xlabel("time")
        ax.set_ylim(0, 1.02)
    axes[0][0].set_ylabel("event-free survival")
    axes[0][0].legend(fontsize=8)
    return _save(fig, path)


def plot_effect_vs_size(reports: Sequence[SubgroupReport], path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for rep in reports:
        rows = [r for r in rep.rows if r.estimate is not None]
        if not rows:
            continue
        q = np.array([r.fraction for r in rows])
        pt = np.array([r.estimate.point for r in rows])
        lo = np.array([r.estimate.ci_low for r in rows])
        hi = np.array([r.estimate.ci_high for r in rows])
        ax.errorbar(q, pt, yerr=[pt - lo, hi - pt], marker="o", capsize=3, label=rep.method)
    if reports:
        ax.set_ylabel(reports[0].metric.replace("_", " "))
    ax.set_xlabel("subgroup size (fraction)")
    ax.legend(fontsize=8)
    return _save(fig, path)
