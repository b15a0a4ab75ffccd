"""Phenotype-recovery ROC and subgroup-size sweeps of treatment effects."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .coxph import EstimationError
from .data import Dataset
from .estimators import METRICS, EffectEstimate, effect

DEFAULT_FRACTIONS = (0.2, 0.4, 0.6, 0.8)


@dataclass(frozen=True, eq=False)
class RocCurve:
    thresholds: np.ndarray
    tpr: np.ndarray
    fpr: np.ndarray
    auc: float

    def to_dict(self) -> dict:
        return {
            "thresholds": [float(v) for v in self.thresholds],
            "tpr": [float(v) for v in self.tpr],
            "fpr": [float(v) for v in self.fpr],
            "auc": float(self.auc),
        }


def roc(scores, labels) -> RocCurve:
    """Threshold sweep over the distinct scores, highest first.

    Subjects with ``score >= threshold`` are called positive. The curve starts
    at (0, 0) with threshold +inf; AUC is the trapezoidal area, so tied scores
    count one half.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("roc needs both positive and negative labels")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tp = np.cumsum(y)[last]
    fp = np.cumsum(~y)[last]
    tpr = np.r_[0.0, tp / n_pos]
    fpr = np.r_[0.0, fp / n_neg]
    thresholds = np.r_[np.inf, s[last]]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))
    return RocCurve(thresholds, tpr, fpr, auc)


@dataclass
class SweepRow:
    fraction: float
    n_selected: int
    n_treated: int
    n_control: int
    n_events: int
    estimate: EffectEstimate | None
    note: str = ""

    @property
    def estimable(self) -> bool:
        return self.estimate is not None

    def cell(self, digits: int = 2) -> str:
        return self.estimate.format(digits) if self.estimate else "not estimable"


@dataclass
class SubgroupReport:
    method: str
    metric: str
    target_group: int
    rows: list[SweepRow] = field(default_factory=list)
    ci_method: str = "percentile bootstrap"

    def row(self, fraction: float) -> SweepRow:
        for r in self.rows:
            if math.isclose(r.fraction, fraction):
                return r
        raise KeyError(fraction)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "metric": self.metric,
            "target_group": self.target_group,
            "ci_method": self.ci_method,
            "rows": [
                {
                    "fraction": r.fraction,
                    "n_selected": r.n_selected,
                    "n_treated": r.n_treated,
                    "n_control": r.n_control,
                    "n_events": r.n_events,
                    "estimate": None if r.estimate is None else r.estimate.to_dict(),
                    "cell": r.cell(),
                    "note": r.note,
                }
                for r in self.rows
            ],
        }


def select_top(scores, fraction: float) -> np.ndarray:
    """Indices of the ``ceil(fraction * n)`` highest scores; ties go to the lower index."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    scores = np.asarray(scores, dtype=float)
    k = math.ceil(round(fraction * len(scores), 9))
    return np.sort(np.argsort(-scores, kind="stable")[:k])


def subgroup_sweep(
    scorer: Callable[[np.ndarray], np.ndarray],
    ds: Dataset,
    target_group: int,
    fractions: Sequence[float] = DEFAULT_FRACTIONS,
    metric: str = "hazard_ratio",
    horizon: float | None = None,
    *,
    method: str = "",
    n_boot: int = 200,
    seed: int = 0,
) -> SubgroupReport:
    """Treatment effect inside the top-``q`` subgroup by ``scorer(ds.covariates)``.

    ``scorer`` must already be oriented towards ``target_group`` (higher means
    more likely to belong to it). Subgroups in which the effect cannot be
    estimated are kept as flagged rows.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    scores = np.asarray(scorer(ds.covariates), dtype=float).reshape(-1)
    if len(scores) != ds.n:
        raise ValueError("scorer returned the wrong number of scores")
    report = SubgroupReport(method, metric, int(target_group))
    for q in fractions:
        idx = select_top(scores, q)
        sub = ds.subset(idx)
        n_t = int(sub.treatment.sum())
        row = SweepRow(float(q), sub.n, n_t, sub.n - n_t, int(sub.event.sum()), None)
        if n_t == 0 or n_t == sub.n:
            row.note = "subgroup is missing a treatment arm"
        elif not sub.event.any():
            row.note = "subgroup has no events"
        else:
            try:
                row.estimate = effect(sub, metric, horizon, n_boot, seed)
            except EstimationError as exc:
                row.note = str(exc)
        report.rows.append(row)
    return report


# ---------------------------------------------------------------------------
# output


def write_reports_csv(reports: Sequence[SubgroupReport], path) -> None:
    """One row per method x fraction."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["method", "target_group", "metric", "fraction", "n_selected", "n_treated",
             "n_control", "n_events", "point", "ci_low", "ci_high", "horizon", "cell", "note"]
        )
        for rep in reports:
            for r in rep.rows:
                e = r.estimate
                w.writerow([
                    rep.method, rep.target_group, rep.metric, r.fraction, r.n_selected,
                    r.n_treated, r.n_control, r.n_events,
                    "" if e is None else repr(e.point),
                    "" if e is None else repr(e.ci_low),
                    "" if e is None else repr(e.ci_high),
                    "" if e is None or e.horizon is None else repr(e.horizon),
                    r.cell(), r.note,
                ])


def write_reports_json(reports: Sequence[SubgroupReport], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps([r.to_dict() for r in reports], indent=2) + "\n", encoding="utf-8")


def table(reports: Sequence[SubgroupReport], digits: int = 2) -> str:
    """Methods down the side, subgroup fractions across, ``point, (lo, hi)`` cells."""
    if not reports:
        return ""
    fractions = [r.fraction for r in reports[0].rows]
    head = ["method"] + [f"{round(100 * q)}%" for q in fractions]
    lines = [head] + [[rep.method] + [r.cell(digits) for r in rep.rows] for rep in reports]
    widths = [max(len(line[j]) for line in lines) for j in range(len(head))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(line, widths)).rstrip() for line in lines)
