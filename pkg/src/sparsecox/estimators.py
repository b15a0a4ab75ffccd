"""Nonparametric survival curves and arm-level treatment-effect metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coxph import EstimationError, fit_cox
from .data import Dataset

METRICS = ("hazard_ratio", "risk_difference", "rmst_difference")


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Right-continuous piecewise-constant function of time.

    ``f(t)`` is ``values[j]`` for the last breakpoint ``<= t`` and
    ``value_before_first`` before the first breakpoint. Past the last
    breakpoint the last value is carried forward.
    """

    breakpoints: np.ndarray
    values: np.ndarray
    value_before_first: float = 0.0

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if b.shape != v.shape:
            raise ValueError("breakpoints and values must have the same length")
        if len(b) > 1 and np.any(np.diff(b) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "value_before_first", float(self.value_before_first))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if not len(self.values):
            out = np.full(t.shape, self.value_before_first)
        else:
            idx = np.searchsorted(self.breakpoints, t, side="right") - 1
            out = np.where(idx >= 0, self.values[np.clip(idx, 0, None)], self.value_before_first)
        return out if out.ndim else float(out)

    def jumps(self) -> np.ndarray:
        """Increments at each breakpoint."""
        return np.diff(np.concatenate([[self.value_before_first], self.values]))

    def to_dict(self) -> dict:
        return {
            "breakpoints": [float(x) for x in self.breakpoints],
            "values": [float(x) for x in self.values],
            "value_before_first": self.value_before_first,
        }

    @classmethod
    def from_dict(cls, d) -> "StepFunction":
        return cls(d["breakpoints"], d["values"], d.get("value_before_first", 0.0))


def _event_table(time, event):
    """Distinct event times with death counts and risk-set sizes."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event)
    uniq = np.unique(time[event == 1])
    ts = np.sort(time)
    at_risk = len(ts) - np.searchsorted(ts, uniq, side="left")
    deaths = np.searchsorted(np.sort(time[event == 1]), uniq, side="right") - np.searchsorted(
        np.sort(time[event == 1]), uniq, side="left"
    )
    return uniq, deaths.astype(float), at_risk.astype(float)


def kaplan_meier(ds: Dataset) -> StepFunction:
    """Product-limit survival estimate, stepping only at event times."""
    if ds.n == 0:
        raise ValueError("kaplan_meier needs a non-empty dataset")
    t, d, r = _event_table(ds.time, ds.event)
    return StepFunction(t, np.cumprod(1.0 - d / r), 1.0)


def nelson_aalen(ds: Dataset) -> StepFunction:
    """Nelson-Aalen cumulative hazard (deaths over number at risk, summed)."""
    if ds.n == 0:
        raise ValueError("nelson_aalen needs a non-empty dataset")
    t, d, r = _event_table(ds.time, ds.event)
    return StepFunction(t, np.cumsum(d / r), 0.0)


def rmst(curve: StepFunction, tau: float) -> float:
    """Exact area under a survival step function on ``[0, tau]``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    b = curve.breakpoints
    inside = b < tau
    edges = np.concatenate([[0.0], b[inside], [tau]])
    heights = np.concatenate([[curve.value_before_first], curve.values[inside]])
    return float(np.sum(heights * np.diff(edges)))


@dataclass(frozen=True)
class EffectEstimate:
    metric: str
    point: float
    ci_low: float
    ci_high: float
    horizon: float | None = None
    extrapolated: bool = False

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")

    def format(self, digits: int = 2) -> str:
        """Table cell in the style ``1.06, (1.01, 1.12)``."""
        f = f"{{:.{digits}f}}"
        return f"{f.format(self.point)}, ({f.format(self.ci_low)}, {f.format(self.ci_high)})"

    def to_dict(self) -> dict:
        out = {
            "metric": self.metric,
            "point": self.point,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "horizon": self.horizon,
        }
        if self.extrapolated:
            out["extrapolated"] = True
        return out

    @classmethod
    def from_dict(cls, d) -> "EffectEstimate":
        return cls(d["metric"], d["point"], d["ci_low"], d["ci_high"], d.get("horizon"),
                   bool(d.get("extrapolated", False)))


def _check_arms(ds: Dataset):
    n_treated = int(ds.treatment.sum())
    if n_treated == 0 or n_treated == ds.n:
        raise EstimationError(
            f"both arms are required (treated={n_treated}, control={ds.n - n_treated})"
        )


def log_hazard_ratio(ds: Dataset) -> float:
    """Univariate Cox coefficient on the treatment indicator."""
    _check_arms(ds)
    if not ds.event.any():
        raise EstimationError("zero events: hazard ratio is undefined")
    fit = fit_cox(ds.treatment.astype(float), ds.time, ds.event)
    if not fit.converged:
        raise EstimationError("Newton iterations for the treatment hazard ratio did not converge")
    return float(fit.coef[0])


def _arm_curves(ds: Dataset):
    _check_arms(ds)
    treated = ds.subset(ds.treatment == 1)
    control = ds.subset(ds.treatment == 0)
    return kaplan_meier(treated), kaplan_meier(control), treated, control


def _risk_difference_point(ds: Dataset, horizon: float) -> float:
    km1, km0, _, _ = _arm_curves(ds)
    return float((1.0 - km1(horizon)) - (1.0 - km0(horizon)))


def _rmst_difference_point(ds: Dataset, tau: float) -> float:
    km1, km0, _, _ = _arm_curves(ds)
    return rmst(km1, tau) - rmst(km0, tau)


def bootstrap(
    ds: Dataset,
    statistic: Callable[[Dataset], float],
    n_boot: int = 200,
    seed: int = 0,
    level: float = 0.95,
) -> tuple[float, float]:
    """Percentile interval from subject-level resampling.

    Replicate ``b`` draws from its own child of ``SeedSequence(seed)``, so the
    interval does not depend on evaluation order. Replicates on which the
    statistic cannot be computed (a missing arm, no events) are dropped.
    """
    children = np.random.SeedSequence(seed).spawn(n_boot)
    stats = []
    for child in children:
        idx = np.random.default_rng(child).integers(0, ds.n, ds.n)
        try:
            v = statistic(ds.subset(idx))
        except EstimationError:
            continue
        if np.isfinite(v):
            stats.append(v)
    if not stats:
        raise EstimationError("no bootstrap replicate was estimable")
    alpha = (1.0 - level) / 2
    lo, hi = np.quantile(stats, [alpha, 1 - alpha])
    return float(lo), float(hi)


def _estimate(metric, point, interval, horizon=None, extrapolated=False):
    lo, hi = interval
    # percentile intervals need not cover the point; widen so they always do
    return EffectEstimate(metric, point, min(lo, point), max(hi, point), horizon, extrapolated)


def treatment_hr(ds: Dataset, n_boot: int = 200, seed: int = 0) -> EffectEstimate:
    point = float(np.exp(log_hazard_ratio(ds)))
    ci = bootstrap(ds, lambda b: float(np.exp(log_hazard_ratio(b))), n_boot, seed)
    return _estimate("hazard_ratio", point, ci)


def _extrapolated(ds: Dataset, horizon: float) -> bool:
    return any(horizon > ds.time[ds.treatment == a].max() for a in (0, 1))


def risk_difference(ds: Dataset, horizon: float, n_boot: int = 200, seed: int = 0) -> EffectEstimate:
    """Treated minus control cumulative incidence at ``horizon``.

    Negative values mean fewer events under treatment.
    """
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    point = _risk_difference_point(ds, horizon)
    ci = bootstrap(ds, lambda b: _risk_difference_point(b, horizon), n_boot, seed)
    return _estimate("risk_difference", point, ci, horizon, _extrapolated(ds, horizon))


def rmst_difference(ds: Dataset, tau: float, n_boot: int = 200, seed: int = 0) -> EffectEstimate:
    """Treated minus control restricted mean survival time up to ``tau``."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    point = _rmst_difference_point(ds, tau)
    ci = bootstrap(ds, lambda b: _rmst_difference_point(b, tau), n_boot, seed)
    return _estimate("rmst_difference", point, ci, tau, _extrapolated(ds, tau))


def effect(ds: Dataset, metric: str, horizon: float | None = None, n_boot: int = 200,
           seed: int = 0) -> EffectEstimate:
    if metric == "hazard_ratio":
        return treatment_hr(ds, n_boot, seed)
    if horizon is None:
        raise ValueError(f"{metric} needs a horizon")
    if metric == "risk_difference":
        return risk_difference(ds, horizon, n_boot, seed)
    if metric == "rmst_difference":
        return rmst_difference(ds, horizon, n_boot, seed)
    raise ValueError(f"unknown metric {metric!r}")

