"""Sparse interaction baselines: cox-int, bin-int and cox-tlr.

Each produces a linear phenotyping score ``G(x)`` fitted by the same
proximal-gradient solver as the mixture model's gating update (lasso is the
group lasso with singleton groups). Losses are averaged over subjects, so
``l1`` is on the usual per-observation scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coxph import EstimationError, breslow_baseline, fit_cox, partial_loglik
from .data import Dataset
from .prox import proximal_gradient, soft_threshold

KINDS = ("cox_int", "bin_int", "cox_tlr")
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class PhenotypeScorer:
    """A fitted linear phenotyping rule.

    ``score`` returns ``G(x)`` as the method defines it. ``benefit_score`` is
    oriented so that larger means more benefit from treatment:

    * cox_int: ``G = theta.x`` enters the treated log hazard, so benefit is ``-G``.
    * bin_int: ``G = theta.x`` enters the treated log-odds of surviving past
      the horizon, so benefit is ``G``.
    * cox_tlr: ``G`` is the logit of "treated survival exceeds control
      survival", so benefit is ``G``.
    """

    kind: str
    coefficients: dict = field(default_factory=dict)
    horizon: float | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scorer kind {self.kind!r}")

    @property
    def theta(self) -> np.ndarray:
        return np.asarray(self.coefficients["theta"], dtype=float)

    def score(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        g = x @ self.theta
        if self.kind == "cox_tlr":
            g = g + float(self.coefficients["intercept"])
        return g

    def benefit_score(self, x) -> np.ndarray:
        g = self.score(x)
        return -g if self.kind == "cox_int" else g

    @property
    def n_active(self) -> int:
        return int(np.count_nonzero(self.theta))

    def to_dict(self) -> dict:
        coefs = {k: (np.asarray(v).tolist() if np.ndim(v) else float(v)) for k, v in self.coefficients.items()}
        return {"kind": self.kind, "coefficients": coefs, "horizon": self.horizon, "info": dict(self.info)}

    @classmethod
    def from_dict(cls, d) -> "PhenotypeScorer":
        return cls(d["kind"], dict(d["coefficients"]), d.get("horizon"), dict(d.get("info", {})))


def _l1_prox(n_free: int):
    """Soft-threshold every coordinate after the first ``n_free``."""

    def prox(v, t, lam):
        out = v.copy()
        out[n_free:] = soft_threshold(v[n_free:], t * lam)
        return out

    return prox


def _fit_l1(loss_grad, x0, n_free, l1, max_iter=20000, tol=1e-10):
    prox = _l1_prox(n_free)
    coef, _ = proximal_gradient(
        loss_grad,
        x0,
        prox=lambda v, t: prox(v, t, l1),
        penalty=lambda v: l1 * float(np.sum(np.abs(v[n_free:]))),
        step=1.0,
        max_iter=max_iter,
        tol=tol,
    )
    return coef


# ---------------------------------------------------------------------------
# cox-int


def interaction_design(ds: Dataset) -> np.ndarray:
    """``[x, a * x]``: prognostic columns then treatment interactions."""
    return np.hstack([ds.covariates, ds.treatment[:, None] * ds.covariates])


def cox_int_loss(coef, ds: Dataset) -> tuple[float, np.ndarray]:
    """Mean negative partial log-likelihood of ``beta.x + a * theta.x`` and its gradient."""
    ll, g = partial_loglik(coef, interaction_design(ds), ds.time, ds.event, hessian=False)
    return -ll / ds.n, -g / ds.n


def fit_cox_int(ds: Dataset, l1: float) -> PhenotypeScorer:
    if not ds.event.any():
        raise EstimationError("cox-int: no events")
    d = ds.d
    z = interaction_design(ds)
    # start from the prognostic-only Cox fit so large l1 returns it exactly
    try:
        beta0 = fit_cox(ds.covariates, ds.time, ds.event).coef
    except EstimationError:
        beta0 = np.zeros(d)

    def loss_grad(c):
        ll, g = partial_loglik(c, z, ds.time, ds.event, hessian=False)
        return -ll / ds.n, -g / ds.n

    coef = _fit_l1(loss_grad, np.concatenate([beta0, np.zeros(d)]), d, l1)
    return PhenotypeScorer("cox_int", {"beta": coef[:d], "theta": coef[d:]}, None, {"l1": l1})


# ---------------------------------------------------------------------------
# logistic pieces


def logistic_loss(coef, design: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean negative Bernoulli log-likelihood under a logit link, and its gradient."""
    eta = design @ coef
    loss = float(np.mean(np.logaddexp(0.0, eta) - y * eta))
    p = 0.5 * (1.0 + np.tanh(0.5 * eta))
    return loss, design.T @ (p - y) / len(y)


def horizon_labels(ds: Dataset, horizon: float) -> tuple[np.ndarray, np.ndarray]:
    """``(keep, y)``: drop records censored before ``horizon``; ``y = 1{u > horizon}``."""
    keep = ~((ds.event == 0) & (ds.time < horizon))
    y = (ds.time > horizon).astype(float)
    return keep, y


def fit_bin_int(ds: Dataset, horizon: float, l1: float) -> PhenotypeScorer:
    """Logistic model for surviving past ``horizon`` with lasso treatment interactions."""
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    keep, y = horizon_labels(ds, horizon)
    y = y[keep]
    n_pos, n_neg = int(y.sum()), int(len(y) - y.sum())
    if n_pos == 0 or n_neg == 0:
        raise EstimationError(
            f"bin-int: one outcome class is empty after exclusion (survived={n_pos}, failed={n_neg})"
        )
    sub = ds.subset(keep)
    d = ds.d
    design = np.hstack([np.ones((sub.n, 1)), interaction_design(sub)])
    coef = _fit_l1(lambda c: logistic_loss(c, design, y), np.zeros(1 + 2 * d), 1 + d, l1)
    return PhenotypeScorer(
        "bin_int",
        {"intercept": float(coef[0]), "beta": coef[1 : 1 + d], "theta": coef[1 + d :]},
        horizon,
        {"l1": l1, "n_excluded": int((~keep).sum())},
    )


# ---------------------------------------------------------------------------
# cox-tlr


@dataclass
class ArmModel:
    coef: np.ndarray
    times: np.ndarray
    cumhaz: np.ndarray

    def survival(self, x, t: float) -> np.ndarray:
        idx = np.searchsorted(self.times, t, side="right") - 1
        lam = self.cumhaz[idx] if idx >= 0 else 0.0
        return np.exp(-lam * np.exp(np.asarray(x, dtype=float) @ self.coef))


def fit_arm(ds: Dataset) -> ArmModel:
    if not ds.event.any():
        raise EstimationError("cox-tlr: an arm has no events")
    res = fit_cox(ds.covariates, ds.time, ds.event)
    times, cumhaz = breslow_baseline(res.coef, ds.covariates, ds.time, ds.event)
    return ArmModel(res.coef, times, cumhaz)


def tlr_labels(ds: Dataset, horizon: float) -> tuple[np.ndarray, ArmModel, ArmModel]:
    """``1{f_treated(x, h) > f_control(x, h)}`` with ties (within 1e-12) labelled 0."""
    treated = fit_arm(ds.subset(ds.treatment == 1))
    control = fit_arm(ds.subset(ds.treatment == 0))
    diff = treated.survival(ds.covariates, horizon) - control.survival(ds.covariates, horizon)
    return (diff > TIE_TOLERANCE).astype(float), treated, control


def fit_cox_tlr(ds: Dataset, horizon: float, l1: float) -> PhenotypeScorer:
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    y, treated, control = tlr_labels(ds, horizon)
    d = ds.d
    info = {"l1": l1, "label_mean": float(y.mean())}
    if y.min() == y.max():
        # one-class labels: constant score, no interaction signal to fit
        p = min(max(y.mean(), 1e-6), 1 - 1e-6)
        coef = np.concatenate([[np.log(p / (1 - p))], np.zeros(d)])
    else:
        design = np.hstack([np.ones((ds.n, 1)), ds.covariates])
        # the labels are a linear threshold of x, so at l1=0 the fit is separable and
        # only the direction of the coefficients settles; cap the iterations
        coef = _fit_l1(lambda c: logistic_loss(c, design, y), np.zeros(1 + d), 1, l1,
                       max_iter=20000 if l1 > 0 else 2000)
    return PhenotypeScorer(
        "cox_tlr",
        {
            "intercept": float(coef[0]),
            "theta": coef[1:],
            "beta_treated": treated.coef,
            "beta_control": control.coef,
        },
        horizon,
        info,
    )


def l1_upper_bound(ds: Dataset) -> float:
    """An ``l1`` at which every interaction coefficient is zero for all three baselines.

    Per-coordinate gradients of the averaged losses are bounded by
    ``2 * max|x|``, so no proximal step can leave zero beyond that.
    """
    return 2.0 * float(np.max(np.abs(ds.covariates))) + 1e-12


def fit_baseline(kind: str, ds: Dataset, l1: float, horizon: float | None = None) -> PhenotypeScorer:
    if kind == "cox_int":
        return fit_cox_int(ds, l1)
    if horizon is None:
        raise ValueError(f"{kind} needs a horizon")
    if kind == "bin_int":
        return fit_bin_int(ds, horizon, l1)
    if kind == "cox_tlr":
        return fit_cox_tlr(ds, horizon, l1)
    raise ValueError(f"unknown baseline {kind!r}")


def l1_for_target(
    fit_fn: Callable[[float], PhenotypeScorer], upper: float, target: int, n_bisect: int = 20
) -> tuple[float, PhenotypeScorer, list[tuple[float, int]]]:
    """Log-scale bisection for the smallest evaluated ``l1`` with at most ``target`` active terms."""
    path = []
    best = None
    lo, hi = upper * 1e-6, upper
    s = fit_fn(0.0)
    path.append((0.0, s.n_active))
    if s.n_active <= target:
        return 0.0, s, path
    for _ in range(n_bisect):
        mid = float(np.sqrt(lo * hi))
        s = fit_fn(mid)
        path.append((mid, s.n_active))
        if s.n_active <= target:
            hi = mid
            if best is None or s.n_active >= best[1].n_active:
                best = (mid, s)
            if s.n_active == target:
                break
        else:
            lo = mid
    if best is None:
        s = fit_fn(upper)
        path.append((upper, s.n_active))
        best = (upper, s)
    return best[0], best[1], path
