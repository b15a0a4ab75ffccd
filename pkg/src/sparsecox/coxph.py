"""Weighted Cox partial likelihood with Breslow ties, and a Newton solver.

This is the classical single-class model. It backs the univariate hazard
ratio used in evaluation, the per-arm fits of the T-learner baseline, and the
prognostic initialisation of the mixture model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EstimationError(RuntimeError):
    """A model cannot be estimated on the data it was given."""


def risk_set_start(time: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ascending sort order and, per sorted row, the first sorted index at risk.

    A subject is at risk at its own time, so tied times share one risk set
    ``{j : u_j >= u_i}``.
    """
    order = np.argsort(time, kind="stable")
    ts = time[order]
    return order, np.searchsorted(ts, ts, side="left")


def _rev_cumsum(a: np.ndarray) -> np.ndarray:
    return np.cumsum(a[::-1], axis=0)[::-1]


def partial_loglik(beta, z, time, event, weights=None, *, hessian=True):
    """Log partial likelihood, score and (optionally) Hessian.

    ``weights`` act as frequency weights on both the event term and the risk
    set sums, which is the sampling-weight form used by weighted Cox models.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    beta = np.asarray(beta, dtype=float).reshape(-1)
    w = np.ones(len(time)) if weights is None else np.asarray(weights, dtype=float)
    order, start = risk_set_start(np.asarray(time, dtype=float))
    z, w, ev = z[order], w[order], np.asarray(event)[order].astype(float)

    eta = z @ beta
    shift = eta.max() if len(eta) else 0.0
    r = w * np.exp(eta - shift)
    s0 = _rev_cumsum(r)[start]
    s1 = _rev_cumsum(r[:, None] * z)[start]
    d = w * ev
    ll = float(np.sum(d * (eta - shift - np.log(np.where(d > 0, s0, 1.0)))))
    zbar = s1 / s0[:, None]
    grad = (d[:, None] * (z - zbar)).sum(axis=0)
    if not hessian:
        return ll, grad
    s2 = _rev_cumsum(r[:, None, None] * z[:, :, None] * z[:, None, :])[start]
    cov = s2 / s0[:, None, None] - zbar[:, :, None] * zbar[:, None, :]
    hess = -(d[:, None, None] * cov).sum(axis=0)
    return ll, grad, hess


@dataclass
class CoxFit:
    coef: np.ndarray
    loglik: float
    score: np.ndarray
    n_iter: int
    converged: bool


def fit_cox(z, time, event, weights=None, *, init=None, max_iter=100, tol=1e-9) -> CoxFit:
    """Maximise the partial likelihood by Newton-Raphson with step halving.

    Converged when the largest absolute score component drops below ``tol``.
    """
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    w = np.ones(len(time)) if weights is None else np.asarray(weights, dtype=float)
    if not np.any((np.asarray(event) == 1) & (w > 0)):
        raise EstimationError("no events: the partial likelihood is undefined")
    beta = np.zeros(z.shape[1]) if init is None else np.asarray(init, dtype=float).copy()
    ll, g, h = partial_loglik(beta, z, time, event, w)
    for it in range(1, max_iter + 1):
        if np.max(np.abs(g), initial=0.0) < tol:
            return CoxFit(beta, ll, g, it - 1, True)
        try:
            step = np.linalg.solve(h, -g)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(h, -g, rcond=None)[0]
        for _ in range(30):
            cand = beta + step
            ll_c, g_c, h_c = partial_loglik(cand, z, time, event, w)
            if np.isfinite(ll_c) and ll_c >= ll - 1e-12 * abs(ll):
                break
            step = step / 2
        else:
            return CoxFit(beta, ll, g, it, False)
        beta, ll, g, h = cand, ll_c, g_c, h_c
    return CoxFit(beta, ll, g, max_iter, bool(np.max(np.abs(g), initial=0.0) < tol))


def breslow_baseline(coef, z, time, event, weights=None):
    """Breslow cumulative baseline hazard as (event times, cumulative values)."""
    z = np.asarray(z, dtype=float)
    if z.ndim == 1:
        z = z[:, None]
    time = np.asarray(time, dtype=float)
    w = np.ones(len(time)) if weights is None else np.asarray(weights, dtype=float)
    order, start = risk_set_start(time)
    r = (w * np.exp(z @ np.asarray(coef, dtype=float)))[order]
    s0 = _rev_cumsum(r)[start]
    ts = time[order]
    d = (w * np.asarray(event))[order]
    jumps = np.where(d > 0, d / s0, 0.0)
    uniq, inv = np.unique(ts, return_inverse=True)
    per_time = np.bincount(inv, weights=jumps)
    keep = np.bincount(inv, weights=d) > 0
    return uniq[keep], np.cumsum(per_time[keep])
