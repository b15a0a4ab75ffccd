"""Sparse Cox Subgrouping: a latent-class proportional hazards mixture.

Each subject belongs to a latent group ``k`` in ``{0, +1}`` or
``{0, +1, -1}`` with softmax gating ``P(Z=k | x) ∝ exp(theta_k . x)``. Within
group ``k`` the hazard is ``lambda0(t) * exp(beta . x + k * a * omega)``, so
group 0 is unaffected by treatment and groups +1/-1 get opposite treatment
effects. Parameters are learned by a generalized EM whose M-step takes
backtracked gradient steps on the weighted partial likelihood, refreshes the
baseline with a weighted Breslow estimate, and takes a group-lasso proximal
step on the gating coefficients.

All objectives here are written in minimisation form (negative penalised log
likelihood) and are sums over subjects, not means.
"""

from __future__ import annotations

import logging
import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .coxph import EstimationError, fit_cox, risk_set_start
from .data import Dataset, Standardizer
from .estimators import StepFunction, nelson_aalen
from .prox import backtracking_step, group_soft_threshold

log = logging.getLogger(__name__)

CASE_1 = (0, 1)
CASE_2 = (0, 1, -1)


class DivergenceError(RuntimeError):
    """The EM objective became non-finite; ``last_params`` is the last finite state."""

    def __init__(self, msg, last_params=None, trace=None):
        super().__init__(msg)
        self.last_params = last_params
        self.trace = trace


@dataclass(frozen=True)
class LatentSpec:
    """Ordered latent group labels; the first is the reference group 0.

    ``(0,)`` is accepted as a degenerate single-class layout for testing.
    """

    groups: tuple[int, ...] = CASE_2

    def __post_init__(self):
        g = tuple(int(k) for k in self.groups)
        if g not in ((0,), CASE_1, CASE_2):
            raise ValueError(f"latent groups must be (0, 1) or (0, 1, -1), got {g}")
        object.__setattr__(self, "groups", g)

    @property
    def K(self) -> int:
        return len(self.groups)

    @property
    def labels(self) -> np.ndarray:
        return np.asarray(self.groups, dtype=float)

    def index(self, k: int) -> int:
        try:
            return self.groups.index(int(k))
        except ValueError:
            raise ValueError(f"group {k} is not one of the latent groups {self.groups}") from None


@dataclass(frozen=True, eq=False)
class ScsParams:
    theta: np.ndarray
    beta: np.ndarray
    omega: float
    baseline_cumhaz: StepFunction
    latent: LatentSpec = field(default_factory=LatentSpec)
    feature_names: tuple[str, ...] = ()
    standardizer: Standardizer | None = None

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float, ndmin=2)
        beta = np.array(self.beta, dtype=float).reshape(-1)
        if theta.shape != (self.latent.K, len(beta)):
            raise ValueError(f"theta must be {(self.latent.K, len(beta))}, got {theta.shape}")
        if np.any(theta[0] != 0):
            raise ValueError("theta row for the reference group must be zero")
        theta.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def d(self) -> int:
        return len(self.beta)

    @property
    def active_mask(self) -> np.ndarray:
        return np.sqrt(np.sum(self.theta**2, axis=0)) > 0

    @property
    def active_features(self) -> tuple[str, ...]:
        names = self.feature_names or tuple(f"x{j + 1}" for j in range(self.d))
        return tuple(n for n, on in zip(names, self.active_mask) if on)

    def to_dict(self) -> dict:
        return {
            "latent": list(self.latent.groups),
            "feature_names": list(self.feature_names),
            "theta": {str(k): [float(v) for v in row] for k, row in zip(self.latent.groups, self.theta)},
            "beta": [float(v) for v in self.beta],
            "omega": self.omega,
            "baseline_cumhaz": self.baseline_cumhaz.to_dict(),
            "standardization": None if self.standardizer is None else self.standardizer.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "ScsParams":
        latent = LatentSpec(tuple(d["latent"]))
        theta = np.array([d["theta"][str(k)] for k in latent.groups], dtype=float)
        std = d.get("standardization")
        return cls(
            theta=theta,
            beta=d["beta"],
            omega=d["omega"],
            baseline_cumhaz=StepFunction.from_dict(d["baseline_cumhaz"]),
            latent=latent,
            feature_names=tuple(d.get("feature_names", ())),
            standardizer=None if std is None else Standardizer.from_dict(std),
        )


@dataclass(frozen=True, eq=False)
class PosteriorMatrix:
    gamma: np.ndarray
    n_degenerate: int = 0

    def __post_init__(self):
        g = np.array(self.gamma, dtype=float, ndmin=2)
        if np.any(g < 0) or np.any(g > 1) or np.any(np.abs(g.sum(axis=1) - 1) > 1e-10):
            raise ValueError("posterior rows must lie on the probability simplex")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)


@dataclass(frozen=True)
class FitConfig:
    latent: LatentSpec = field(default_factory=LatentSpec)
    epsilon: float = 0.0
    eta: float = 0.01
    inner_steps: int = 5
    max_outer_iters: int = 500
    tol: float = 1e-6
    seed: int = 0
    restarts: int = 3
    n_jobs: int = 1
    max_halvings: int = 20
    patience: int = 3

    def __post_init__(self):
        if not isinstance(self.latent, LatentSpec):
            object.__setattr__(self, "latent", LatentSpec(tuple(self.latent)))
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        for name in ("inner_steps", "max_outer_iters", "restarts", "n_jobs", "patience"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class FitDiagnostics:
    objective_trace: list[float]
    n_iter: int
    converged: bool
    active_features: tuple[str, ...]
    n_degenerate_rows: int = 0
    restart_objectives: list[float] = field(default_factory=list)
    best_restart: int = 0
    seconds: float = 0.0
    canonical_swap: bool = False

    def to_dict(self) -> dict:
        return {
            "objective_trace": [float(v) for v in self.objective_trace],
            "n_iter": self.n_iter,
            "converged": self.converged,
            "active_features": list(self.active_features),
            "n_active": len(self.active_features),
            "n_degenerate_rows": self.n_degenerate_rows,
            "restart_objectives": [float(v) for v in self.restart_objectives],
            "best_restart": self.best_restart,
            "canonical_swap": self.canonical_swap,
        }


# ---------------------------------------------------------------------------
# model pieces


def logsumexp(a: np.ndarray, axis: int = 1, keepdims: bool = False) -> np.ndarray:
    """Row-wise log-sum-exp; rows that are entirely -inf give -inf."""
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return out if keepdims else np.squeeze(out, axis=axis)


def relative_hazard(params: ScsParams, x, a: int, k: int) -> float:
    """``exp(beta . x + k * a * omega)``."""
    params.latent.index(k)
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(x) != params.d:
        raise ValueError(f"x has length {len(x)}, model expects {params.d}")
    return float(np.exp(params.beta @ x + k * a * params.omega))


def _log_hazards(beta, omega, labels, x, a) -> np.ndarray:
    """(n, K) matrix of ``beta . x_i + k * a_i * omega``."""
    return (x @ beta)[:, None] + np.outer(a * omega, labels)


def gating_probs(theta, x) -> np.ndarray:
    """Softmax of ``theta_k . x`` over groups; ``x`` may be one row or a matrix."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != theta.shape[1]:
        raise ValueError(f"x has {x.shape[1]} features, theta expects {theta.shape[1]}")
    logits = x @ theta.T
    p = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    return p[0] if single else p


def predict_gating(params: ScsParams, x) -> np.ndarray:
    """Phenogroup membership probabilities; columns follow ``params.latent.groups``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.d:
        raise ValueError(f"x has {x.shape[-1]} features, model expects {params.d}")
    return gating_probs(params.theta, x)


def _as_gamma(gamma) -> np.ndarray:
    return gamma.gamma if isinstance(gamma, PosteriorMatrix) else np.asarray(gamma, dtype=float)


def e_step(params: ScsParams, ds: Dataset) -> PosteriorMatrix:
    """Posterior group probabilities given each subject's observed outcome.

    ``gamma_ik ∝ h_ik^delta_i * S0(u_i)^h_ik * exp(theta_k . x_i)``; the
    baseline hazard at the event time is common to all groups and cancels.
    """
    lh = _log_hazards(params.beta, params.omega, params.latent.labels, ds.covariates, ds.treatment)
    cumhaz = params.baseline_cumhaz(ds.time)
    with np.errstate(over="ignore", invalid="ignore"):
        logw = ds.event[:, None] * lh - cumhaz[:, None] * np.exp(lh) + ds.covariates @ params.theta.T
    logw = np.where(np.isnan(logw), -np.inf, logw)
    bad = ~np.any(np.isfinite(logw), axis=1)
    logw[bad] = 0.0
    gamma = np.exp(logw - logsumexp(logw, axis=1, keepdims=True))
    if bad.any():
        log.debug("e-step: %d degenerate rows set uniform", int(bad.sum()))
    return PosteriorMatrix(gamma, int(bad.sum()))


class _RiskSets:
    """Sort order and risk-set starts, computed once per dataset."""

    def __init__(self, ds: Dataset):
        self.order, self.start = risk_set_start(ds.time)
        self.time = ds.time[self.order]
        self.event = ds.event[self.order].astype(float)
        self.x = ds.covariates[self.order]
        self.a = ds.treatment[self.order].astype(float)
        self.unique_event_times, self._inv = np.unique(self.time[self.event == 1], return_inverse=True)

    def rev_cumsum(self, v):
        return np.cumsum(v[::-1], axis=0)[::-1][self.start]


def _pl_terms(rs: _RiskSets, beta, omega, labels, gamma_sorted, with_grad):
    lh = _log_hazards(beta, omega, labels, rs.x, rs.a)
    shift = lh.max()
    h = np.exp(lh - shift)
    w = np.sum(gamma_sorted * h, axis=1)
    s0 = rs.rev_cumsum(w)
    ev_w = rs.event * gamma_sorted.sum(axis=1)
    ll = float(np.sum(rs.event * np.sum(gamma_sorted * lh, axis=1)))
    ll -= float(np.sum(ev_w[ev_w > 0] * (np.log(s0[ev_w > 0]) + shift)))
    if not with_grad:
        return ll, None, None, s0, ev_w, shift
    s1b = rs.rev_cumsum(w[:, None] * rs.x)
    gk = gamma_sorted @ labels
    wk = rs.a * np.sum(gamma_sorted * h * labels, axis=1)
    s1w = rs.rev_cumsum(wk)
    safe = np.where(ev_w > 0, s0, 1.0)
    g_beta = (rs.event * gamma_sorted.sum(axis=1)) @ rs.x - (ev_w / safe) @ s1b
    g_omega = float(np.sum(rs.event * rs.a * gk) - np.sum(ev_w * s1w / safe))
    return ll, g_beta, g_omega, s0, ev_w, shift


def weighted_partial_loglik(params: ScsParams, gamma, ds: Dataset, *, _rs=None) -> float:
    """Cox partial log-likelihood with posterior group weights.

    Equivalent to a frequency-weighted Cox model on data expanded to one row
    per (subject, group) with covariates ``(x, k * a)`` and weight
    ``gamma_ik``; tied times share one risk set.
    """
    rs = _rs or _RiskSets(ds)
    g = _as_gamma(gamma)[rs.order]
    if not np.any(rs.event * g.sum(axis=1) > 0):
        raise EstimationError("no events: the partial likelihood is undefined")
    return _pl_terms(rs, params.beta, params.omega, params.latent.labels, g, False)[0]


def pl_gradient(params: ScsParams, gamma, ds: Dataset, *, _rs=None) -> tuple[np.ndarray, float]:
    """Analytic gradient of :func:`weighted_partial_loglik` in ``(beta, omega)``."""
    rs = _rs or _RiskSets(ds)
    g = _as_gamma(gamma)[rs.order]
    if not np.any(rs.event * g.sum(axis=1) > 0):
        raise EstimationError("no events: the partial likelihood is undefined")
    _, gb, gw, *_ = _pl_terms(rs, params.beta, params.omega, params.latent.labels, g, True)
    return gb, gw


def breslow_update(params: ScsParams, gamma, ds: Dataset, *, _rs=None) -> StepFunction:
    """Weighted Breslow estimate of the cumulative baseline hazard.

    The jump at event time ``t`` is the posterior event mass at ``t`` over the
    weighted risk-set hazard sum, and a subject's own event time is included
    (``u_i <= t``).
    """
    rs = _rs or _RiskSets(ds)
    g = _as_gamma(gamma)[rs.order]
    _, _, _, s0, ev_w, shift = _pl_terms(rs, params.beta, params.omega, params.latent.labels, g, False)
    if not np.any(ev_w > 0):
        raise EstimationError("no events: the Breslow estimate is undefined")
    is_ev = rs.event == 1
    with np.errstate(over="ignore"):
        jumps = ev_w[is_ev] / s0[is_ev] * math.exp(-shift)
    per_time = np.bincount(rs._inv, weights=jumps, minlength=len(rs.unique_event_times))
    return StepFunction(rs.unique_event_times, np.cumsum(per_time), 0.0)


def gating_objective(theta, gamma, ds: Dataset, epsilon: float) -> float:
    """Penalised negative expected log gating likelihood (to be minimised).

    ``-sum_ik gamma_ik log softmax_k(theta x_i) + epsilon * sum_d ||theta_.d||``.
    """
    theta = np.asarray(theta, dtype=float)
    logits = ds.covariates @ theta.T
    logp = logits - logsumexp(logits, axis=1, keepdims=True)
    return float(-np.sum(_as_gamma(gamma) * logp) + epsilon * group_penalty(theta))


def gating_gradient(theta, gamma, ds: Dataset) -> np.ndarray:
    """Gradient of the unpenalised part of :func:`gating_objective`; row 0 is zeroed."""
    g = _as_gamma(gamma)
    p = gating_probs(theta, ds.covariates)
    grad = (p * g.sum(axis=1, keepdims=True) - g).T @ ds.covariates
    grad[0] = 0.0
    return grad


def group_penalty(theta) -> float:
    theta = np.asarray(theta, dtype=float)
    return float(np.sum(np.sqrt(np.sum(theta**2, axis=0))))


def prox_group_l1(theta, eta_eps: float) -> np.ndarray:
    """Group soft-threshold each feature's column of non-reference coefficients."""
    theta = np.array(theta, dtype=float)
    out = np.zeros_like(theta)
    out[1:] = group_soft_threshold(theta[1:], eta_eps, axis=0)
    return out


def observed_objective(params: ScsParams, ds: Dataset, epsilon: float = 0.0) -> float:
    """Penalised negative observed-data log likelihood.

    Uses the discrete baseline: an event at ``u`` contributes the jump of the
    cumulative baseline at ``u`` times the group relative hazard.
    """
    lam = params.baseline_cumhaz
    cumhaz = lam(ds.time)
    ev = ds.event == 1
    jumps = lam.jumps()
    pos = np.searchsorted(lam.breakpoints, ds.time[ev])
    hit = (pos < len(jumps)) & (lam.breakpoints[np.clip(pos, 0, len(jumps) - 1)] == ds.time[ev]) if len(jumps) else np.zeros(ev.sum(), bool)
    dlam = np.zeros(ev.sum())
    dlam[hit] = jumps[pos[hit]]
    if np.any(dlam <= 0):
        return math.inf
    lh = _log_hazards(params.beta, params.omega, params.latent.labels, ds.covariates, ds.treatment)
    logits = ds.covariates @ params.theta.T
    logpi = logits - logsumexp(logits, axis=1, keepdims=True)
    with np.errstate(over="ignore", invalid="ignore"):
        comp = logpi + ds.event[:, None] * lh - cumhaz[:, None] * np.exp(lh)
    comp = np.where(np.isnan(comp), -np.inf, comp)
    ll = float(np.sum(logsumexp(comp, axis=1)) + np.sum(np.log(dlam)))
    return -ll + epsilon * group_penalty(params.theta)


def canonicalize(params: ScsParams) -> tuple[ScsParams, bool]:
    """Relabel the +1/-1 groups so that omega <= 0 (group +1 benefits).

    Only meaningful for the three-group layout; the likelihood is unchanged.
    """
    if params.latent.groups != CASE_2 or params.omega <= 0:
        return params, False
    theta = params.theta.copy()
    theta[[1, 2]] = theta[[2, 1]]
    return replace(params, theta=theta, omega=-params.omega), True


# ---------------------------------------------------------------------------
# fitting


def _initial_params(ds: Dataset, config: FitConfig, rng: np.random.Generator, beta0) -> ScsParams:
    return ScsParams(
        theta=np.zeros((config.latent.K, ds.d)),
        beta=beta0,
        omega=float(rng.normal(0.0, 0.1)),
        baseline_cumhaz=nelson_aalen(ds),
        latent=config.latent,
        feature_names=ds.feature_names,
    )


def _prognostic_init(ds: Dataset) -> np.ndarray:
    try:
        res = fit_cox(ds.covariates, ds.time, ds.event)
        if res.converged and np.all(np.isfinite(res.coef)):
            return res.coef
    except (EstimationError, np.linalg.LinAlgError):
        pass
    return np.zeros(ds.d)


def _run_em(ds: Dataset, config: FitConfig, params: ScsParams, rs: _RiskSets):
    eps = config.epsilon
    labels = config.latent.labels
    trace = [observed_objective(params, ds, eps)]
    n_degenerate = 0
    converged = False
    it = 0
    # trial steps start at eta, or at 4x the last accepted step if smaller
    t_cox = t_gate = config.eta
    changes: list[float] = []
    for it in range(1, config.max_outer_iters + 1):
        post = e_step(params, ds)
        n_degenerate += post.n_degenerate
        gamma = post.gamma
        g_sorted = gamma[rs.order]
        theta, beta, omega = params.theta.copy(), params.beta.copy(), params.omega
        lam = params.baseline_cumhaz

        def neg_pl(v):
            return -_pl_terms(rs, v[:-1], v[-1], labels, g_sorted, False)[0]

        def neg_b(th):
            return gating_objective(th, gamma, ds, 0.0)

        for _ in range(config.inner_steps):
            v = np.append(beta, omega)
            ll, gb, gw, *_ = _pl_terms(rs, beta, omega, labels, g_sorted, True)
            step = backtracking_step(
                neg_pl, v, -ll, -np.append(gb, gw), t_cox, max_halvings=config.max_halvings
            )
            if step.accepted:
                t_cox = min(config.eta, 4 * step.step)
            beta, omega = step.x[:-1], float(step.x[-1])
            current = replace(params, theta=theta, beta=beta, omega=omega)
            lam = breslow_update(current, gamma, ds, _rs=rs)

            step = backtracking_step(
                neg_b,
                theta,
                neg_b(theta),
                gating_gradient(theta, gamma, ds),
                t_gate,
                prox=lambda y, t: prox_group_l1(y, t * eps),
                penalty=lambda th: eps * group_penalty(th),
                max_halvings=config.max_halvings,
            )
            if step.accepted:
                t_gate = min(config.eta, 4 * step.step)
            theta = step.x
        params = replace(params, theta=theta, beta=beta, omega=omega, baseline_cumhaz=lam)
        obj = observed_objective(params, ds, eps)
        if not np.isfinite(obj):
            raise DivergenceError(f"non-finite objective at outer iteration {it}", params, trace)
        prev = trace[-1]
        trace.append(obj)
        changes.append(abs(prev - obj) / max(abs(prev), 1e-300))
        recent = changes[-config.patience:]
        # near the symmetric start the change is tiny but growing; wait until it shrinks
        if (
            len(recent) == config.patience
            and max(recent) < config.tol
            and all(b <= a for a, b in zip(recent, recent[1:]))
        ):
            converged = True
            break
    return params, trace, it, converged, n_degenerate


def fit(ds: Dataset, config: FitConfig = FitConfig()) -> tuple[ScsParams, FitDiagnostics]:
    """Fit the mixture by generalized EM from ``config.restarts`` seeded starts.

    Each restart starts from uniform gating, a plain Cox fit for the
    prognostic coefficients, a small random treatment effect and the
    Nelson-Aalen baseline. The restart with the lowest final objective wins,
    and its groups are relabelled so that group +1 is the benefited one.
    """
    if not ds.event.any():
        raise EstimationError("no events: the model cannot be fitted")
    for arm in (0, 1):
        if not np.any(ds.event[ds.treatment == arm] == 1):
            log.warning("no events in arm %d; the treatment effect is weakly identified", arm)
    t0 = _time.perf_counter()
    rs = _RiskSets(ds)
    beta0 = _prognostic_init(ds)
    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)

    def one(seed_seq):
        start = _initial_params(ds, config, np.random.default_rng(seed_seq), beta0)
        return _run_em(ds, config, start, rs)

    if config.n_jobs > 1 and config.restarts > 1:
        with ThreadPoolExecutor(config.n_jobs) as pool:
            runs = list(pool.map(one, seeds))
    else:
        runs = [one(s) for s in seeds]

    finals = [r[1][-1] for r in runs]
    best = int(np.argmin(finals))
    params, trace, n_iter, converged, n_deg = runs[best]
    params, swapped = canonicalize(params)
    diag = FitDiagnostics(
        objective_trace=trace,
        n_iter=n_iter,
        converged=converged,
        active_features=params.active_features,
        n_degenerate_rows=n_deg,
        restart_objectives=finals,
        best_restart=best,
        seconds=_time.perf_counter() - t0,
        canonical_swap=swapped,
    )
    return params, diag


def epsilon_upper_bound(ds: Dataset) -> float:
    """A shrinkage level at which every gating column stays exactly zero.

    Each column of the gating gradient has norm at most
    ``sqrt(2) * sum_i |x_id|``, so no proximal step from zero can leave zero.
    """
    return float(math.sqrt(2.0) * np.max(np.sum(np.abs(ds.covariates), axis=0)))


@dataclass
class SparsitySearch:
    epsilon: float
    params: ScsParams
    diagnostics: FitDiagnostics
    path: list[tuple[float, int]]
    reached_target: bool

    @property
    def warning(self) -> str | None:
        if self.reached_target:
            return None
        return "target feature count not reached exactly; returning the closest fit from below"


def select_sparsity(
    ds: Dataset,
    config: FitConfig,
    target_features: int,
    *,
    n_bisect: int = 10,
    decades: float = 4.0,
) -> SparsitySearch:
    """Search the shrinkage level for at most ``target_features`` active features.

    The unpenalised fit is tried first. Otherwise a log-scale bisection runs
    between ``epsilon_upper_bound(ds)`` (all gating columns zero) and a level
    ``decades`` orders of magnitude lower, keeping the fit with the most active
    features among those not exceeding the target.
    """
    if not 1 <= target_features <= ds.d:
        raise ValueError(f"target_features must be in [1, {ds.d}], got {target_features}")
    path: list[tuple[float, int]] = []
    fits: dict[float, tuple[ScsParams, FitDiagnostics]] = {}

    def run(eps: float) -> int:
        p, dg = fit(ds, replace(config, epsilon=eps))
        fits[eps] = (p, dg)
        count = int(p.active_mask.sum())
        path.append((eps, count))
        log.info("epsilon=%.6g active=%d", eps, count)
        return count

    if run(0.0) <= target_features:
        p, dg = fits[0.0]
        return SparsitySearch(0.0, p, dg, path, int(p.active_mask.sum()) == target_features)

    hi = epsilon_upper_bound(ds)
    run(hi)
    lo = hi * 10.0 ** (-decades)
    c_lo = run(lo)
    while c_lo <= target_features and lo > 1e-12:
        hi, lo = lo, lo * 10.0 ** (-decades)
        c_lo = run(lo)
    for _ in range(n_bisect):
        mid = math.sqrt(lo * hi)
        c = run(mid)
        if c == target_features:
            break
        if c < target_features:
            hi = mid
        else:
            lo = mid

    admissible = [(c, -e, e) for e, c in path if c <= target_features]
    _, _, eps = max(admissible)
    p, dg = fits[eps]
    return SparsitySearch(eps, p, dg, path, int(p.active_mask.sum()) == target_features)


def with_standardizer(params: ScsParams, standardizer: Standardizer | None) -> ScsParams:
    return replace(params, standardizer=standardizer)


def active_count_path(path: Sequence[tuple[float, int]]) -> list[tuple[float, int]]:
    """The evaluated (epsilon, active count) pairs sorted by epsilon."""
    return sorted(path)
