"""Group soft-thresholding and backtracking proximal-gradient steps.

Scalar soft-thresholding is the group operator with groups of size one, so
the mixture model's gating update and the lasso baselines share this code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


def group_soft_threshold(y: np.ndarray, threshold: float, axis: int = 0) -> np.ndarray:
    """Shrink each group (slice along ``axis``) towards zero in Euclidean norm.

    ``y / ||y|| * max(0, ||y|| - threshold)``; a group whose norm is at most
    the threshold becomes exactly zero.
    """
    y = np.asarray(y, dtype=float)
    if threshold <= 0:
        return y.copy()
    norms = np.sqrt(np.sum(y * y, axis=axis, keepdims=True))
    scale = np.maximum(0.0, 1.0 - threshold / np.where(norms > 0, norms, 1.0))
    return np.where(norms > threshold, y * scale, 0.0)


def soft_threshold(y: np.ndarray, threshold: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return group_soft_threshold(y[None, ...], threshold, axis=0)[0]


@dataclass
class StepResult:
    x: np.ndarray
    value: float
    step: float
    accepted: bool
    halvings: int


def backtracking_step(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    fx: float,
    grad: np.ndarray,
    step: float,
    prox: Callable[[np.ndarray, float], np.ndarray] | None = None,
    penalty: Callable[[np.ndarray], float] | None = None,
    max_halvings: int = 20,
) -> StepResult:
    """One proximal-gradient step on ``f + penalty`` with step halving.

    A trial step ``t`` is accepted under the usual sufficient-decrease test
    ``f(x+) <= f(x) + g.(x+ - x) + ||x+ - x||^2 / (2t)``, which implies the
    composite objective does not increase. ``prox(v, t)`` must be the proximal
    map of ``t * penalty``. If no trial is accepted after ``max_halvings``
    halvings the input is returned unchanged.
    """
    penalty = penalty or (lambda _: 0.0)
    prox = prox or (lambda v, t: v)
    base = fx + penalty(x)
    t = step
    for k in range(max_halvings + 1):
        cand = prox(x - t * grad, t)
        diff = cand - x
        fc = f(cand)
        if np.isfinite(fc):
            bound = fx + float(np.sum(grad * diff)) + float(np.sum(diff * diff)) / (2 * t)
            total = fc + penalty(cand)
            if fc <= bound + 1e-12 * max(1.0, abs(fx)) and total <= base:
                return StepResult(cand, fc, t, True, k)
        t *= 0.5
    return StepResult(x, fx, t * 2, False, max_halvings)


def proximal_gradient(
    f_grad: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0: np.ndarray,
    prox: Callable[[np.ndarray, float], np.ndarray] | None = None,
    penalty: Callable[[np.ndarray], float] | None = None,
    step: float = 1.0,
    max_iter: int = 5000,
    tol: float = 1e-10,
) -> tuple[np.ndarray, int]:
    """Iterate :func:`backtracking_step` until the iterate stops moving.

    The trial step grows by 2x after each accepted step so the solver is not
    stuck with an early pessimistic step size. Returns ``(x, iterations)``.
    """
    x = np.asarray(x0, dtype=float).copy()
    f = lambda v: f_grad(v)[0]
    fx, g = f_grad(x)
    t = step
    for it in range(1, max_iter + 1):
        res = backtracking_step(f, x, fx, g, t, prox, penalty, max_halvings=50)
        if not res.accepted:
            return x, it
        moved = np.max(np.abs(res.x - x), initial=0.0)
        x, t = res.x, res.step * 2
        fx, g = f_grad(x)
        if moved < tol * max(1.0, np.max(np.abs(x), initial=0.0)):
            return x, it
    return x, max_iter
