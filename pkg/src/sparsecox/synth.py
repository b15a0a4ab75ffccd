"""Synthetic trial with latent phenogroups and Gompertz event times.

Per subject: ``a ~ Bernoulli(1/2)``, ``z`` uniform over the latent groups,
``x[:2] ~ Normal(mu_z, sigma_z^2 I)``, remaining covariates ``Uniform(-1, 1)``.
The event time has hazard ``eta * exp(shape * t)`` with
``eta = rate_scale * HR(z)^a``, so ``HR(z)`` is the true within-group hazard
ratio. With probability ``censor_prob`` the event is observed; otherwise the
record is censored at ``C ~ Uniform(0, T)``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset, write_csv


def _default_hr():
    return {0: 1.0, 1: 0.5, -1: 2.0}


def _default_mu():
    return {0: (0.0, 2.0), 1: (-2.0, 0.0), -1: (2.0, 0.0)}


def _default_sigma():
    return {0: 0.7, 1: 0.7, -1: 0.7}


@dataclass(frozen=True)
class SynthConfig:
    n: int = 10000
    hr: dict = field(default_factory=_default_hr)
    mu: dict = field(default_factory=_default_mu)
    sigma: dict = field(default_factory=_default_sigma)
    gompertz_shape: float = 1.0
    rate_scale: float = 0.25
    censor_prob: float = 0.8
    noise_dims: int = 4
    seed: int = 0
    groups: tuple[int, ...] = (0, 1, -1)

    def __post_init__(self):
        groups = tuple(int(g) for g in self.groups)
        if groups not in ((0, 1), (0, 1, -1)):
            raise ValueError(f"groups must be (0, 1) or (0, 1, -1), got {groups}")
        object.__setattr__(self, "groups", groups)
        # JSON round trips turn integer keys into strings
        for name in ("hr", "mu", "sigma"):
            m = {int(k): v for k, v in getattr(self, name).items()}
            missing = set(groups) - set(m)
            if missing:
                raise ValueError(f"{name} has no entry for groups {sorted(missing)}")
            object.__setattr__(self, name, {k: m[k] for k in groups})
        if self.n < 1:
            raise ValueError("n must be positive")
        if any(v <= 0 for v in self.hr.values()):
            raise ValueError("hazard ratios must be positive")
        if any(v <= 0 for v in self.sigma.values()):
            raise ValueError("sigma must be positive")
        if any(len(v) != 2 for v in self.mu.values()):
            raise ValueError("mu entries must be 2-vectors")
        if self.gompertz_shape <= 0 or self.rate_scale <= 0:
            raise ValueError("gompertz_shape and rate_scale must be positive")
        if not 0.0 <= self.censor_prob <= 1.0:
            raise ValueError("censor_prob must be in [0, 1]")
        if self.noise_dims < 0:
            raise ValueError("noise_dims must be non-negative")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f"X{j + 1}" for j in range(2 + self.noise_dims))


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    data: Dataset
    true_z: np.ndarray
    event_time: np.ndarray

    def __post_init__(self):
        if len(self.true_z) != self.data.n:
            raise ValueError("true_z length does not match the dataset")


def gompertz_survival(t, eta: float, shape: float):
    """``S(t) = exp(-(eta / shape) * (exp(shape * t) - 1))``."""
    return np.exp(-(eta / shape) * np.expm1(shape * np.asarray(t, dtype=float)))


def gompertz_inverse(u, eta, shape):
    """Time at which the Gompertz survival function equals ``u``."""
    return np.log1p(-shape * np.log(u) / eta) / shape


def generate(config: SynthConfig) -> LabeledDataset:
    rng = np.random.default_rng(config.seed)
    n = config.n
    groups = np.asarray(config.groups)
    a = rng.integers(0, 2, n)
    z = groups[rng.integers(0, len(groups), n)]
    mu = np.array([config.mu[k] for k in z])
    sigma = np.array([config.sigma[k] for k in z])
    x_signal = mu + sigma[:, None] * rng.standard_normal((n, 2))
    x_noise = rng.uniform(-1.0, 1.0, (n, config.noise_dims))
    hr = np.array([config.hr[k] for k in z])
    eta = config.rate_scale * hr**a
    # 1 - U keeps the argument of log strictly positive
    t_event = gompertz_inverse(1.0 - rng.random(n), eta, config.gompertz_shape)
    observed = rng.random(n) < config.censor_prob
    c = rng.uniform(0.0, t_event)
    u = np.where(observed, t_event, c)
    # a zero draw from Uniform(0, T) would be an invalid follow-up time
    u = np.where(u > 0, u, np.nextafter(0.0, 1.0))
    ds = Dataset(
        np.hstack([x_signal, x_noise]),
        u,
        observed.astype(int),
        a,
        config.feature_names,
    )
    return LabeledDataset(ds, z, t_event)


def write(labeled: LabeledDataset, path) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and the sibling ``<stem>_truth.csv``."""
    path = Path(path)
    truth = path.with_name(path.stem + "_truth.csv")
    write_csv(labeled.data, path)
    with open(truth, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["true_z"])
        w.writerows([int(z)] for z in labeled.true_z)
    return path, truth


def read_truth(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["true_z"]:
            raise ValueError(f"{path}: expected a single true_z column, got {header}")
        return np.array([int(r[0]) for r in reader if r])
