"""Right-censored datasets: representation, CSV I/O, splitting, standardization."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for schema, parse, and validation problems in input data."""


@dataclass(frozen=True)
class SubjectRecord:
    covariates: np.ndarray
    time: float
    event: int
    treatment: int


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented collection of right-censored observations.

    ``covariates`` is ``(n, d)``; ``time``, ``event`` and ``treatment`` are
    length ``n``. Arrays are copied and made read-only on construction, so a
    dataset can be shared between workers without defensive copies.

    A dataset with no events is allowed here (Kaplan-Meier on an all-censored
    sample is well defined); estimators that need events check for them.
    """

    covariates: np.ndarray
    time: np.ndarray
    event: np.ndarray
    treatment: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __post_init__(self):
        x = np.asarray(self.covariates, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if len(self.feature_names) == 1 else x.reshape(len(x), -1)
        if x.ndim != 2:
            raise DataError("covariates must be a 2-d array")
        n, d = x.shape
        t = np.asarray(self.time, dtype=float).reshape(-1)
        e = np.asarray(self.event).reshape(-1)
        a = np.asarray(self.treatment).reshape(-1)
        if not (len(t) == len(e) == len(a) == n):
            raise DataError(
                f"length mismatch: covariates {n}, time {len(t)}, event {len(e)}, treatment {len(a)}"
            )
        names = tuple(self.feature_names) if len(self.feature_names) else tuple(
            f"x{j + 1}" for j in range(d)
        )
        if len(names) != d:
            raise DataError(f"{len(names)} feature names for {d} covariates")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(t)):
            raise DataError("covariates and times must be finite (missing values are not imputed)")
        if np.any(t <= 0):
            raise DataError(f"time must be positive (row {int(np.argmax(t <= 0))})")
        for label, col in (("event", e), ("treatment", a)):
            bad = ~np.isin(col, (0, 1))
            if np.any(bad):
                raise DataError(f"{label} must be 0 or 1 (row {int(np.argmax(bad))})")
        object.__setattr__(self, "covariates", _readonly(x))
        object.__setattr__(self, "time", _readonly(t))
        object.__setattr__(self, "event", _readonly(e.astype(np.int64)))
        object.__setattr__(self, "treatment", _readonly(a.astype(np.int64)))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.time.shape[0]

    @property
    def d(self) -> int:
        return self.covariates.shape[1]

    def __len__(self) -> int:
        return self.n

    def records(self) -> Iterator[SubjectRecord]:
        for i in range(self.n):
            yield SubjectRecord(
                self.covariates[i], float(self.time[i]), int(self.event[i]), int(self.treatment[i])
            )

    @classmethod
    def from_records(cls, records: Sequence[SubjectRecord], feature_names: Sequence[str] = ()):
        records = list(records)
        if not records:
            raise DataError("no records")
        d = {len(r.covariates) for r in records}
        if len(d) != 1:
            raise DataError("records have differing covariate lengths")
        return cls(
            covariates=np.vstack([np.asarray(r.covariates, dtype=float) for r in records]),
            time=[r.time for r in records],
            event=[r.event for r in records],
            treatment=[r.treatment for r in records],
            feature_names=tuple(feature_names),
        )

    def subset(self, index) -> "Dataset":
        """Rows selected by an integer index array or boolean mask."""
        index = np.asarray(index)
        return Dataset(
            self.covariates[index],
            self.time[index],
            self.event[index],
            self.treatment[index],
            self.feature_names,
        )

    def with_covariates(self, covariates: np.ndarray) -> "Dataset":
        return Dataset(covariates, self.time, self.event, self.treatment, self.feature_names)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.feature_names == other.feature_names
            and np.array_equal(self.covariates, other.covariates)
            and np.array_equal(self.time, other.time)
            and np.array_equal(self.event, other.event)
            and np.array_equal(self.treatment, other.treatment)
        )


@dataclass(frozen=True)
class CsvSchema:
    """Column names for the survival fields and the ordered feature columns.

    ``features=None`` means every column not used for time/event/treatment,
    in file order.
    """

    time: str = "time"
    event: str = "event"
    treatment: str = "treatment"
    features: tuple[str, ...] | None = None

    @classmethod
    def from_mapping(cls, m: Mapping | None) -> "CsvSchema":
        if m is None:
            return cls()
        if isinstance(m, CsvSchema):
            return m
        unknown = set(m) - {"time", "event", "treatment", "features"}
        if unknown:
            raise DataError(f"unknown schema keys: {sorted(unknown)}")
        feats = m.get("features")
        return cls(
            time=m.get("time", "time"),
            event=m.get("event", "event"),
            treatment=m.get("treatment", "treatment"),
            features=None if feats is None else tuple(feats),
        )


def _parse_binary(value: str, column: str, row: int) -> int:
    v = _parse_float(value, column, row)
    if v not in (0.0, 1.0):
        raise DataError(f"row {row}: column {column!r} must be 0 or 1, got {value!r}")
    return int(v)


def _parse_float(value: str, column: str, row: int) -> float:
    try:
        v = float(value)
    except ValueError:
        raise DataError(f"row {row}: column {column!r} is not numeric: {value!r}") from None
    if not math.isfinite(v):
        raise DataError(f"row {row}: column {column!r} is not finite: {value!r}")
    return v


def load_csv(path, schema: Mapping | CsvSchema | None = None) -> Dataset:
    """Read a header-first, comma-delimited UTF-8 file into a :class:`Dataset`.

    Row indices in error messages are 0-based data rows (the header is not
    counted).
    """
    schema = CsvSchema.from_mapping(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        rows = [r for r in reader if r]

    required = [schema.time, schema.event, schema.treatment]
    features = list(schema.features) if schema.features is not None else [
        h for h in header if h not in required
    ]
    for col in required + features:
        if col not in header:
            raise DataError(f"{path}: missing column {col!r}")
    pos = {h: j for j, h in enumerate(header)}

    n, d = len(rows), len(features)
    x = np.empty((n, d))
    t = np.empty(n)
    e = np.empty(n, dtype=np.int64)
    a = np.empty(n, dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} fields, got {len(row)}")
        t[i] = _parse_float(row[pos[schema.time]], schema.time, i)
        if t[i] <= 0:
            raise DataError(f"row {i}: time must be positive, got {t[i]!r}")
        e[i] = _parse_binary(row[pos[schema.event]], schema.event, i)
        a[i] = _parse_binary(row[pos[schema.treatment]], schema.treatment, i)
        for j, f in enumerate(features):
            x[i, j] = _parse_float(row[pos[f]], f, i)
    if n == 0:
        raise DataError(f"{path}: no data rows")
    return Dataset(x, t, e, a, tuple(features))


def write_csv(ds: Dataset, path, schema: Mapping | CsvSchema | None = None) -> None:
    """Write ``ds`` so that ``load_csv(path, schema)`` reproduces it exactly.

    Floats are written with ``repr`` (shortest round-tripping form).
    """
    schema = CsvSchema.from_mapping(schema)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([schema.time, schema.event, schema.treatment, *ds.feature_names])
        for i in range(ds.n):
            w.writerow(
                [repr(float(ds.time[i])), int(ds.event[i]), int(ds.treatment[i])]
                + [repr(float(v)) for v in ds.covariates[i]]
            )


def stratified_split(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Split within each (event, treatment) stratum.

    Each stratum of size ``m`` sends ``floor(fraction * m)`` or
    ``ceil(fraction * m)`` records to the first split. Round-ups are shared
    out across strata so the first split as a whole holds
    ``round(fraction * n)`` records; which strata round up is seeded. Row order
    inside each split follows the original order.
    """
    first, second = split_indices(ds, fraction, seed)
    return ds.subset(first), ds.subset(second)


def split_indices(ds: Dataset, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    strata = [
        np.flatnonzero((ds.event == ev) & (ds.treatment == tr)) for ev in (0, 1) for tr in (0, 1)
    ]
    sizes = np.array([len(s) for s in strata])
    floors = np.floor(fraction * sizes).astype(int)
    remainders = fraction * sizes - floors
    n_up = int(math.floor(remainders.sum() + 0.5))
    candidates = np.flatnonzero(remainders > 1e-12)
    up = rng.permutation(candidates)[:n_up]
    take = np.zeros(ds.n, dtype=bool)
    for s, (members, k) in enumerate(zip(strata, floors)):
        k = k + (1 if s in up else 0)
        if k:
            take[rng.permutation(members)[:k]] = True
    return np.flatnonzero(take), np.flatnonzero(~take)


@dataclass
class Standardizer:
    """Per-feature centering and scaling learned on a training split."""

    mean: np.ndarray
    scale: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    @classmethod
    def fit(cls, ds: Dataset) -> "Standardizer":
        mean = ds.covariates.mean(axis=0)
        scale = ds.covariates.std(axis=0)
        # constant columns are centered but not scaled
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale, ds.feature_names)

    def transform(self, ds: Dataset) -> Dataset:
        if ds.d != len(self.mean):
            raise DataError(f"standardizer expects {len(self.mean)} features, got {ds.d}")
        return ds.with_covariates((ds.covariates - self.mean) / self.scale)

    def transform_array(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "mean": [float(v) for v in self.mean],
            "scale": [float(v) for v in self.scale],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Standardizer":
        return cls(
            np.asarray(d["mean"], dtype=float),
            np.asarray(d["scale"], dtype=float),
            tuple(d.get("feature_names", ())),
        )
