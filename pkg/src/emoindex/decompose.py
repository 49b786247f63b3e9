"""Additive trend + yearly + day-of-week model fitted by ridge least squares.

The basis, evaluated on calendar days, is::

    [1, t, max(0, t - c_1) ... max(0, t - c_C),
     cos(2 pi m d / 365.25), sin(2 pi m d / 365.25)  for m = 1..M,
     six sum-to-zero weekday dummies]

where ``t`` maps the training span onto [0, 1], ``c_j`` are changepoints
spread over the first ``changepoint_range`` of the training days, and ``d``
counts days since 1970-01-01 so the yearly phase is stable across refits.
The seventh weekday (Sunday) is coded as -1 in every dummy column, which
makes the seven weekday effects sum to zero by construction.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from datetime import date
from typing import Any, Mapping

import numpy as np

from .errors import DataError, UsageError
from .index import IndexSeries
from .lexicon import EmotionCategory

logger = logging.getLogger(__name__)

YEAR_DAYS = 365.25
EPOCH = date(1970, 1, 1).toordinal()
MIN_DAYS = 14
WEEKDAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")


@dataclass(frozen=True)
class ModelSpec:
    n_changepoints: int = 25
    changepoint_range: float = 0.8
    yearly_order: int = 10
    weekly: bool = True
    ridge_trend: float = 0.05
    ridge_seasonal: float = 1e-4
    outlier_mad_k: float = 5.0

    def __post_init__(self) -> None:
        if self.n_changepoints < 0:
            raise UsageError("n_changepoints must be >= 0")
        if not 0 < self.changepoint_range <= 1:
            raise UsageError("changepoint_range must be in (0, 1]")
        if self.yearly_order < 0:
            raise UsageError("yearly_order must be >= 0")
        if self.ridge_trend < 0 or self.ridge_seasonal < 0:
            raise UsageError("ridge penalties must be non-negative")
        if self.outlier_mad_k < 0:
            raise UsageError("outlier_mad_k must be >= 0")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ModelSpec:
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise UsageError(f"unknown model spec keys: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class Basis:
    """Column layout fixed by a training span; evaluates rows for any days."""

    spec: ModelSpec
    start: date
    end: date
    changepoints: tuple[date, ...]

    @property
    def n_trend(self) -> int:
        return 2 + len(self.changepoints)

    @property
    def n_yearly(self) -> int:
        return 2 * self.spec.yearly_order

    @property
    def n_weekly(self) -> int:
        return 6 if self.spec.weekly else 0

    @property
    def n_columns(self) -> int:
        return self.n_trend + self.n_yearly + self.n_weekly

    def slices(self) -> tuple[slice, slice, slice]:
        a, b = self.n_trend, self.n_trend + self.n_yearly
        return slice(0, a), slice(a, b), slice(b, b + self.n_weekly)

    def scaled_time(self, ordinals: np.ndarray) -> np.ndarray:
        span = self.end.toordinal() - self.start.toordinal()
        return (ordinals - self.start.toordinal()) / span

    def matrix(self, days: list[date]) -> np.ndarray:
        ords = np.array([d.toordinal() for d in days], dtype=float)
        t = self.scaled_time(ords)
        cols = [np.ones_like(t), t]
        cps = self.scaled_time(np.array([c.toordinal() for c in self.changepoints], dtype=float))
        cols.extend(np.maximum(0.0, t - c) for c in cps)
        phase = 2 * np.pi * (ords - EPOCH) / YEAR_DAYS
        for m in range(1, self.spec.yearly_order + 1):
            cols.append(np.cos(m * phase))
            cols.append(np.sin(m * phase))
        if self.spec.weekly:
            wd = np.array([d.weekday() for d in days])
            for j in range(6):
                cols.append(np.where(wd == j, 1.0, np.where(wd == 6, -1.0, 0.0)))
        return np.column_stack(cols) if cols else np.empty((len(days), 0))

    def penalty(self) -> np.ndarray:
        s = self.spec
        return np.concatenate([
            np.zeros(2),
            np.full(len(self.changepoints), s.ridge_trend),
            np.full(self.n_yearly + self.n_weekly, s.ridge_seasonal),
        ])


def _check_days(days: list[date]) -> None:
    if len(days) < MIN_DAYS:
        raise DataError(f"too few days: {len(days)} < {MIN_DAYS}")
    for a, b in zip(days, days[1:]):
        if b == a:
            raise DataError(f"duplicate day {a}")
        if b < a:
            raise DataError("days must be strictly increasing")


def place_changepoints(days: list[date], spec: ModelSpec) -> tuple[date, ...]:
    hist = int(math.floor(len(days) * spec.changepoint_range))
    n = min(spec.n_changepoints, max(hist - 1, 0))
    if n == 0:
        return ()
    idx = np.linspace(0, hist - 1, n + 1).round().astype(int)[1:]
    return tuple(days[i] for i in idx)


def build_design(days: list[date], spec: ModelSpec) -> tuple[Basis, np.ndarray]:
    """Basis anchored on ``days`` and its design matrix over those days."""
    days = list(days)
    _check_days(days)
    basis = Basis(spec, days[0], days[-1], place_changepoints(days, spec))
    return basis, basis.matrix(days)


@dataclass
class ModelFit:
    basis: Basis
    coefficients: np.ndarray
    n_obs: int
    excluded: tuple[date, ...] = ()

    @property
    def spec(self) -> ModelSpec:
        return self.basis.spec

    @property
    def train_start(self) -> date:
        return self.basis.start

    @property
    def train_end(self) -> date:
        return self.basis.end

    def weekly_effects(self) -> list[float]:
        """Seven effects Mon..Sun; Sunday is minus the sum of the other six."""
        if not self.spec.weekly:
            return [0.0] * 7
        free = [float(v) for v in self.coefficients[self.basis.slices()[2]]]
        return free + [-sum(free)]

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": asdict(self.spec),
            "train_start": self.train_start.isoformat(),
            "train_end": self.train_end.isoformat(),
            "changepoints": [c.isoformat() for c in self.basis.changepoints],
            "coefficients": [float(v) for v in self.coefficients],
            "n_obs": self.n_obs,
            "excluded": [d.isoformat() for d in self.excluded],
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ModelFit:
        spec = ModelSpec.from_dict(d["spec"])
        basis = Basis(
            spec,
            date.fromisoformat(d["train_start"]),
            date.fromisoformat(d["train_end"]),
            tuple(date.fromisoformat(c) for c in d["changepoints"]),
        )
        coef = np.array(d["coefficients"], dtype=float)
        if coef.shape != (basis.n_columns,):
            raise DataError(f"fit has {coef.size} coefficients, basis needs {basis.n_columns}")
        return cls(basis, coef, int(d.get("n_obs", 0)),
                   tuple(date.fromisoformat(x) for x in d.get("excluded", [])))


def _series_arrays(series: Mapping[date, float] | IndexSeries) -> tuple[list[date], np.ndarray]:
    values = series.values if isinstance(series, IndexSeries) else series
    days = sorted(d for d, v in values.items() if v is not None and math.isfinite(v))
    return days, np.array([values[d] for d in days], dtype=float)


def ridge_solve(X: np.ndarray, y: np.ndarray, penalty: np.ndarray) -> np.ndarray:
    """Solve (X'X + diag(penalty)) b = X'y; raise if the system is singular."""
    A = X.T @ X + np.diag(penalty)
    rhs = X.T @ y
    if A.size and np.linalg.cond(A) > 1e14:
        raise DataError("singular normal system: add regularization or drop collinear terms")
    try:
        return np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise DataError(f"singular normal system: {exc}") from None


def fit(series: Mapping[date, float] | IndexSeries, spec: ModelSpec = ModelSpec()) -> ModelFit:
    days, y = _series_arrays(series)
    basis, X = build_design(days, spec)
    pen = basis.penalty()
    beta = ridge_solve(X, y, pen)
    excluded: tuple[date, ...] = ()

    if spec.outlier_mad_k > 0:
        resid = y - X @ beta
        mad = float(np.median(np.abs(resid - np.median(resid))))
        if mad > 0:
            keep = np.abs(resid) <= spec.outlier_mad_k * mad
            n_keep = int(keep.sum())
            if n_keep < len(y) and n_keep >= MIN_DAYS:
                try:
                    beta = ridge_solve(X[keep], y[keep], pen)
                    excluded = tuple(d for d, k in zip(days, keep) if not k)
                except DataError:
                    logger.warning("outlier refit singular; keeping first-pass fit")
    return ModelFit(basis, beta, len(y), excluded)


def components(model: ModelFit, days: list[date]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = model.basis.matrix(list(days))
    b = model.coefficients
    st, sy, sw = model.basis.slices()
    return X[:, st] @ b[st], X[:, sy] @ b[sy], X[:, sw] @ b[sw]


def predict(model: ModelFit, days: list[date]) -> dict[date, float]:
    days = list(days)
    if not days:
        return {}
    trend, yearly, weekly = components(model, days)
    fitted = (trend + yearly) + weekly
    return {d: float(v) for d, v in zip(days, fitted)}


@dataclass
class Decomposition:
    observed: dict[date, float]
    trend: dict[date, float]
    yearly: dict[date, float]
    weekly: dict[date, float]
    residual: dict[date, float]
    fit: ModelFit | None = field(default=None, repr=False)

    def days(self) -> list[date]:
        return sorted(self.observed)


def exact_residual(observed: float, fitted: float) -> float:
    """observed - fitted, nudged by ulps until fitted + residual == observed.

    Exactness needs fitted and observed of comparable magnitude; otherwise the
    rounded difference is returned.
    """
    r = observed - fitted
    for _ in range(64):
        s = fitted + r
        if s == observed:
            break
        r = math.nextafter(r, math.inf if s < observed else -math.inf)
    return r


def decompose(series: Mapping[date, float] | IndexSeries,
              spec: ModelSpec = ModelSpec()) -> Decomposition:
    days, y = _series_arrays(series)
    model = fit(series, spec)
    trend, yearly, weekly = components(model, days)
    out = Decomposition({}, {}, {}, {}, {}, fit=model)
    for d, obs, tr, yr, wk in zip(days, y, trend, yearly, weekly):
        tr, yr, wk, obs = float(tr), float(yr), float(wk), float(obs)
        out.observed[d] = obs
        out.trend[d] = tr
        out.yearly[d] = yr
        out.weekly[d] = wk
        out.residual[d] = exact_residual(obs, tr + yr + wk)
    return out


DECOMP_HEADER = ["date", "emotion", "observed", "trend", "yearly", "weekly", "residual"]


def decompositions_to_csv(decomps: Mapping[EmotionCategory, Decomposition]) -> str:
    rows = []
    for e, dec in decomps.items():
        for d in dec.days():
            rows.append((d, e.value, dec.observed[d], dec.trend[d], dec.yearly[d],
                         dec.weekly[d], dec.residual[d]))
    rows.sort(key=lambda r: (r[0], r[1]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DECOMP_HEADER)
    for d, name, *vals in rows:
        w.writerow([d.isoformat(), name, *(repr(v) for v in vals)])
    return buf.getvalue()


def load_decompositions(path) -> dict[EmotionCategory, Decomposition]:
    out: dict[EmotionCategory, Decomposition] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != DECOMP_HEADER:
            raise DataError(f"{path}: expected header {','.join(DECOMP_HEADER)}")
        for i, row in enumerate(reader, 2):
            if len(row) != len(DECOMP_HEADER):
                raise DataError(f"{path}:{i}: expected {len(DECOMP_HEADER)} fields")
            try:
                d = date.fromisoformat(row[0])
                obs, tr, yr, wk, res = (float(v) for v in row[2:])
            except ValueError as exc:
                raise DataError(f"{path}:{i}: {exc}") from None
            dec = out.setdefault(EmotionCategory.parse(row[1]), Decomposition({}, {}, {}, {}, {}))
            dec.observed[d], dec.trend[d], dec.yearly[d] = obs, tr, yr
            dec.weekly[d], dec.residual[d] = wk, res
    return out


def fits_to_json(fits: Mapping[EmotionCategory, ModelFit]) -> str:
    doc = {e.value: fits[e].to_dict() for e in sorted(fits, key=lambda e: e.value)}
    return json.dumps(doc, indent=2) + "\n"
