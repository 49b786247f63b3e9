"""Event-specific impact: relative deviation of the observed index from an
out-of-sample model forecast, and ranking of the largest deviations."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Mapping

from .decompose import ModelFit, ModelSpec, fit, predict
from .errors import DataError
from .index import IndexSeries
from .lexicon import EmotionCategory

logger = logging.getLogger(__name__)

MIN_HISTORY_DAYS = 365


@dataclass(frozen=True)
class ImpactRecord:
    emotion: EmotionCategory
    date: date
    delta: float | None  # None when the forecast is <= 0 and the ratio is undefined
    observed: float
    expected: float
    fit_train_end: date

    def __post_init__(self) -> None:
        if not self.fit_train_end < self.date:
            raise ValueError("impact record must be out of sample (fit_train_end < date)")

    @property
    def defined(self) -> bool:
        return self.delta is not None


def differential_ratio(observed: float, expected: float) -> float | None:
    if expected <= 0:
        return None
    return (observed - expected) / expected


def _valid_values(series: IndexSeries | Mapping[date, float]) -> dict[date, float]:
    values = series.values if isinstance(series, IndexSeries) else series
    return {d: v for d, v in values.items() if v is not None and math.isfinite(v)}


def _history_before(values: Mapping[date, float], cutoff: date, emotion: EmotionCategory) -> dict[date, float]:
    hist = {d: v for d, v in values.items() if d < cutoff}
    if len(hist) < MIN_HISTORY_DAYS:
        raise DataError(
            f"{emotion.value}: need >= {MIN_HISTORY_DAYS} days before {cutoff}, have {len(hist)}"
        )
    return hist


def _records(emotion: EmotionCategory, model: ModelFit, values: Mapping[date, float],
             days: list[date]) -> list[ImpactRecord]:
    days = [d for d in days if d in values]
    out = []
    for d, expected in predict(model, days).items():
        obs = values[d]
        delta = differential_ratio(obs, expected)
        if delta is None:
            logger.warning("%s %s: forecast %.6g <= 0, impact undefined", emotion.value, d, expected)
        out.append(ImpactRecord(emotion, d, delta, obs, expected, model.train_end))
    return out


def event_impact(series: IndexSeries, spec: ModelSpec, event_date: date,
                 horizon: int = 14) -> list[ImpactRecord]:
    """Fit on every day before ``event_date`` and score ``horizon`` days from it."""
    if horizon < 1:
        raise DataError("horizon must be >= 1")
    values = _valid_values(series)
    model = fit(_history_before(values, event_date, series.emotion), spec)
    window = [event_date + timedelta(days=i) for i in range(horizon)]
    return _records(series.emotion, model, values, window)


def rank_key(r: ImpactRecord) -> tuple[float, date, str]:
    return (-r.delta, r.date, r.emotion.value)


def rank_impacts(
    all_series: Mapping[EmotionCategory, IndexSeries],
    spec: ModelSpec,
    period_start: date,
    period_end: date,
    top_k: int | None = 10,
    refit_cadence: int = 28,
) -> list[ImpactRecord]:
    """Largest out-of-sample deltas over a period, by (emotion, day).

    The period is cut into blocks of ``refit_cadence`` days; each block is
    scored with a model trained on all data before the block's first day.
    Ordered by delta descending, then earlier date, then emotion name.
    """
    if period_end < period_start:
        raise DataError("period ends before it starts")
    if refit_cadence < 1:
        raise DataError("refit_cadence must be >= 1")
    records: list[ImpactRecord] = []
    for emotion in sorted(all_series, key=lambda e: e.value):
        values = _valid_values(all_series[emotion])
        _history_before(values, period_start, emotion)
        block_start = period_start
        while block_start <= period_end:
            block_end = min(block_start + timedelta(days=refit_cadence - 1), period_end)
            model = fit(_history_before(values, block_start, emotion), spec)
            span = [block_start + timedelta(days=i)
                    for i in range((block_end - block_start).days + 1)]
            records.extend(_records(emotion, model, values, span))
            block_start = block_end + timedelta(days=1)

    undefined = [r for r in records if not r.defined]
    if undefined:
        logger.warning("%d (emotion, day) pairs had undefined impact and are not ranked",
                       len(undefined))
    ranked = sorted((r for r in records if r.defined), key=rank_key)
    return ranked if top_k is None else ranked[:top_k]


IMPACT_HEADER = ["rank", "emotion", "date", "delta_pct", "observed", "expected", "fit_train_end"]


def impacts_to_csv(records: list[ImpactRecord], labels: Mapping[date, str] | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(IMPACT_HEADER + (["label"] if labels is not None else []))
    for rank, r in enumerate(records, 1):
        row = [
            rank, r.emotion.value, r.date.isoformat(),
            "" if r.delta is None else repr(r.delta * 100),
            repr(r.observed), repr(r.expected), r.fit_train_end.isoformat(),
        ]
        if labels is not None:
            row.append(labels.get(r.date, ""))
        w.writerow(row)
    return buf.getvalue()


def load_annotations(path) -> dict[date, str]:
    out: dict[date, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != ["date", "label"]:
            raise DataError(f"{path}: expected header date,label")
        for i, row in enumerate(reader, 2):
            if len(row) != 2:
                raise DataError(f"{path}:{i}: expected 2 fields")
            try:
                d = date.fromisoformat(row[0])
            except ValueError:
                raise DataError(f"{path}:{i}: bad date {row[0]!r}") from None
            out[d] = f"{out[d]}; {row[1]}" if d in out else row[1]
    return out
