"""Daily emotion indices from word counts.

Per word and day the ratio w_k(t)/w_all(t) is formed; the ratios of one
category are combined with a power mean (exponent ``alpha``, default 0.5)
and the result is divided by its mean over a baseline window so that the
window averages 1.0. ``zscore_index`` is the older standardized variant.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import DataError, UsageError
from .fileio import atomic_write_text
from .ingest import DailyCounts
from .lexicon import EmotionCategory, Lexicon, sorted_emotions

logger = logging.getLogger(__name__)

DEFAULT_BASELINE = (date(2021, 1, 1), date(2023, 12, 31))


@dataclass(frozen=True)
class IndexConfig:
    alpha: float = 0.5
    baseline_start: date = DEFAULT_BASELINE[0]
    baseline_end: date = DEFAULT_BASELINE[1]

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise UsageError(f"alpha must be > 0, got {self.alpha}")
        if self.baseline_start > self.baseline_end:
            raise UsageError("baseline_start must not be after baseline_end")

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "baseline_start": self.baseline_start.isoformat(),
            "baseline_end": self.baseline_end.isoformat(),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> IndexConfig:
        return cls(
            alpha=float(d.get("alpha", 0.5)),
            baseline_start=date.fromisoformat(d.get("baseline_start", DEFAULT_BASELINE[0].isoformat())),
            baseline_end=date.fromisoformat(d.get("baseline_end", DEFAULT_BASELINE[1].isoformat())),
        )


@dataclass
class RatioSeries:
    emotion: EmotionCategory
    ratios: dict[date, dict[str, float]]
    aggregated: dict[date, float] = field(default_factory=dict)
    # days where some head word had no row in the counts table (treated as 0)
    unmeasured: dict[date, int] = field(default_factory=dict)


@dataclass
class IndexSeries:
    emotion: EmotionCategory
    values: dict[date, float]
    # None for series that were not produced by baseline normalization
    config: IndexConfig | None = None

    def days(self) -> list[date]:
        return sorted(self.values)


def ratio_series(counts: DailyCounts, lexicon: Lexicon, emotion: EmotionCategory) -> RatioSeries:
    words = lexicon.words(emotion)
    if not words:
        raise DataError(f"emotion {emotion.value} is absent from the lexicon")
    vocab = counts.vocabulary
    absent = [w for w in words if w not in vocab]
    if absent:
        logger.warning("%s: %d word(s) absent from counts, ratio 0: %s",
                       emotion.value, len(absent), ", ".join(absent))

    ratios: dict[date, dict[str, float]] = {}
    unmeasured: dict[date, int] = {}
    for day in counts.dates:
        total = counts.totals.get(day)
        if not total:
            continue
        row = counts.word_counts.get(day, {})
        missing = sum(1 for w in words if w in vocab and w not in row)
        if missing:
            unmeasured[day] = missing
        ratios[day] = {w: row.get(w, 0) / total for w in words}
    if unmeasured:
        logger.warning("%s: %d day(s) with unmeasured words treated as 0",
                       emotion.value, len(unmeasured))
    return RatioSeries(emotion=emotion, ratios=ratios, unmeasured=unmeasured)


def generalized_mean(ratios: Iterable[float], alpha: float = 0.5) -> float:
    """Power mean ((1/n) * sum(x**alpha)) ** (1/alpha) of non-negative values."""
    xs = list(ratios)
    if not xs:
        raise DataError("generalized mean of an empty ratio set")
    if not alpha > 0:
        raise UsageError(f"alpha must be > 0, got {alpha}")
    lo, hi = min(xs), max(xs)
    if lo < 0:
        raise DataError(f"negative ratio {lo}")
    if lo == hi:
        return lo
    m = math.fsum(x ** alpha for x in xs) / len(xs)
    result = m ** (1.0 / alpha)
    # rounding must not push the mean outside the data range
    return min(max(result, lo), hi)


def normalize_baseline(r: Mapping[date, float], config: IndexConfig,
                       emotion: EmotionCategory = EmotionCategory.ANGER) -> IndexSeries:
    window = [v for d, v in r.items()
              if config.baseline_start <= d <= config.baseline_end and math.isfinite(v)]
    if not window:
        raise DataError(
            f"{emotion.value}: baseline window {config.baseline_start}..{config.baseline_end} "
            "has no data"
        )
    mean = math.fsum(window) / len(window)
    if mean == 0:
        raise DataError(f"{emotion.value}: baseline mean is 0")
    values = {d: v / mean for d, v in sorted(r.items())}
    return IndexSeries(emotion=emotion, values=values, config=config)


def zscore_index(r: Mapping[date, float]) -> dict[date, float]:
    """(r - mean) / sigma with population statistics over non-gap days."""
    vals = [v for v in r.values() if math.isfinite(v)]
    if len(vals) < 2:
        raise DataError("z-score needs at least 2 days")
    n = len(vals)
    mean = math.fsum(vals) / n
    sigma = math.sqrt(math.fsum((v - mean) ** 2 for v in vals) / n)
    if sigma == 0:
        raise DataError("z-score undefined: standard deviation is 0")
    return {d: (v - mean) / sigma for d, v in sorted(r.items()) if math.isfinite(v)}


def aggregate_ratios(rs: RatioSeries, alpha: float) -> RatioSeries:
    rs.aggregated = {d: generalized_mean(row.values(), alpha) for d, row in rs.ratios.items()}
    return rs


def build_all_indices(
    counts: DailyCounts, lexicon: Lexicon, config: IndexConfig,
) -> dict[EmotionCategory, IndexSeries]:
    out = {}
    for emotion in EmotionCategory:
        try:
            rs = aggregate_ratios(ratio_series(counts, lexicon, emotion), config.alpha)
            out[emotion] = normalize_baseline(rs.aggregated, config, emotion)
        except DataError as exc:
            raise DataError(f"{emotion.value}: {exc}") from exc
    return out


def build_zscore_indices(counts: DailyCounts, lexicon: Lexicon) -> dict[EmotionCategory, IndexSeries]:
    """Legacy variant: summed ratios standardized over the whole span."""
    out = {}
    for emotion in EmotionCategory:
        try:
            rs = ratio_series(counts, lexicon, emotion)
            summed = {d: math.fsum(row.values()) for d, row in rs.ratios.items()}
            out[emotion] = IndexSeries(emotion, zscore_index(summed))
        except DataError as exc:
            raise DataError(f"{emotion.value}: {exc}") from exc
    return out


def index_to_csv(series: Mapping[EmotionCategory, IndexSeries]) -> str:
    rows = sorted(
        ((d, e.value, v) for e, s in series.items() for d, v in s.values.items()),
        key=lambda r: (r[0], r[1]),
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "emotion", "value"])
    for d, name, v in rows:
        w.writerow([d.isoformat(), name, repr(v)])
    return buf.getvalue()


def sidecar_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".json")


def write_index(series: Mapping[EmotionCategory, IndexSeries], path: str | Path,
                lexicon: Lexicon | None = None, variant: str = "generalized_mean") -> None:
    configs = {s.config for s in series.values()}
    config = next(iter(configs)) if len(configs) == 1 else None
    meta: dict[str, Any] = {
        "variant": variant,
        "config": config.to_dict() if config else None,
        "emotions": [e.value for e in sorted_emotions(series)],
    }
    if lexicon is not None:
        meta["lexicon"] = {"name": lexicon.name, "version": lexicon.version}
    atomic_write_text(path, index_to_csv(series))
    atomic_write_text(sidecar_path(path), json.dumps(meta, ensure_ascii=False, indent=2) + "\n")


def load_index(path: str | Path) -> dict[EmotionCategory, IndexSeries]:
    config = None
    meta_path = sidecar_path(path)
    if meta_path.exists():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        if meta.get("config"):
            config = IndexConfig.from_dict(meta["config"])
    series: dict[EmotionCategory, IndexSeries] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", "emotion", "value"]:
            raise DataError(f"{path}: expected header date,emotion,value")
        for i, row in enumerate(reader, 2):
            if len(row) != 3:
                raise DataError(f"{path}:{i}: expected 3 fields")
            try:
                d = date.fromisoformat(row[0])
                v = float(row[2])
            except ValueError as exc:
                raise DataError(f"{path}:{i}: {exc}") from None
            e = EmotionCategory.parse(row[1])
            s = series.setdefault(e, IndexSeries(e, {}, config))
            if d in s.values:
                raise DataError(f"{path}:{i}: duplicate ({d}, {e.value})")
            s.values[d] = v
    if not series:
        raise DataError(f"{path}: no index rows")
    return series
