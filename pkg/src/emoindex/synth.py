"""Seeded synthetic index series and post corpora with known ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from typing import Any, Iterator, Mapping
from zoneinfo import ZoneInfo

import numpy as np

from .decompose import EPOCH, YEAR_DAYS, Decomposition, exact_residual
from .errors import DataError, UsageError
from .index import IndexSeries
from .ingest import DEFAULT_TZ, PostRecord, SourceClass, day_range
from .lexicon import EmotionCategory, Lexicon

_EMOTION_INDEX = {e: i for i, e in enumerate(EmotionCategory)}


@dataclass(frozen=True)
class Shock:
    day: date
    emotion: EmotionCategory
    factor: float


@dataclass(frozen=True)
class SynthSpec:
    start: date
    end: date
    base_level: float = 1.0
    trend_slope: float = 0.0
    changepoints: tuple[tuple[date, float], ...] = ()
    yearly_coeffs: tuple[tuple[int, float, float], ...] = ()
    weekly_pattern: tuple[float, ...] = (0.0,) * 7
    noise_sigma: float = 0.0
    shocks: tuple[Shock, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.end < self.start:
            raise UsageError("synth span ends before it starts")
        if len(self.weekly_pattern) != 7:
            raise UsageError("weekly_pattern needs 7 values (Mon..Sun)")
        if abs(math.fsum(self.weekly_pattern)) > 1e-12:
            raise UsageError("weekly_pattern must sum to 0")
        if self.noise_sigma < 0:
            raise UsageError("noise_sigma must be >= 0")
        if any(s.factor <= 0 for s in self.shocks):
            raise UsageError("shock factors must be > 0")
        if any(order < 1 for order, _, _ in self.yearly_coeffs):
            raise UsageError("yearly orders start at 1")
        if not 0 <= self.seed < 2**64:
            raise UsageError("seed must be a 64-bit unsigned integer")

    @property
    def days(self) -> tuple[date, ...]:
        return day_range(self.start, self.end)

    def to_dict(self) -> dict[str, Any]:
        return {
            "start": self.start.isoformat(),
            "end": self.end.isoformat(),
            "base_level": self.base_level,
            "trend_slope": self.trend_slope,
            "changepoints": [[d.isoformat(), s] for d, s in self.changepoints],
            "yearly_coeffs": [list(c) for c in self.yearly_coeffs],
            "weekly_pattern": list(self.weekly_pattern),
            "noise_sigma": self.noise_sigma,
            "shocks": [[s.day.isoformat(), s.emotion.value, s.factor] for s in self.shocks],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> SynthSpec:
        try:
            return cls(
                start=date.fromisoformat(d["start"]),
                end=date.fromisoformat(d["end"]),
                base_level=float(d.get("base_level", 1.0)),
                trend_slope=float(d.get("trend_slope", 0.0)),
                changepoints=tuple((date.fromisoformat(x), float(s))
                                   for x, s in d.get("changepoints", [])),
                yearly_coeffs=tuple((int(m), float(a), float(b))
                                    for m, a, b in d.get("yearly_coeffs", [])),
                weekly_pattern=tuple(float(v) for v in d.get("weekly_pattern", [0.0] * 7)),
                noise_sigma=float(d.get("noise_sigma", 0.0)),
                shocks=tuple(Shock(date.fromisoformat(x), EmotionCategory.parse(e), float(f))
                             for x, e, f in d.get("shocks", [])),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, (UsageError, DataError)):
                raise
            raise UsageError(f"invalid synth spec: {exc!r}") from None


def _rng(spec: SynthSpec, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(spec.seed, spawn_key=key))


def true_components(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    days = spec.days
    n = len(days)
    steps = np.arange(n, dtype=float)
    slope = np.full(n, spec.trend_slope)
    for cp_day, new_slope in sorted(spec.changepoints):
        slope[steps >= (cp_day - spec.start).days] = new_slope
    # trend(t0) = base_level; each day adds the slope in force on the preceding step
    trend = spec.base_level + np.concatenate([[0.0], np.cumsum(slope[:-1])])

    phase = 2 * np.pi * (np.array([d.toordinal() for d in days], dtype=float) - EPOCH) / YEAR_DAYS
    yearly = np.zeros(n)
    for m, a, b in spec.yearly_coeffs:
        yearly += a * np.cos(m * phase) + b * np.sin(m * phase)

    wd = np.array([d.weekday() for d in days])
    weekly = np.asarray(spec.weekly_pattern, dtype=float)[wd]
    return trend, yearly, weekly


def gen_index_series(
    spec: SynthSpec, emotion: EmotionCategory = EmotionCategory.TENSION
) -> tuple[IndexSeries, Decomposition]:
    """observed = (trend + yearly + weekly + noise) * shock factor, per day."""
    days = spec.days
    trend, yearly, weekly = true_components(spec)
    noise = _rng(spec, _EMOTION_INDEX[emotion]).normal(0.0, 1.0, len(days)) * spec.noise_sigma
    factor = np.ones(len(days))
    for s in spec.shocks:
        if s.emotion == emotion and spec.start <= s.day <= spec.end:
            factor[(s.day - spec.start).days] *= s.factor
    observed = (trend + yearly + weekly + noise) * factor

    truth = Decomposition({}, {}, {}, {}, {})
    for d, obs, tr, yr, wk in zip(days, observed, trend, yearly, weekly):
        obs, tr, yr, wk = float(obs), float(tr), float(yr), float(wk)
        truth.observed[d], truth.trend[d], truth.yearly[d], truth.weekly[d] = obs, tr, yr, wk
        truth.residual[d] = exact_residual(obs, tr + yr + wk)
    return IndexSeries(emotion, dict(truth.observed)), truth


def gen_all_index_series(spec: SynthSpec) -> dict[EmotionCategory, IndexSeries]:
    return {e: gen_index_series(spec, e)[0] for e in EmotionCategory}


@dataclass(frozen=True)
class CorpusOptions:
    url_frac: float = 0.05
    reply_frac: float = 0.05
    rt_frac: float = 0.05
    media_frac: float = 0.02
    spam_frac: float = 0.02
    proxy_frac: float = 0.9
    base_prob_range: tuple[float, float] = (0.02, 0.08)
    tz: str = DEFAULT_TZ

    def __post_init__(self) -> None:
        for name in ("url_frac", "reply_frac", "rt_frac", "media_frac", "spam_frac", "proxy_frac"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise UsageError(f"{name} must be in [0, 1]")
        lo, hi = self.base_prob_range
        if not 0 <= lo <= hi <= 1:
            raise UsageError("base_prob_range must satisfy 0 <= lo <= hi <= 1")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> CorpusOptions:
        d = dict(d)
        if "base_prob_range" in d:
            d["base_prob_range"] = tuple(d["base_prob_range"])
        return cls(**d)


@dataclass
class CorpusTruth:
    """Per-day inclusion probability of every head word."""

    base_probs: dict[str, float]
    probs: dict[date, dict[str, float]] = field(default_factory=dict)


def inclusion_probabilities(spec: SynthSpec, lexicon: Lexicon,
                            options: CorpusOptions = CorpusOptions()) -> CorpusTruth:
    words = lexicon.head_words
    lo, hi = options.base_prob_range
    base = _rng(spec, 100).uniform(lo, hi, len(words))
    truth = CorpusTruth(dict(zip(words, map(float, base))))
    levels = {e: gen_index_series(spec, e)[0].values for e in lexicon.emotions}
    owner = {entry.word: entry.emotion for entry in lexicon.entries}
    for d in spec.days:
        truth.probs[d] = {
            w: min(1.0, max(0.0, truth.base_probs[w] * levels[owner[w]][d])) for w in words
        }
    return truth


def _filler_alphabet(lexicon: Lexicon, size: int = 200) -> list[str]:
    used = set()
    for e in lexicon.entries:
        for s in e.surfaces:
            used.update(s)
    for t in (*lexicon.exclusion_terms, *lexicon.proxy_phrases):
        used.update(t)
    out = []
    for cp in range(0x4E00, 0x9FFF):
        ch = chr(cp)
        if ch not in used:
            out.append(ch)
            if len(out) == size:
                break
    return out


def gen_corpus(spec: SynthSpec, lexicon: Lexicon, posts_per_day: int,
               options: CorpusOptions = CorpusOptions()) -> Iterator[PostRecord]:
    """Yield synthetic posts day by day.

    Each head word is included independently with its day's probability from
    ``inclusion_probabilities``; a word is written as its head form or one of
    its variants, separated by filler characters that occur in no lexicon
    string. Flag fractions apply independently per post.
    """
    if posts_per_day < 1:
        raise UsageError("posts_per_day must be >= 1")
    truth = inclusion_probabilities(spec, lexicon, options)
    rng = _rng(spec, 200)
    tz = ZoneInfo(options.tz)
    filler = _filler_alphabet(lexicon)
    words = lexicon.head_words
    surfaces = [e.surfaces for e in lexicon.entries]
    n = posts_per_day

    for d in spec.days:
        p = np.array([truth.probs[d][w] for w in words])
        include = rng.random((n, len(words))) < p
        variant_pick = rng.integers(0, 1 << 30, (n, len(words)))
        flags = rng.random((n, 6))
        seconds = np.sort(rng.integers(0, 86400, n))
        fill = rng.integers(0, len(filler), (n, 8))
        midnight = datetime(d.year, d.month, d.day, tzinfo=tz)
        for i in range(n):
            parts = [filler[fill[i, 0]], filler[fill[i, 1]]]
            for k in np.flatnonzero(include[i]):
                forms = surfaces[k]
                parts.append(forms[variant_pick[i, k] % len(forms)])
                parts.append(filler[fill[i, 2 + k % 6]])
            if flags[i, 4] < options.spam_frac and lexicon.exclusion_terms:
                parts.append(lexicon.exclusion_terms[variant_pick[i, 0] % len(lexicon.exclusion_terms)])
            if flags[i, 5] < options.proxy_frac and lexicon.proxy_phrases:
                parts.append(lexicon.proxy_phrases[fill[i, 7] % len(lexicon.proxy_phrases)])
            yield PostRecord(
                id=f"{d:%Y%m%d}-{i:06d}",
                timestamp=midnight + timedelta(seconds=int(seconds[i])),
                text="".join(parts),
                is_reply=bool(flags[i, 1] < options.reply_frac),
                is_retweet=bool(flags[i, 2] < options.rt_frac),
                has_url=bool(flags[i, 0] < options.url_frac),
                source_class=(SourceClass.MASS_MEDIA if flags[i, 3] < options.media_frac
                              else SourceClass.INDIVIDUAL),
            )
