"""Emotion-word dictionaries for the seven mood categories.

A lexicon file is a UTF-8 JSON document::

    {
      "meta": {"name": "sample", "version": "1"},
      "emotions": {"Anger": [{"word": "怒り", "variants": ["いかり"]}], ...},
      "exclusion_terms": ["拡散希望"],
      "proxy_phrases": ["。", "、"]
    }

Every string is NFKC-normalized on load, before any invariant is checked.
"""

from __future__ import annotations

import calendar
import json
import logging
import unicodedata
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Any

from .errors import DataError
from .matcher import AhoCorasick

if TYPE_CHECKING:
    from .ingest import DailyCounts

logger = logging.getLogger(__name__)

DEFAULT_BAND = (15, 40)


class EmotionCategory(str, Enum):
    ANGER = "Anger"
    CONFUSION = "Confusion"
    DEPRESSION = "Depression"
    FATIGUE = "Fatigue"
    TENSION = "Tension"
    VIGOR = "Vigor"
    FRIENDLINESS = "Friendliness"

    @classmethod
    def parse(cls, name: str) -> EmotionCategory:
        try:
            return cls(name)
        except ValueError:
            raise DataError(f"unknown emotion category {name!r}") from None


def sorted_emotions(emotions) -> list[EmotionCategory]:
    """Canonical output order: by English label."""
    return sorted(emotions, key=lambda e: e.value)


class LexiconError(DataError):
    pass


def nfkc(text: str) -> str:
    return unicodedata.normalize("NFKC", text)


@dataclass(frozen=True)
class LexiconEntry:
    emotion: EmotionCategory
    word: str
    variants: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.word:
            raise LexiconError(f"{self.emotion.value}: empty word")
        if any(not v for v in self.variants):
            raise LexiconError(f"{self.emotion.value}/{self.word}: empty variant")
        if len(set(self.variants)) != len(self.variants):
            raise LexiconError(f"{self.emotion.value}/{self.word}: duplicate variants")
        if self.word in self.variants:
            raise LexiconError(f"{self.emotion.value}/{self.word}: variant repeats head word")

    @property
    def surfaces(self) -> tuple[str, ...]:
        return (self.word, *self.variants)


@dataclass(frozen=True)
class Lexicon:
    entries: tuple[LexiconEntry, ...]
    exclusion_terms: tuple[str, ...] = ()
    proxy_phrases: tuple[str, ...] = ()
    name: str = "unnamed"
    version: str = "0"

    def __post_init__(self) -> None:
        owner: dict[str, LexiconEntry] = {}
        for entry in self.entries:
            for surface in entry.surfaces:
                prev = owner.get(surface)
                if prev is not None:
                    if prev.emotion == entry.emotion and surface == entry.word == prev.word:
                        raise LexiconError(
                            f"duplicate word {surface!r} in {entry.emotion.value}"
                        )
                    raise LexiconError(
                        f"surface {surface!r} listed under both "
                        f"{prev.emotion.value}/{prev.word} and {entry.emotion.value}/{entry.word}"
                    )
                owner[surface] = entry
        for kind, terms in (("exclusion term", self.exclusion_terms),
                            ("proxy phrase", self.proxy_phrases)):
            for term in terms:
                if not term:
                    raise LexiconError(f"empty {kind}")
                if term in owner:
                    hit = owner[term]
                    raise LexiconError(
                        f"{kind} {term!r} collides with entry word "
                        f"{hit.emotion.value}/{hit.word}"
                    )

    @property
    def emotions(self) -> list[EmotionCategory]:
        """Categories present, in the fixed category order."""
        present = {e.emotion for e in self.entries}
        return [e for e in EmotionCategory if e in present]

    def words(self, emotion: EmotionCategory) -> list[str]:
        """Head words of one category (the set E_e), in file order."""
        return [e.word for e in self.entries if e.emotion == emotion]

    @property
    def head_words(self) -> list[str]:
        return [e.word for e in self.entries]

    @cached_property
    def matcher(self) -> AhoCorasick:
        ac = AhoCorasick()
        for entry in self.entries:
            for surface in entry.surfaces:
                ac.add(surface, entry.word)
        ac.build()
        return ac

    def to_dict(self) -> dict[str, Any]:
        emotions: dict[str, list[dict[str, Any]]] = {}
        for emotion in self.emotions:
            emotions[emotion.value] = [
                {"word": e.word, "variants": list(e.variants)}
                for e in self.entries
                if e.emotion == emotion
            ]
        return {
            "meta": {"name": self.name, "version": self.version},
            "emotions": emotions,
            "exclusion_terms": list(self.exclusion_terms),
            "proxy_phrases": list(self.proxy_phrases),
        }

    def without(self, words: set[str]) -> Lexicon:
        return Lexicon(
            entries=tuple(e for e in self.entries if e.word not in words),
            exclusion_terms=self.exclusion_terms,
            proxy_phrases=self.proxy_phrases,
            name=self.name,
            version=self.version,
        )


def _str_list(value: Any, what: str) -> list[str]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise LexiconError(f"{what} must be a list of strings")
    return [nfkc(v) for v in value]


def lexicon_from_dict(doc: Any) -> Lexicon:
    if not isinstance(doc, dict):
        raise LexiconError("lexicon document must be a JSON object")
    unknown = set(doc) - {"meta", "emotions", "exclusion_terms", "proxy_phrases"}
    if unknown:
        raise LexiconError(f"unknown top-level keys: {sorted(unknown)}")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise LexiconError("meta must be an object")
    emotions = doc.get("emotions")
    if not isinstance(emotions, dict) or not emotions:
        raise LexiconError("emotions must be a non-empty object")

    entries: list[LexiconEntry] = []
    for label, items in emotions.items():
        try:
            emotion = EmotionCategory(label)
        except ValueError:
            raise LexiconError(f"unknown emotion category {label!r}") from None
        if not isinstance(items, list):
            raise LexiconError(f"{label}: entries must be a list")
        if not items:
            raise LexiconError(f"empty category {label}")
        for item in items:
            if not isinstance(item, dict) or not isinstance(item.get("word"), str):
                raise LexiconError(f"{label}: each entry needs a string 'word'")
            variants = _str_list(item.get("variants", []), f"{label}/{item['word']} variants")
            entries.append(LexiconEntry(emotion, nfkc(item["word"]), tuple(variants)))

    return Lexicon(
        entries=tuple(entries),
        exclusion_terms=tuple(_str_list(doc.get("exclusion_terms", []), "exclusion_terms")),
        proxy_phrases=tuple(_str_list(doc.get("proxy_phrases", []), "proxy_phrases")),
        name=str(meta.get("name", "unnamed")),
        version=str(meta.get("version", "0")),
    )


def load_lexicon(path: str | Path) -> Lexicon:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise LexiconError(f"{path}: malformed JSON ({exc})") from exc
    except OSError as exc:
        raise LexiconError(f"{path}: {exc}") from exc
    return lexicon_from_dict(doc)


def dump_lexicon(lexicon: Lexicon) -> str:
    return json.dumps(lexicon.to_dict(), ensure_ascii=False, indent=2) + "\n"


@dataclass
class SizeReport:
    counts: dict[EmotionCategory, int]
    band: tuple[int, int]
    out_of_band: list[EmotionCategory] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.out_of_band

    def to_dict(self) -> dict[str, Any]:
        lo, hi = self.band
        return {
            "band": [lo, hi],
            "categories": {
                e.value: {"words": n, "in_band": lo <= n <= hi}
                for e, n in self.counts.items()
            },
            "ok": self.ok,
        }


def validate_sizes(lexicon: Lexicon, band: tuple[int, int] = DEFAULT_BAND) -> SizeReport:
    """Count |E_e| per category and flag those outside the inclusive band.

    Categories missing from the lexicon report 0 words and are flagged.
    """
    lo, hi = band
    counts = {e: len(lexicon.words(e)) for e in EmotionCategory}
    flagged = [e for e, n in counts.items() if not lo <= n <= hi]
    return SizeReport(counts=counts, band=band, out_of_band=flagged)


def covered_months(days: list[date]) -> list[tuple[int, int]]:
    """Calendar months whose every day lies inside the contiguous span of ``days``."""
    if not days:
        return []
    first, last = days[0], days[-1]
    months = []
    y, m = first.year, first.month
    while (y, m) <= (last.year, last.month):
        ndays = calendar.monthrange(y, m)[1]
        if date(y, m, 1) >= first and date(y, m, ndays) <= last:
            months.append((y, m))
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return months


def monthly_word_counts(counts: DailyCounts, words: list[str]) -> dict[str, dict[tuple[int, int], int]]:
    months = covered_months(list(counts.dates))
    table = {w: dict.fromkeys(months, 0) for w in words}
    for day, row in counts.word_counts.items():
        key = (day.year, day.month)
        for w in words:
            if key in table[w]:
                table[w][key] += row.get(w, 0)
    return table


def prune_low_frequency(
    lexicon: Lexicon, counts: DailyCounts, min_posts_per_month: int = 5
) -> tuple[Lexicon, list[str]]:
    """Drop words that stay below ``min_posts_per_month`` in every covered month.

    Only fully covered calendar months are considered. Counts are used as given,
    so filtered counts from ``aggregate`` prune on post-filter volume.
    """
    if not covered_months(list(counts.dates)):
        raise DataError("counts cover no complete calendar month")
    table = monthly_word_counts(counts, lexicon.head_words)
    removed = [
        w for w in lexicon.head_words
        if all(n < min_posts_per_month for n in table[w].values())
    ]
    if not removed:
        return lexicon, []
    pruned = lexicon.without(set(removed))
    for emotion in lexicon.emotions:
        if emotion not in pruned.emotions:
            logger.warning("pruning emptied category %s", emotion.value)
    return pruned, removed
