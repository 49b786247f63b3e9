"""Post filtering, lexicon matching and per-day count aggregation."""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta, tzinfo
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator
from zoneinfo import ZoneInfo, ZoneInfoNotFoundError

from .errors import DataError
from .fileio import atomic_write_text
from .lexicon import Lexicon, nfkc

logger = logging.getLogger(__name__)

DEFAULT_TZ = "Asia/Tokyo"


class SourceClass(str, Enum):
    INDIVIDUAL = "individual"
    MASS_MEDIA = "mass_media"
    UNKNOWN = "unknown"


class TotalMode(str, Enum):
    DIRECT = "direct"
    PROXY = "proxy"


@dataclass(frozen=True)
class PostRecord:
    id: str
    timestamp: datetime
    text: str
    is_reply: bool = False
    is_retweet: bool = False
    has_url: bool = False
    source_class: SourceClass = SourceClass.UNKNOWN

    def __post_init__(self) -> None:
        if self.timestamp.tzinfo is None or self.timestamp.utcoffset() is None:
            raise DataError(f"post {self.id}: timestamp has no timezone")

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> PostRecord:
        try:
            ts = parse_timestamp(obj["ts"])
            src = SourceClass(obj.get("src", "unknown"))
            flags = {k: obj.get(k, False) for k in ("reply", "rt", "url")}
            if not all(isinstance(v, bool) for v in flags.values()):
                raise DataError("reply/rt/url must be booleans")
            text = obj.get("text", "")
            if not isinstance(text, str):
                raise DataError("text must be a string")
            return cls(
                id=str(obj["id"]),
                timestamp=ts,
                text=text,
                is_reply=flags["reply"],
                is_retweet=flags["rt"],
                has_url=flags["url"],
                source_class=src,
            )
        except KeyError as exc:
            raise DataError(f"post missing key {exc}") from None
        except ValueError as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"malformed post: {exc}") from None

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "ts": self.timestamp.isoformat(),
            "text": self.text,
            "reply": self.is_reply,
            "rt": self.is_retweet,
            "url": self.has_url,
            "src": self.source_class.value,
        }


def parse_timestamp(value: str) -> datetime:
    if value.endswith(("Z", "z")):
        value = value[:-1] + "+00:00"
    ts = datetime.fromisoformat(value)
    if ts.tzinfo is None:
        raise DataError(f"timestamp {value!r} has no UTC offset")
    return ts


def read_posts(path: str | Path) -> Iterator[PostRecord]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            try:
                yield PostRecord.from_json(obj)
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None


def posts_to_jsonl(posts: Iterable[PostRecord]) -> str:
    return "".join(json.dumps(p.to_json(), ensure_ascii=False) + "\n" for p in posts)


def filter_post(post: PostRecord, lexicon: Lexicon) -> bool:
    """True to keep the post, False to drop it."""
    if post.source_class is SourceClass.MASS_MEDIA:
        return False
    if post.has_url or post.is_reply or post.is_retweet:
        return False
    if lexicon.exclusion_terms:
        text = nfkc(post.text)
        if any(term in text for term in lexicon.exclusion_terms):
            return False
    return True


def match_words(text: str, lexicon: Lexicon) -> set[str]:
    """Head words with the word or any variant occurring in ``text``.

    Binary per post: repeated occurrences still yield the head word once.
    """
    return lexicon.matcher.labels_in(nfkc(text))


def resolve_tz(name: str | tzinfo) -> tzinfo:
    if isinstance(name, tzinfo):
        return name
    try:
        return ZoneInfo(name)
    except (ZoneInfoNotFoundError, ValueError):
        raise DataError(f"unknown timezone {name!r}") from None


def day_range(first: date, last: date) -> tuple[date, ...]:
    return tuple(first + timedelta(days=i) for i in range((last - first).days + 1))


@dataclass
class DailyCounts:
    """Per-day word counts w_k(t) and totals w_all(t).

    ``dates`` is the contiguous span. A day absent from ``totals`` is a gap;
    ``word_counts`` holds rows only for non-gap days.
    """

    dates: tuple[date, ...]
    word_counts: dict[date, dict[str, int]] = field(default_factory=dict)
    totals: dict[date, int] = field(default_factory=dict)

    @property
    def vocabulary(self) -> set[str]:
        return {w for row in self.word_counts.values() for w in row}

    def gaps(self) -> list[date]:
        return [d for d in self.dates if d not in self.totals]

    def scaled(self, factor: int) -> DailyCounts:
        return DailyCounts(
            dates=self.dates,
            word_counts={d: {w: n * factor for w, n in row.items()}
                         for d, row in self.word_counts.items()},
            totals={d: n * factor for d, n in self.totals.items()},
        )

    def __add__(self, other: DailyCounts) -> DailyCounts:
        """Pointwise merge of two shards; a gap plus a value is the value."""
        if not self.dates:
            return other
        if not other.dates:
            return self
        dates = day_range(min(self.dates[0], other.dates[0]),
                          max(self.dates[-1], other.dates[-1]))
        totals = dict(self.totals)
        for d, n in other.totals.items():
            totals[d] = totals.get(d, 0) + n
        words = {d: dict(row) for d, row in self.word_counts.items()}
        for d, row in other.word_counts.items():
            acc = words.setdefault(d, {})
            for w, n in row.items():
                acc[w] = acc.get(w, 0) + n
        vocab = self.vocabulary | other.vocabulary
        for d in totals:
            acc = words.setdefault(d, {})
            for w in vocab:
                acc.setdefault(w, 0)
        return DailyCounts(dates, words, totals)

    def to_csv(self) -> tuple[str, str]:
        """Canonical (counts CSV, totals CSV) text."""
        cbuf, tbuf = io.StringIO(), io.StringIO()
        cw = csv.writer(cbuf, lineterminator="\n")
        tw = csv.writer(tbuf, lineterminator="\n")
        cw.writerow(["date", "word", "count"])
        tw.writerow(["date", "total"])
        for d in self.dates:
            iso = d.isoformat()
            tw.writerow([iso, self.totals.get(d, "")])
            for w, n in sorted(self.word_counts.get(d, {}).items()):
                cw.writerow([iso, w, n])
        return cbuf.getvalue(), tbuf.getvalue()


def aggregate(
    posts: Iterable[PostRecord],
    lexicon: Lexicon,
    total_mode: TotalMode | str = TotalMode.DIRECT,
    day_boundary_tz: str | tzinfo = DEFAULT_TZ,
) -> DailyCounts:
    """Filter posts, bucket survivors into local calendar days and count.

    Every head word gets an explicit count (possibly 0) on each day with
    surviving posts; days without any survivor are gaps.
    """
    tz = resolve_tz(day_boundary_tz)
    mode = TotalMode(total_mode)
    words = lexicon.head_words
    totals: dict[date, int] = {}
    counts: dict[date, dict[str, int]] = {}
    proxies = lexicon.proxy_phrases
    if mode is TotalMode.PROXY and not proxies:
        raise DataError("proxy total mode needs at least one proxy phrase")

    survivors = 0
    for post in posts:
        if not filter_post(post, lexicon):
            continue
        survivors += 1
        day = post.timestamp.astimezone(tz).date()
        row = counts.get(day)
        if row is None:
            row = counts[day] = dict.fromkeys(words, 0)
            totals[day] = 0
        text = nfkc(post.text)
        for w in lexicon.matcher.labels_in(text):
            row[w] += 1
        if mode is TotalMode.DIRECT or any(p in text for p in proxies):
            totals[day] += 1

    if not survivors:
        raise DataError("no data: every post was filtered out or the stream was empty")
    dates = day_range(min(counts), max(counts))
    return DailyCounts(
        dates=dates,
        word_counts={d: counts[d] for d in dates if d in counts},
        totals={d: totals[d] for d in dates if d in totals},
    )


def _read_csv(path: str | Path, header: list[str]) -> list[list[str]]:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != header:
        raise DataError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def _parse_date(value: str, where: str) -> date:
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise DataError(f"{where}: bad date {value!r}") from None


def _parse_count(value: str, where: str) -> int:
    try:
        n = int(value)
    except ValueError:
        raise DataError(f"{where}: bad count {value!r}") from None
    if n < 0:
        raise DataError(f"{where}: negative count {n}")
    return n


def load_counts(counts_path: str | Path, totals_path: str | Path) -> DailyCounts:
    dates: list[date] = []
    totals: dict[date, int] = {}
    for i, row in enumerate(_read_csv(totals_path, ["date", "total"]), 2):
        where = f"{totals_path}:{i}"
        if len(row) != 2:
            raise DataError(f"{where}: expected 2 fields")
        d = _parse_date(row[0], where)
        if dates and d != dates[-1] + timedelta(days=1):
            raise DataError(f"{where}: dates must be contiguous and increasing")
        dates.append(d)
        if row[1] != "":
            totals[d] = _parse_count(row[1], where)
    if not dates:
        raise DataError(f"{totals_path}: no rows")

    word_counts: dict[date, dict[str, int]] = {}
    for i, row in enumerate(_read_csv(counts_path, ["date", "word", "count"]), 2):
        where = f"{counts_path}:{i}"
        if len(row) != 3:
            raise DataError(f"{where}: expected 3 fields")
        d = _parse_date(row[0], where)
        if d not in totals:
            raise DataError(f"{where}: word count on a gap or out-of-span day {d}")
        if not row[1]:
            raise DataError(f"{where}: empty word")
        day_row = word_counts.setdefault(d, {})
        if row[1] in day_row:
            raise DataError(f"{where}: duplicate (date, word) key ({d}, {row[1]})")
        day_row[row[1]] = _parse_count(row[2], where)
    return DailyCounts(tuple(dates), word_counts, totals)


def write_counts(counts: DailyCounts, counts_path: str | Path, totals_path: str | Path) -> None:
    ctext, ttext = counts.to_csv()
    atomic_write_text(counts_path, ctext)
    atomic_write_text(totals_path, ttext)
