import json
from datetime import date, datetime, timedelta, timezone
from pathlib import Path

import pytest

from emoindex.ingest import PostRecord, SourceClass
from emoindex.lexicon import EmotionCategory, lexicon_from_dict

ROOT = Path(__file__).resolve().parents[1]
SAMPLE = ROOT / "sample"
JST = timezone(timedelta(hours=9))


def lexicon_doc(per_category=3, **overrides):
    """Seven categories of ASCII-free placeholder words: <emotion initial><n>."""
    kana = "アイウエオカキクケコサシスセソタチツテトナニヌネノ"
    emotions = {}
    for i, e in enumerate(EmotionCategory):
        emotions[e.value] = [
            {"word": f"{kana[i]}{kana[j]}語", "variants": []} for j in range(per_category)
        ]
    doc = {
        "meta": {"name": "test", "version": "1"},
        "emotions": emotions,
        "exclusion_terms": ["拡散希望"],
        "proxy_phrases": ["。"],
    }
    doc.update(overrides)
    return doc


def make_post(text, day=date(2024, 1, 1), hour=12, **kw):
    ts = datetime(day.year, day.month, day.day, hour, tzinfo=JST)
    kw.setdefault("source_class", SourceClass.INDIVIDUAL)
    return PostRecord(id=kw.pop("id", f"{day}-{hour}-{text}"), timestamp=ts, text=text, **kw)


@pytest.fixture
def sample_lexicon():
    from emoindex.lexicon import load_lexicon
    return load_lexicon(SAMPLE / "lexicon.json")


@pytest.fixture
def small_lexicon():
    return lexicon_from_dict(lexicon_doc())


@pytest.fixture
def write_json(tmp_path):
    def _write(obj, name="doc.json"):
        p = tmp_path / name
        p.write_text(json.dumps(obj, ensure_ascii=False), encoding="utf-8")
        return p
    return _write
