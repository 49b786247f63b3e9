"""Standalone SVG line charts for index and decomposition tables."""

from __future__ import annotations

from datetime import date
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .decompose import WEEKDAYS, Decomposition
from .index import IndexSeries
from .lexicon import EmotionCategory

COLORS = {
    EmotionCategory.ANGER: "#d62728",
    EmotionCategory.CONFUSION: "#9467bd",
    EmotionCategory.DEPRESSION: "#1f77b4",
    EmotionCategory.FATIGUE: "#8c564b",
    EmotionCategory.TENSION: "#ff7f0e",
    EmotionCategory.VIGOR: "#2ca02c",
    EmotionCategory.FRIENDLINESS: "#e377c2",
}

WIDTH = 900
PANEL_H = 260
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 150, 36, 40

Series = Sequence[tuple[float, float]]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _panel(title: str, lines: Mapping[EmotionCategory, Series], top: float,
           xlabels: list[tuple[float, str]]) -> list[str]:
    out = []
    x0, x1 = MARGIN_L, WIDTH - MARGIN_R
    y0, y1 = top + MARGIN_T, top + PANEL_H - MARGIN_B
    xs = [x for pts in lines.values() for x, _ in pts]
    ys = [y for pts in lines.values() for _, y in pts]
    if not xs:
        return out
    xmin, xmax = min(xs), max(xs)
    ymin, ymax = min(ys), max(ys)
    if xmax == xmin:
        xmax = xmin + 1
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    pad = (ymax - ymin) * 0.05
    ymin, ymax = ymin - pad, ymax + pad

    def sx(x: float) -> float:
        return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0)

    def sy(y: float) -> float:
        return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0)

    out.append(f'<text x="{x0}" y="{top + 22}" font-size="14" font-weight="bold">{escape(title)}</text>')
    out.append(f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" stroke="#000"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#000"/>')
    for v in _ticks(ymin, ymax):
        y = sy(v)
        out.append(f'<line x1="{x0 - 4}" y1="{_fmt(y)}" x2="{x0}" y2="{_fmt(y)}" stroke="#000"/>')
        out.append(f'<text x="{x0 - 6}" y="{_fmt(y + 4)}" font-size="10" text-anchor="end">{v:.3g}</text>')
    for xv, label in xlabels:
        if xmin <= xv <= xmax:
            x = sx(xv)
            out.append(f'<line x1="{_fmt(x)}" y1="{y1}" x2="{_fmt(x)}" y2="{y1 + 4}" stroke="#000"/>')
            out.append(f'<text x="{_fmt(x)}" y="{y1 + 16}" font-size="10" text-anchor="middle">{escape(label)}</text>')
    for i, (emotion, pts) in enumerate(lines.items()):
        color = COLORS[emotion]
        path = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{path}"/>')
        ly = y0 + 14 * i
        out.append(f'<line x1="{x1 + 12}" y1="{ly}" x2="{x1 + 32}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 + 36}" y="{ly + 4}" font-size="11">{escape(emotion.value)}</text>')
    return out


def _date_labels(days: list[date]) -> list[tuple[float, str]]:
    if not days:
        return []
    first, last = min(days), max(days)
    labels = []
    if (last - first).days > 400:
        for y in range(first.year, last.year + 2):
            d = date(y, 1, 1)
            labels.append((float(d.toordinal()), str(y)))
    else:
        y, m = first.year, first.month
        while date(y, m, 1) <= last:
            labels.append((float(date(y, m, 1).toordinal()), f"{y}-{m:02d}"))
            y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return labels


def _time_lines(maps: Mapping[EmotionCategory, Mapping[date, float]]) -> dict[EmotionCategory, Series]:
    return {
        e: [(float(d.toordinal()), v) for d, v in sorted(maps[e].items())]
        for e in sorted(maps, key=list(EmotionCategory).index)
    }


def _document(height: float, body: list[str]) -> str:
    return "\n".join([
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{int(height)}" '
        f'viewBox="0 0 {WIDTH} {int(height)}" font-family="sans-serif">',
        f'<rect width="{WIDTH}" height="{int(height)}" fill="#fff"/>',
        *body,
        "</svg>",
        "",
    ])


def index_svg(series: Mapping[EmotionCategory, IndexSeries], title: str = "Emotion index") -> str:
    maps = {e: s.values for e, s in series.items()}
    days = [d for m in maps.values() for d in m]
    return _document(PANEL_H, _panel(title, _time_lines(maps), 0, _date_labels(days)))


def decomposition_svg(decomps: Mapping[EmotionCategory, Decomposition]) -> str:
    """Three panels: long-term trend, yearly component, mean weekday effect."""
    trend = _time_lines({e: d.trend for e, d in decomps.items()})
    yearly = _time_lines({e: d.yearly for e, d in decomps.items()})
    weekly: dict[EmotionCategory, Series] = {}
    for e in sorted(decomps, key=list(EmotionCategory).index):
        by_day: dict[int, list[float]] = {}
        for d, v in decomps[e].weekly.items():
            by_day.setdefault(d.weekday(), []).append(v)
        weekly[e] = [(float(k), sum(v) / len(v)) for k, v in sorted(by_day.items())]
    days = [d for dec in decomps.values() for d in dec.trend]
    labels = _date_labels(days)
    body = _panel("(A) Long-term trend", trend, 0, labels)
    body += _panel("(B) Yearly component", yearly, PANEL_H, labels)
    body += _panel("(C) Day-of-week effect", weekly, 2 * PANEL_H,
                   [(float(i), name) for i, name in enumerate(WEEKDAYS)])
    return _document(3 * PANEL_H, body)
