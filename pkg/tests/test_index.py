import json
import logging
import math
import random
import statistics
from datetime import date

import pytest
from hypothesis import assume, given, strategies as st

from emoindex.errors import DataError, UsageError
from emoindex.index import (
    IndexConfig, build_all_indices, build_zscore_indices, generalized_mean, load_index,
    normalize_baseline, ratio_series, write_index, zscore_index,
)
from emoindex.ingest import DailyCounts, day_range
from emoindex.lexicon import EmotionCategory, lexicon_from_dict

from conftest import lexicon_doc

E = EmotionCategory
D1, D2, D3 = date(2024, 1, 1), date(2024, 1, 2), date(2024, 1, 3)


def power_mean_oracle(xs, alpha):
    return (sum(x ** alpha for x in xs) / len(xs)) ** (1 / alpha)


def test_ratio_definition(small_lexicon):
    w = small_lexicon.words(E.ANGER)
    counts = DailyCounts((D1,), {D1: {w[0]: 3, w[1]: 0, w[2]: 1}}, {D1: 10})
    rs = ratio_series(counts, small_lexicon, E.ANGER)
    assert rs.ratios[D1] == {w[0]: 0.3, w[1]: 0.0, w[2]: 0.1}


def test_zero_total_is_gap(small_lexicon):
    w = small_lexicon.words(E.ANGER)
    counts = DailyCounts((D1, D2, D3), {D1: dict.fromkeys(w, 1), D2: dict.fromkeys(w, 0)},
                         {D1: 10, D2: 0})
    rs = ratio_series(counts, small_lexicon, E.ANGER)
    assert set(rs.ratios) == {D1}


def test_word_absent_from_counts_is_zero_with_warning(small_lexicon, caplog):
    w = small_lexicon.words(E.ANGER)
    counts = DailyCounts((D1, D2), {D1: {w[0]: 2, w[1]: 4}, D2: {w[0]: 6, w[1]: 1}},
                         {D1: 10, D2: 20})
    with caplog.at_level(logging.WARNING):
        rs = ratio_series(counts, small_lexicon, E.ANGER)
    assert "absent from counts" in caplog.text
    # oracle: direct table lookup, missing entries read as 0
    for d in (D1, D2):
        for word in w:
            assert rs.ratios[d][word] == counts.word_counts[d].get(word, 0) / counts.totals[d]


def test_unmeasured_word_on_one_day_recorded(small_lexicon):
    w = small_lexicon.words(E.ANGER)
    counts = DailyCounts((D1, D2), {D1: dict.fromkeys(w, 1), D2: {w[0]: 1}}, {D1: 5, D2: 5})
    rs = ratio_series(counts, small_lexicon, E.ANGER)
    assert rs.unmeasured == {D2: 2}
    assert rs.ratios[D2][w[1]] == 0


def test_ratio_series_missing_emotion():
    doc = lexicon_doc()
    del doc["emotions"]["Friendliness"]
    lex = lexicon_from_dict(doc)
    counts = DailyCounts((D1,), {D1: {}}, {D1: 1})
    with pytest.raises(DataError, match="Friendliness"):
        ratio_series(counts, lex, E.FRIENDLINESS)


def test_generalized_mean_examples():
    # oracle: closed form ((sqrt(.01) + sqrt(.04)) / 2)^2 = 0.15^2
    assert generalized_mean([0.01, 0.04], 0.5) == pytest.approx(0.0225, rel=1e-14)
    assert generalized_mean([0.01, 0.04], 0.5) == pytest.approx(power_mean_oracle([0.01, 0.04], 0.5), rel=1e-14)
    assert generalized_mean([0.01, 0.04], 1.0) == pytest.approx(0.025, rel=1e-15)
    for alpha in (0.1, 0.5, 1, 3):
        assert generalized_mean([0.037] * 9, alpha) == 0.037


def test_generalized_mean_zero_ratio():
    assert generalized_mean([0.0, 0.04], 0.5) == pytest.approx(0.01, rel=1e-14)
    assert generalized_mean([0.0, 0.0], 0.5) == 0.0


@pytest.mark.parametrize("args,exc", [(([], 0.5), DataError), (([0.1, -0.1], 0.5), DataError),
                                      (([0.1], 0.0), UsageError), (([0.1], -1), UsageError)])
def test_generalized_mean_errors(args, exc):
    with pytest.raises(exc):
        generalized_mean(*args)


ratios = st.lists(st.floats(0, 0.1, allow_nan=False), min_size=1, max_size=35)
alphas = st.sampled_from([0.25, 0.5, 1.0, 2.0])


@given(ratios, alphas)
def test_generalized_mean_bounds(xs, alpha):
    m = generalized_mean(xs, alpha)
    assert min(xs) <= m <= max(xs)
    if min(xs) < max(xs) and min(xs) > 0:
        assert min(xs) < m < max(xs)


@given(ratios, alphas, st.data())
def test_generalized_mean_monotone(xs, alpha, data):
    i = data.draw(st.integers(0, len(xs) - 1))
    bump = data.draw(st.floats(0, 0.1))
    ys = list(xs)
    ys[i] += bump
    assert generalized_mean(ys, alpha) >= generalized_mean(xs, alpha) * (1 - 1e-12)


@given(ratios, alphas, st.floats(1e-3, 1e3))
def test_generalized_mean_homogeneous(xs, alpha, c):
    assume(max(xs) > 1e-300)
    lhs = generalized_mean([c * x for x in xs], alpha)
    assert lhs == pytest.approx(c * generalized_mean(xs, alpha), rel=1e-12, abs=1e-300)


def test_dominance_damping():
    """A word 100x the category median contributes less under alpha=0.5."""
    base = [0.001 * (1 + 0.02 * i) for i in range(24)]
    median = statistics.median(base)
    dominant = 100 * median
    xs = base + [dominant]
    share_linear = dominant / sum(xs)
    share_sqrt = dominant ** 0.5 / sum(x ** 0.5 for x in xs)
    assert share_sqrt < share_linear
    # and the index moves much less when the dominant word doubles
    bumped = base + [2 * dominant]
    rel_change_linear = generalized_mean(bumped, 1.0) / generalized_mean(xs, 1.0) - 1
    rel_change_sqrt = generalized_mean(bumped, 0.5) / generalized_mean(xs, 0.5) - 1
    assert rel_change_sqrt < rel_change_linear


def test_normalize_baseline_example():
    cfg = IndexConfig(0.5, D1, D2)
    s = normalize_baseline({D1: 2.0, D2: 4.0}, cfg)
    assert s.values == {D1: pytest.approx(2 / 3, rel=1e-15), D2: pytest.approx(4 / 3, rel=1e-15)}


def test_normalize_baseline_constant_and_window():
    cfg = IndexConfig(0.5, D2, D3)
    s = normalize_baseline({D1: 5.0, D2: 0.7, D3: 0.7}, cfg)
    assert s.values[D2] == s.values[D3] == 1.0
    assert s.values[D1] == pytest.approx(5 / 0.7)


def test_normalize_baseline_errors():
    with pytest.raises(DataError, match="no data"):
        normalize_baseline({D1: 1.0}, IndexConfig(0.5, D2, D3))
    with pytest.raises(DataError, match="mean is 0"):
        normalize_baseline({D1: 0.0, D2: 0.0}, IndexConfig(0.5, D1, D2))


def test_index_config_invariants():
    with pytest.raises(UsageError):
        IndexConfig(alpha=0)
    with pytest.raises(UsageError):
        IndexConfig(0.5, D2, D1)


def test_zscore_example():
    z = zscore_index({D1: 1.0, D2: 2.0, D3: 3.0})
    # oracle: two-pass population statistics
    vals = [1.0, 2.0, 3.0]
    mean = sum(vals) / 3
    sigma = math.sqrt(sum((v - mean) ** 2 for v in vals) / 3)
    assert sigma == pytest.approx(0.816496580927726)
    assert [z[d] for d in (D1, D2, D3)] == [pytest.approx((v - mean) / sigma, abs=1e-15) for v in vals]
    assert z[D3] == pytest.approx(1.224744871391589)


def test_zscore_errors():
    with pytest.raises(DataError, match="standard deviation"):
        zscore_index({D1: 2.0, D2: 2.0})
    with pytest.raises(DataError, match="at least 2"):
        zscore_index({D1: 2.0})


@given(st.lists(st.floats(0, 1, allow_nan=False), min_size=2, max_size=60))
def test_zscore_standardizes(vals):
    assume(statistics.pstdev(vals) > 1e-6)
    r = {date.fromordinal(738000 + i): v for i, v in enumerate(vals)}
    z = list(zscore_index(r).values())
    assert abs(statistics.fmean(z)) < 1e-9
    assert abs(statistics.pstdev(z) - 1) < 1e-9


def _synthetic_counts(lexicon, days, seed=0):
    rng = random.Random(seed)
    rows = {d: {w: rng.randint(0, 50) for w in lexicon.head_words} for d in days}
    return DailyCounts(tuple(days), rows, {d: 1000 + rng.randint(0, 100) for d in days})


def test_build_all_indices(small_lexicon):
    days = day_range(date(2023, 12, 1), date(2024, 1, 31))
    cfg = IndexConfig(0.5, date(2024, 1, 1), date(2024, 1, 31))
    out = build_all_indices(_synthetic_counts(small_lexicon, days), small_lexicon, cfg)
    assert set(out) == set(EmotionCategory)
    for s in out.values():
        window = [v for d, v in s.values.items() if d >= cfg.baseline_start]
        assert abs(math.fsum(window) / len(window) - 1) < 1e-9


def test_build_all_indices_missing_category():
    doc = lexicon_doc()
    del doc["emotions"]["Friendliness"]
    lex = lexicon_from_dict(doc)
    days = day_range(D1, D3)
    with pytest.raises(DataError, match="Friendliness"):
        build_all_indices(_synthetic_counts(lex, days), lex, IndexConfig(0.5, D1, D3))


def test_uniform_scaling_leaves_indices_identical(small_lexicon):
    days = day_range(date(2024, 1, 1), date(2024, 2, 15))
    cfg = IndexConfig(0.5, date(2024, 1, 1), date(2024, 1, 31))
    counts = _synthetic_counts(small_lexicon, days, seed=9)
    a = build_all_indices(counts, small_lexicon, cfg)
    b = build_all_indices(counts.scaled(2), small_lexicon, cfg)
    assert {e: s.values for e, s in a.items()} == {e: s.values for e, s in b.items()}


def test_gap_days_propagate(small_lexicon):
    days = day_range(D1, D3)
    counts = _synthetic_counts(small_lexicon, days)
    del counts.totals[D2]
    del counts.word_counts[D2]
    out = build_all_indices(counts, small_lexicon, IndexConfig(0.5, D1, D3))
    assert all(D2 not in s.values for s in out.values())


def test_zscore_variant_builds(small_lexicon):
    days = day_range(D1, date(2024, 1, 20))
    out = build_zscore_indices(_synthetic_counts(small_lexicon, days), small_lexicon)
    for s in out.values():
        assert abs(statistics.fmean(s.values.values())) < 1e-9


def test_index_csv_round_trip(tmp_path, small_lexicon):
    days = day_range(D1, date(2024, 1, 10))
    cfg = IndexConfig(0.5, D1, date(2024, 1, 10))
    out = build_all_indices(_synthetic_counts(small_lexicon, days), small_lexicon, cfg)
    p = tmp_path / "index.csv"
    write_index(out, p, small_lexicon)
    back = load_index(p)
    assert {e: s.values for e, s in back.items()} == {e: s.values for e, s in out.items()}
    assert all(s.config == cfg for s in back.values())
    lines = p.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "date,emotion,value"
    keys = [tuple(line.split(",")[:2]) for line in lines[1:]]
    assert keys == sorted(keys)
    meta = json.loads((tmp_path / "index.json").read_text(encoding="utf-8"))
    assert meta["config"]["alpha"] == 0.5 and meta["lexicon"]["version"] == "1"
