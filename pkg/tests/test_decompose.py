import json
from datetime import date, timedelta

import numpy as np
import pytest

from emoindex.decompose import (
    ModelFit, ModelSpec, build_design, components, decompose, decompositions_to_csv,
    exact_residual, fit, load_decompositions, predict,
)
from emoindex.errors import DataError, UsageError
from emoindex.lexicon import EmotionCategory
from emoindex.synth import SynthSpec, gen_index_series

START = date(2021, 1, 4)  # a Monday
WEEKLY = (0.05, 0.03, 0.01, 0.0, -0.01, -0.03, -0.05)


def days(n, start=START):
    return [start + timedelta(days=i) for i in range(n)]


def column_count(n_cp, order, weekly):
    return 2 + n_cp + 2 * order + (6 if weekly else 0)


def test_design_column_count():
    spec = ModelSpec(n_changepoints=3, yearly_order=2, weekly=True)
    basis, X = build_design(days(100), spec)
    assert X.shape == (100, column_count(3, 2, True)) == (100, 15)
    assert len(basis.changepoints) == 3


def test_bare_linear_design():
    _, X = build_design(days(30), ModelSpec(n_changepoints=0, yearly_order=0, weekly=False))
    assert X.shape == (30, 2)
    assert X[0, 1] == 0.0 and X[-1, 1] == 1.0
    np.testing.assert_array_equal(X[:, 0], 1.0)


def test_weekday_dummies_sum_to_zero():
    basis, X = build_design(days(28), ModelSpec(n_changepoints=2, yearly_order=1))
    week = X[:7, basis.slices()[2]]
    np.testing.assert_array_equal(week.sum(axis=0), np.zeros(6))


def test_changepoints_within_range():
    d = days(200)
    basis, _ = build_design(d, ModelSpec(n_changepoints=25, changepoint_range=0.8))
    assert len(basis.changepoints) == 25
    assert basis.changepoints[-1] <= d[int(200 * 0.8) - 1]
    assert list(basis.changepoints) == sorted(set(basis.changepoints))
    # more requested changepoints than eligible days are capped
    basis, _ = build_design(days(14), ModelSpec(n_changepoints=25, changepoint_range=0.5))
    assert len(basis.changepoints) == 6


def test_design_errors():
    with pytest.raises(DataError, match="too few"):
        build_design(days(13), ModelSpec())
    d = days(20)
    with pytest.raises(DataError, match="duplicate"):
        build_design(d[:10] + [d[9]] + d[10:], ModelSpec())


@pytest.mark.parametrize("kw", [dict(n_changepoints=-1), dict(changepoint_range=0),
                                dict(changepoint_range=1.5), dict(yearly_order=-1),
                                dict(ridge_trend=-1), dict(outlier_mad_k=-0.1)])
def test_model_spec_invariants(kw):
    with pytest.raises(UsageError):
        ModelSpec(**kw)


def test_constant_series():
    series = {d: 3.0 for d in days(400)}
    dec = decompose(series, ModelSpec())
    for d in series:
        assert abs(dec.trend[d] - 3) < 1e-6
        assert abs(dec.yearly[d]) < 1e-6
        assert abs(dec.weekly[d]) < 1e-6
    pred = predict(dec.fit, list(series))
    assert max(abs(v - 3) for v in pred.values()) < 1e-6


def test_linear_series_slope_and_extrapolation():
    d = days(400)
    series = {day: 2 + 0.01 * i for i, day in enumerate(d)}
    model = fit(series, ModelSpec())
    pred = predict(model, d)
    slope = (pred[d[-1]] - pred[d[0]]) / (len(d) - 1)
    assert slope == pytest.approx(0.01, rel=0.01)
    future = [d[-1] + timedelta(days=k) for k in range(1, 31)]
    ahead = predict(model, future)
    for k, day in enumerate(future, 1):
        truth = 2 + 0.01 * (len(d) - 1 + k)
        assert ahead[day] == pytest.approx(truth, rel=0.02)


def test_weekly_pattern_recovered():
    spec = SynthSpec(START, START + timedelta(days=729), weekly_pattern=WEEKLY,
                     noise_sigma=0.002, seed=4)
    series, _ = gen_index_series(spec)
    model = fit(series.values, ModelSpec())
    effects = model.weekly_effects()
    assert np.max(np.abs(np.array(effects) - WEEKLY)) < 0.01
    assert sum(effects) == 0.0
    monday, sunday = START + timedelta(days=735), START + timedelta(days=741)
    pred = predict(model, [monday, sunday])
    assert pred[monday] - pred[sunday] == pytest.approx(0.10, abs=0.02)


def test_reconstruction_identity_exact():
    spec = SynthSpec(START, START + timedelta(days=500), trend_slope=1e-4,
                     yearly_coeffs=((1, 0.1, 0.05),), weekly_pattern=WEEKLY,
                     noise_sigma=0.05, seed=1)
    series, _ = gen_index_series(spec)
    dec = decompose(series)
    for d in dec.days():
        assert dec.observed[d] - (dec.trend[d] + dec.yearly[d] + dec.weekly[d] + dec.residual[d]) == 0.0


def test_exact_residual_adversarial():
    rng = np.random.default_rng(0)
    obs = rng.uniform(-5, 5, 5000)
    fitted = obs + rng.normal(0, 1, 5000) * rng.choice([1e-12, 1e-3, 1.0], 5000)
    for o, f in zip(obs.tolist(), fitted.tolist()):
        assert f + exact_residual(o, f) == o


def test_series_too_short():
    with pytest.raises(DataError, match="too few"):
        decompose({d: 1.0 for d in days(13)})


def test_gaps_are_skipped():
    series = {d: 1.0 + 0.001 * i for i, d in enumerate(days(100))}
    series[START + timedelta(days=10)] = float("nan")
    dec = decompose(series)
    assert START + timedelta(days=10) not in dec.observed
    assert len(dec.observed) == 99


def test_yearly_component_zero_mean_over_whole_periods():
    spec = SynthSpec(START, START + timedelta(days=3 * 365), yearly_coeffs=((1, 0.2, 0.1), (3, 0.05, 0)),
                     noise_sigma=0.01, seed=2)
    series, _ = gen_index_series(spec)
    model = fit(series.values, ModelSpec())
    # 1461 days is exactly four periods of 365.25 days
    span = [date(2030, 1, 1) + timedelta(days=i) for i in range(1461)]
    _, yearly, _ = components(model, span)
    assert abs(yearly.mean()) < 1e-8


def test_determinism_bit_identical():
    spec = SynthSpec(START, START + timedelta(days=400), trend_slope=1e-4,
                     weekly_pattern=WEEKLY, noise_sigma=0.02, seed=3)
    series, _ = gen_index_series(spec)
    a, b = fit(series.values), fit(dict(series.values))
    assert a.coefficients.tobytes() == b.coefficients.tobytes()
    assert decompositions_to_csv({EmotionCategory.VIGOR: decompose(series)}) == \
        decompositions_to_csv({EmotionCategory.VIGOR: decompose(series)})


def test_ridge_monotonicity():
    spec = SynthSpec(START, START + timedelta(days=200), yearly_coeffs=((1, 0.1, 0.1),),
                     weekly_pattern=WEEKLY, noise_sigma=0.05, seed=8)
    series, _ = gen_index_series(spec)
    norms = []
    for lam in (1e-4, 1.0, 100.0):
        model = fit(series.values, ModelSpec(yearly_order=3, ridge_seasonal=lam, outlier_mad_k=0))
        _, sy, sw = model.basis.slices()
        norms.append(np.linalg.norm(np.concatenate([model.coefficients[sy], model.coefficients[sw]])))
    assert norms[0] >= norms[1] >= norms[2]
    assert norms[2] < norms[0]


def test_solver_cross_check():
    """Normal-equation solve vs. SVD least squares on the augmented system."""
    spec = SynthSpec(START, START + timedelta(days=49), trend_slope=2e-3,
                     weekly_pattern=WEEKLY, noise_sigma=0.02, seed=5)
    series, _ = gen_index_series(spec)
    mspec = ModelSpec(n_changepoints=3, yearly_order=2, outlier_mad_k=0)
    model = fit(series.values, mspec)
    d = sorted(series.values)
    y = np.array([series.values[x] for x in d])
    basis, X = build_design(d, mspec)
    sqrt_pen = np.sqrt(basis.penalty())
    A = np.vstack([X, np.diag(sqrt_pen)])
    b = np.concatenate([y, np.zeros(X.shape[1])])
    ref, *_ = np.linalg.lstsq(A, b, rcond=None)
    np.testing.assert_allclose(model.coefficients, ref, rtol=1e-8, atol=1e-10)


def test_singular_without_penalty():
    d = days(30)
    # 29 unpenalized hinges + 2 trend + 6 weekday columns exceed 30 observations
    spec = ModelSpec(n_changepoints=40, changepoint_range=1.0, yearly_order=0, weekly=True,
                     ridge_trend=0, ridge_seasonal=0, outlier_mad_k=0)
    with pytest.raises(DataError, match="singular"):
        fit({x: float(i % 3) for i, x in enumerate(d)}, spec)


def test_outlier_refit_excludes_spike():
    spec = SynthSpec(START, START + timedelta(days=399), weekly_pattern=WEEKLY,
                     noise_sigma=0.01, seed=6)
    series, _ = gen_index_series(spec)
    spike = START + timedelta(days=200)
    values = dict(series.values)
    values[spike] *= 3
    robust = fit(values, ModelSpec(outlier_mad_k=5))
    naive = fit(values, ModelSpec(outlier_mad_k=0))
    assert spike in robust.excluded
    clean = fit(series.values, ModelSpec(outlier_mad_k=0))
    around = [spike + timedelta(days=k) for k in range(-3, 4)]
    err = lambda m: max(abs(predict(m, around)[x] - predict(clean, around)[x]) for x in around)
    assert err(robust) < err(naive)


def test_fit_json_round_trip():
    spec = SynthSpec(START, START + timedelta(days=120), trend_slope=1e-3, noise_sigma=0.01, seed=2)
    series, _ = gen_index_series(spec)
    model = fit(series.values)
    back = ModelFit.from_dict(json.loads(json.dumps(model.to_dict())))
    future = days(10, START + timedelta(days=121))
    assert predict(back, future) == predict(model, future)


def test_decomposition_csv_round_trip(tmp_path):
    spec = SynthSpec(START, START + timedelta(days=60), weekly_pattern=WEEKLY, noise_sigma=0.01, seed=2)
    series, _ = gen_index_series(spec)
    dec = decompose(series)
    p = tmp_path / "d.csv"
    p.write_text(decompositions_to_csv({EmotionCategory.TENSION: dec}), encoding="utf-8")
    back = load_decompositions(p)[EmotionCategory.TENSION]
    assert back.residual == dec.residual and back.trend == dec.trend
