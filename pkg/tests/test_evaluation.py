import math

import numpy as np
import pytest

from farecast import sarima
from farecast.errors import NumericalError
from farecast.evaluation import (
    EvalReport,
    evaluate_one_step,
    event_metrics,
    paired_t_test,
    rmse,
    rolling_origin_cv,
    smape,
    smape_difference,
    student_t_cdf,
)
from farecast.sarima import SarimaOrder, SarimaParams
from oracles import rmse_loop, smape_loop, t_cdf_quad


# ------------------------------------------------------------------- metrics


def test_rmse_small_example():
    assert rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5))


def test_smape_small_example():
    assert smape([100.0], [50.0]) == pytest.approx(200.0 / 3.0)


def test_smape_double_zero_contributes_nothing():
    assert smape([0.0, 2.0], [0.0, 2.0]) == 0.0
    assert smape([0.0], [1.0]) == pytest.approx(200.0)


def test_metrics_match_loop_oracles():
    rng = np.random.default_rng(9)
    a = rng.normal(100.0, 20.0, size=50)
    p = a + rng.normal(0.0, 5.0, size=50)
    a[0] = p[0] = 0.0
    assert rmse(a, p) == pytest.approx(rmse_loop(a, p), abs=1e-12)
    assert smape(a, p) == pytest.approx(smape_loop(a, p), abs=1e-12)


def test_metrics_validate_input():
    with pytest.raises(ValueError):
        rmse([1.0, 2.0], [1.0])
    with pytest.raises(ValueError):
        smape([], [])


# ------------------------------------------------------------- paired t-test


def test_t_cdf_matches_quadrature():
    for df in (1, 5, 9, 30):
        for t in (-3.0, -1.8331, -0.5, 0.0, 1.2, 2.7):
            assert student_t_cdf(t, df) == pytest.approx(t_cdf_quad(t, df), abs=1e-10)


def test_t_cdf_frozen_value_and_symmetry():
    assert student_t_cdf(-1.8331, 9) == pytest.approx(0.0500, abs=5e-5)
    assert student_t_cdf(0.0, 7) == 0.5
    assert student_t_cdf(2.3, 12) + student_t_cdf(-2.3, 12) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        student_t_cdf(1.0, 0)
    assert math.isnan(student_t_cdf(math.nan, 5))


def test_paired_t_test_favours_smaller_errors():
    a = np.array([1.0, -1.0, 1.0, -1.0])
    b = np.array([2.0, -3.0, 2.0, 3.0])
    res = paired_t_test(a, b)
    assert res.df == 3
    assert res.mean_diff == pytest.approx(-1.5)
    assert res.statistic < 0
    assert res.p_value == pytest.approx(t_cdf_quad(res.statistic, 3), abs=1e-10)
    assert res.p_value < 0.05
    flipped = paired_t_test(b, a)
    assert flipped.statistic == pytest.approx(-res.statistic)
    assert flipped.p_value == pytest.approx(1.0 - res.p_value)


def test_paired_t_test_uses_absolute_errors():
    # identical magnitudes with opposite signs are not a difference
    with pytest.raises(ValueError):
        paired_t_test([1.0, -2.0], [-1.0, 2.0])


def test_paired_t_test_degenerate_input():
    with pytest.raises(ValueError):
        paired_t_test([1.0], [2.0])
    with pytest.raises(ValueError):
        paired_t_test([1.0, 1.0], [2.0, 2.0])
    with pytest.raises(ValueError):
        paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0])


# ------------------------------------------------------------------- reports


def _report(smape_test, **kw):
    base = dict(
        station="S",
        model="M0",
        horizon=1,
        n_train=10,
        n_test=5,
        rmse_train=1.0,
        smape_train=1.0,
        rmse_test=1.0,
        smape_test=smape_test,
        aic=0.0,
        errors_test=np.zeros(5),
    )
    base.update(kw)
    return EvalReport(**base)


def test_smape_difference_sign():
    assert smape_difference(_report(10.0), _report(12.5)) == pytest.approx(-2.5)


def test_event_metrics_restrict_to_mask(caplog):
    actual = np.array([10.0, 20.0, 30.0, 40.0])
    pred = np.array([12.0, 20.0, 27.0, 40.0])
    mask = np.array([True, False, True, False])
    r, s = event_metrics(actual, pred, mask)
    assert r == pytest.approx(rmse([10.0, 30.0], [12.0, 27.0]))
    assert s == pytest.approx(smape([10.0, 30.0], [12.0, 27.0]))
    assert event_metrics(actual, pred, np.zeros(4, dtype=bool)) == (None, None)
    assert "mask is empty" in caplog.text
    with pytest.raises(ValueError):
        event_metrics(actual, pred, np.array([True, False]))


# -------------------------------------------------------- one-step evaluation


def test_evaluate_one_step_slices_and_scores():
    rng = np.random.default_rng(20)
    y = sarima.simulate(SarimaOrder(1, 0, 0), SarimaParams(ar=(0.6,), mean=50.0), 160, rng)
    fit, rep = evaluate_one_step(
        y, SarimaOrder(1, 0, 0), (0, 120), (120, 160), station="S", model="M0"
    )
    assert (rep.station, rep.model, rep.horizon) == ("S", "M0", 1)
    assert rep.n_train == 120 and rep.n_test == 40
    assert rep.aic == fit.aic
    preds = sarima.one_step_predictions(fit, y[:160])
    assert rep.rmse_test == pytest.approx(rmse(y[120:160], preds[120:]))
    assert rep.rmse_train == pytest.approx(rmse(y[:120], preds[:120]))
    assert np.allclose(rep.errors_test, preds[120:] - y[120:160])


def test_evaluate_one_step_skips_differenced_prefix():
    rng = np.random.default_rng(21)
    y = np.cumsum(rng.normal(size=60)) + 100.0
    _, rep = evaluate_one_step(y, SarimaOrder(0, 1, 0), (0, 40), (40, 60))
    assert rep.n_train == 39  # one window lost to differencing
    assert math.isfinite(rep.rmse_train)
    assert math.isfinite(rep.rmse_test)


def test_evaluate_one_step_event_mask():
    rng = np.random.default_rng(22)
    y = rng.normal(100.0, 5.0, size=80)
    mask = np.zeros(80, dtype=bool)
    mask[70:74] = True
    _, rep = evaluate_one_step(y, SarimaOrder(1, 0, 0), (0, 60), (60, 80), event_mask=mask)
    preds = y[60:80] - rep.errors_test * -1.0  # predicted = actual + errors
    assert rep.rmse_event == pytest.approx(rmse(y[70:74], preds[10:14]))
    assert rep.smape_event is not None


def test_evaluate_one_step_span_validation():
    y = np.random.default_rng(23).normal(size=50)
    with pytest.raises(ValueError):
        evaluate_one_step(y, SarimaOrder(1, 0, 0), (0, 30), (31, 50))
    with pytest.raises(ValueError):
        evaluate_one_step(y, SarimaOrder(1, 0, 0), (0, 30), (30, 51))
    with pytest.raises(ValueError):
        evaluate_one_step(y, SarimaOrder(1, 0, 0), (0, 30), (30, 50), regressor=y[:-1])


# --------------------------------------------------- rolling-origin validation


def test_rolling_cv_single_fit_matches_manual_forecasts():
    rng = np.random.default_rng(24)
    y = sarima.simulate(SarimaOrder(1, 0, 0), SarimaParams(ar=(0.5,), mean=10.0), 80, rng)
    horizon = 2
    rep = rolling_origin_cv(
        y, SarimaOrder(1, 0, 0), horizon, 0, (60, 80), refit_every=1000
    )
    assert rep.n_refits == 1
    fit0 = sarima.fit(y[: 60 - horizon + 1], SarimaOrder(1, 0, 0))
    manual = np.array(
        [
            sarima.forecast(fit0, horizon, history=y[: t - horizon + 1])[horizon - 1]
            for t in range(60, 80)
        ]
    )
    assert np.allclose(rep.predictions, manual)
    assert rep.rmse_test == pytest.approx(rmse(y[60:80], manual))
    assert rep.horizon == horizon and rep.n_test == 20


def test_rolling_cv_refit_cadence():
    rng = np.random.default_rng(25)
    y = sarima.simulate(SarimaOrder(1, 0, 0), SarimaParams(ar=(0.4,)), 48, rng)
    rep = rolling_origin_cv(y, SarimaOrder(1, 0, 0), 1, 0, (40, 48), refit_every=4)
    assert rep.n_refits == 2
    rep = rolling_origin_cv(y, SarimaOrder(1, 0, 0), 1, 0, (40, 48), refit_every=1)
    assert rep.n_refits == 8


def test_rolling_cv_future_regressor_fn_supplies_covariates():
    rng = np.random.default_rng(26)
    x = rng.normal(size=70)
    eta = sarima.simulate(SarimaOrder(1, 0, 0), SarimaParams(ar=(0.5,)), 70, rng)
    y = 3.0 * x + eta
    calls = []

    def future_fn(origin, L):
        calls.append((origin, L))
        return x[origin + 1 : origin + 1 + L]

    baseline = rolling_origin_cv(
        y, SarimaOrder(1, 0, 0), 2, 0, (60, 70), regressor=x, refit_every=5
    )
    with_fn = rolling_origin_cv(
        y,
        SarimaOrder(1, 0, 0),
        2,
        0,
        (60, 70),
        regressor=x,
        future_regressor_fn=future_fn,
        refit_every=5,
    )
    assert np.allclose(baseline.predictions, with_fn.predictions)
    assert calls == [(t - 2, 2) for t in range(60, 70)]


def test_rolling_cv_validation():
    y = np.random.default_rng(27).normal(size=50)
    order = SarimaOrder(1, 0, 0)
    with pytest.raises(ValueError):
        rolling_origin_cv(y, order, 0, 0, (40, 50))
    with pytest.raises(ValueError):
        rolling_origin_cv(y, order, 1, 0, (40, 50), refit_every=0)
    with pytest.raises(ValueError):
        rolling_origin_cv(y, order, 1, 0, (40, 51))
    with pytest.raises(ValueError):
        rolling_origin_cv(y, order, 1, 0, (40, 50), regressor=y[:-1])
    with pytest.raises(NumericalError):
        rolling_origin_cv(y, order, 1, 0, (4, 50))
