"""Forecast accuracy metrics and model-comparison machinery.

Covers the error metrics (RMSE and symmetric MAPE), the paired t-test on
absolute errors used to compare two models on the same test windows, the
fixed-parameter one-step evaluation over a held-out span, and rolling-origin
cross-validation at longer forecast horizons with a refit at every origin.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import betainc

from . import sarima
from .errors import NumericalError
from .sarima import SarimaFit, SarimaOrder

log = logging.getLogger(__name__)


# ------------------------------------------------------------------- metrics

def rmse(actual: np.ndarray, predicted: np.ndarray) -> float:
    """Root mean squared error."""
    a, p = _paired_arrays(actual, predicted)
    return float(np.sqrt(np.mean((a - p) ** 2)))


def smape(actual: np.ndarray, predicted: np.ndarray) -> float:
    """Symmetric MAPE in percent: (2/N) sum |y-yhat| / (|y|+|yhat|) * 100.

    Windows where both the actual and the predicted value are zero
    contribute zero error rather than 0/0.
    """
    a, p = _paired_arrays(actual, predicted)
    denom = np.abs(a) + np.abs(p)
    terms = np.zeros_like(denom)
    nz = denom > 0
    terms[nz] = np.abs(a - p)[nz] / denom[nz]
    return float(200.0 * terms.sum() / len(terms))


def _paired_arrays(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=float)
    p = np.asarray(predicted, dtype=float)
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.shape} actual vs {p.shape} predicted")
    if a.size == 0:
        raise ValueError("metrics need at least one observation")
    return a, p


def student_t_cdf(t: float, df: float) -> float:
    """CDF of Student's t via the regularized incomplete beta function."""
    if df <= 0:
        raise ValueError("degrees of freedom must be positive")
    if math.isnan(t):
        return math.nan
    x = df / (df + t * t)
    half_tail = 0.5 * float(betainc(df / 2.0, 0.5, x))
    return half_tail if t <= 0 else 1.0 - half_tail


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: int
    p_value: float
    mean_diff: float


def paired_t_test(errors_a: np.ndarray, errors_b: np.ndarray) -> TTestResult:
    """Lower-tailed paired t-test on |errors_a| - |errors_b|.

    A small p-value supports model A having smaller absolute errors than
    model B on the same windows.  The standard deviation uses the n-1
    denominator; fewer than two pairs, or pairs with identical absolute
    errors everywhere, leave the statistic undefined and are fatal.
    """
    a, b = _paired_arrays(errors_a, errors_b)
    d = np.abs(a) - np.abs(b)
    n = len(d)
    if n < 2:
        raise ValueError("paired test needs at least two error pairs")
    sd = float(np.std(d, ddof=1))
    if sd == 0:
        raise ValueError("paired differences have zero variance")
    t = float(np.mean(d)) / (sd / math.sqrt(n))
    return TTestResult(t, n - 1, student_t_cdf(t, n - 1), float(np.mean(d)))


# ------------------------------------------------------------------- reports

@dataclass
class EvalReport:
    """Accuracy summary of one model on one station."""

    station: str
    model: str
    horizon: int
    n_train: int
    n_test: int
    rmse_train: float
    smape_train: float
    rmse_test: float
    smape_test: float
    aic: float
    errors_test: np.ndarray = field(repr=False)  # predicted - actual
    rmse_event: float | None = None
    smape_event: float | None = None


def smape_difference(report_a: EvalReport, report_b: EvalReport) -> float:
    """Test-set SMAPE gap in percentage points (negative favours A)."""
    return report_a.smape_test - report_b.smape_test


def event_metrics(
    actual: np.ndarray, predicted: np.ndarray, mask: np.ndarray
) -> tuple[float | None, float | None]:
    """RMSE and SMAPE restricted to masked windows; None when mask is empty."""
    mask = np.asarray(mask, dtype=bool)
    a = np.asarray(actual, dtype=float)
    if mask.shape != a.shape:
        raise ValueError("mask length differs from series length")
    if not mask.any():
        log.warning("event metric mask is empty; metrics unavailable")
        return None, None
    return rmse(a[mask], np.asarray(predicted)[mask]), smape(a[mask], np.asarray(predicted)[mask])


# -------------------------------------------------------- one-step evaluation

def evaluate_one_step(
    y: np.ndarray,
    order: SarimaOrder,
    train_span: tuple[int, int],
    test_span: tuple[int, int],
    regressor: np.ndarray | None = None,
    station: str = "",
    model: str = "",
    event_mask: np.ndarray | None = None,
) -> tuple[SarimaFit, EvalReport]:
    """Fit on the training span, then score one-step predictions.

    Training metrics are the in-sample one-step residuals of the final fit;
    test metrics continue the filter over the adjacent test span with
    parameters frozen, predicting each window from its predecessors only.
    The first d + D*m training windows cannot be reconstructed from the
    differenced scale and are excluded from the training metrics.
    """
    train_lo, train_hi = train_span
    test_lo, test_hi = test_span
    if train_hi != test_lo:
        raise ValueError("test span must start where the training span ends")
    if not 0 <= train_lo < train_hi < test_hi <= len(y):
        raise ValueError("spans fall outside the series")
    y = np.asarray(y, dtype=float)
    x_train = x_full = None
    if regressor is not None:
        regressor = np.asarray(regressor, dtype=float)
        if regressor.shape != y.shape:
            raise ValueError("regressor and series must have equal length")
        x_train = regressor[train_lo:train_hi]
        x_full = regressor[train_lo:test_hi]

    fit = sarima.fit(y[train_lo:train_hi], order, regressor=x_train)
    preds = sarima.one_step_predictions(fit, y[train_lo:test_hi], x_full)

    s = order.diff_loss
    n_train = train_hi - train_lo
    train_actual = y[train_lo + s : train_hi]
    train_pred = preds[s:n_train]
    test_actual = y[test_lo:test_hi]
    test_pred = preds[n_train:]
    report = EvalReport(
        station=station,
        model=model,
        horizon=1,
        n_train=len(train_actual),
        n_test=len(test_actual),
        rmse_train=rmse(train_actual, train_pred),
        smape_train=smape(train_actual, train_pred),
        rmse_test=rmse(test_actual, test_pred),
        smape_test=smape(test_actual, test_pred),
        aic=fit.aic,
        errors_test=test_pred - test_actual,
    )
    if event_mask is not None:
        mask = np.asarray(event_mask, dtype=bool)[test_lo:test_hi]
        report.rmse_event, report.smape_event = event_metrics(test_actual, test_pred, mask)
    return fit, report


# --------------------------------------------------- rolling-origin validation

@dataclass
class CvReport:
    """Rolling-origin accuracy at one forecast horizon."""

    station: str
    model: str
    horizon: int
    n_test: int
    rmse_test: float
    smape_test: float
    errors_test: np.ndarray = field(repr=False)
    predictions: np.ndarray = field(repr=False)
    n_refits: int = 0


def rolling_origin_cv(
    y: np.ndarray,
    order: SarimaOrder,
    horizon: int,
    train_start: int,
    test_span: tuple[int, int],
    regressor: np.ndarray | None = None,
    future_regressor_fn=None,
    refit_every: int = 1,
    station: str = "",
    model: str = "",
) -> CvReport:
    """Score the horizon-th step of forecasts from a rolling origin.

    For every target window t in the test span, the model is (re)fitted on
    y[train_start : t - horizon + 1] and asked for a ``horizon``-step
    forecast; only the final step is scored.  Refits are warm-started from
    the previous origin's coefficients.  ``future_regressor_fn(origin, L)``
    supplies the regressor values for the L windows after ``origin``, which
    for a returning-flow covariate involves approximating alighting that has
    not been observed yet.

    The training span must cover at least two seasonal cycles.
    """
    y = np.asarray(y, dtype=float)
    test_lo, test_hi = test_span
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if refit_every < 1:
        raise ValueError("refit_every must be >= 1")
    if not 0 <= train_start < test_lo < test_hi <= len(y):
        raise ValueError("spans fall outside the series")
    first_train_len = (test_lo - horizon + 1) - train_start
    if first_train_len < 2 * order.m * max(1, order.D) + order.d + 4:
        raise NumericalError(
            f"{first_train_len} training windows are too few for seasonal period {order.m}"
        )
    if regressor is not None:
        regressor = np.asarray(regressor, dtype=float)
        if regressor.shape != y.shape:
            raise ValueError("regressor and series must have equal length")

    preds = np.empty(test_hi - test_lo)
    fit: SarimaFit | None = None
    n_refits = 0
    for i, t_star in enumerate(range(test_lo, test_hi)):
        origin = t_star - horizon  # last observed window
        train_y = y[train_start : origin + 1]
        train_x = regressor[train_start : origin + 1] if regressor is not None else None
        if fit is None or i % refit_every == 0:
            # the previous optimum is a near-optimal start even when that
            # refit stopped on the iteration cap rather than the tolerance
            warm = fit.params if fit is not None else None
            fit = sarima.fit(train_y, order, regressor=train_x, start=warm)
            n_refits += 1
        future_x = None
        if regressor is not None:
            if future_regressor_fn is not None:
                future_x = np.asarray(future_regressor_fn(origin, horizon), dtype=float)
            else:
                future_x = regressor[origin + 1 : origin + 1 + horizon]
        fc = sarima.forecast(
            fit,
            horizon,
            history=train_y,
            future_regressor=future_x,
            history_regressor=train_x,
        )
        preds[i] = fc[horizon - 1]

    actual = y[test_lo:test_hi]
    return CvReport(
        station=station,
        model=model,
        horizon=horizon,
        n_test=len(actual),
        rmse_test=rmse(actual, preds),
        smape_test=smape(actual, preds),
        errors_test=preds - actual,
        predictions=preds,
        n_refits=n_refits,
    )
