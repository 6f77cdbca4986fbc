"""Seasonal ARIMA regression with exact Gaussian maximum likelihood.

The model is a regression whose error term follows a seasonal ARIMA
process:

    y_t = beta * x_t + eta_t
    phi(B) PHI(B^m) (1-B)^d (1-B^m)^D eta_t = theta(B) THETA(B^m) e_t

with e_t Gaussian white noise.  Signs follow the usual convention
phi(B) = 1 - phi_1 B - ...,  theta(B) = 1 + theta_1 B + ....  The
regression coefficient is estimated jointly with the ARMA coefficients in
one likelihood, not by a two-stage plug-in.

After differencing, the exact likelihood of the stationary ARMA part is
evaluated by the prediction-error decomposition of a state-space filter
initialised at the stationary state covariance, so it matches the direct
Gaussian-density computation from analytic autocovariances.  A conditional
sum-of-squares pass supplies the optimizer start point, the innovation
variance is concentrated out, and parameter vectors whose AR or MA
polynomials have roots inside or on the unit circle are rejected with an
infinite barrier.

When d = D = 0 nothing is differenced away, so a mean term is estimated
alongside the other coefficients (the convention reference implementations
follow for undifferenced series); with any differencing the mean is fixed
at zero.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy.optimize import minimize

from .errors import NumericalError

log = logging.getLogger(__name__)

_LOG_2PI = math.log(2.0 * math.pi)
_ROOT_MARGIN = 1e-7


@dataclass(frozen=True)
class SarimaOrder:
    """(p, d, q) x (P, D, Q)_m order specification."""

    p: int
    d: int
    q: int
    P: int = 0
    D: int = 0
    Q: int = 0
    m: int = 1

    def __post_init__(self) -> None:
        for name in ("p", "d", "q", "P", "D", "Q"):
            if getattr(self, name) < 0:
                raise ValueError(f"order component {name} must be >= 0")
        if self.m < 1:
            raise ValueError("seasonal period m must be >= 1")
        if self.m == 1 and (self.P or self.D or self.Q):
            raise ValueError("seasonal terms need a seasonal period m > 1")

    @property
    def diff_loss(self) -> int:
        """Observations consumed by the differencing operators."""
        return self.d + self.D * self.m

    @property
    def has_mean(self) -> bool:
        return self.d == 0 and self.D == 0

    def n_coefficients(self, with_regressor: bool) -> int:
        return self.p + self.q + self.P + self.Q + int(with_regressor) + int(self.has_mean)


@dataclass
class SarimaParams:
    """Coefficient set for one model; lengths must match the order."""

    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    sar: tuple[float, ...] = ()
    sma: tuple[float, ...] = ()
    sigma2: float = 1.0
    beta: float | None = None
    mean: float = 0.0

    def validate(self, order: SarimaOrder, with_regressor: bool) -> None:
        if (len(self.ar), len(self.ma), len(self.sar), len(self.sma)) != (
            order.p,
            order.q,
            order.P,
            order.Q,
        ):
            raise ValueError("coefficient lengths do not match the order")
        if with_regressor != (self.beta is not None):
            raise ValueError("beta must be present exactly when a regressor is supplied")
        if self.sigma2 <= 0:
            raise ValueError("innovation variance must be positive")


@dataclass
class SarimaFit:
    """Fitted model with the data it was estimated on."""

    order: SarimaOrder
    params: SarimaParams
    loglik: float
    aic: float
    converged: bool
    n_iter: int
    n_obs: int  # length of the differenced series entering the likelihood
    start_loglik: float
    series: np.ndarray = field(repr=False)
    regressor: np.ndarray | None = field(default=None, repr=False)


def aic(loglik: float, n_params: int) -> float:
    """Akaike information criterion, 2k - 2 log L."""
    return 2.0 * n_params - 2.0 * loglik


def difference(series: np.ndarray, d: int, D: int = 0, m: int = 1) -> np.ndarray:
    """Apply (1-B)^d then (1-B^m)^D; length shrinks by d + D*m."""
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if len(x) <= d + D * m:
        raise NumericalError(
            f"series of length {len(x)} too short to difference by d={d}, D={D}, m={m}"
        )
    for _ in range(d):
        x = x[1:] - x[:-1]
    for _ in range(D):
        x = x[m:] - x[:-m]
    return x


# --------------------------------------------------------------- polynomials

def _expand_poly(params: SarimaParams, order: SarimaOrder) -> tuple[np.ndarray, np.ndarray]:
    """Expanded AR and MA lag coefficients of the seasonal product polynomials.

    Returns (phi_bar, theta_bar) where the process satisfies
    u_t = sum_i phi_bar_i u_{t-i} + e_t + sum_j theta_bar_j e_{t-j}.
    """
    ar_poly = np.r_[1.0, -np.asarray(params.ar, dtype=float)]
    sar_poly = np.zeros(order.P * order.m + 1)
    sar_poly[0] = 1.0
    for i, c in enumerate(params.sar, start=1):
        sar_poly[i * order.m] = -c
    full_ar = np.convolve(ar_poly, sar_poly)

    ma_poly = np.r_[1.0, np.asarray(params.ma, dtype=float)]
    sma_poly = np.zeros(order.Q * order.m + 1)
    sma_poly[0] = 1.0
    for i, c in enumerate(params.sma, start=1):
        sma_poly[i * order.m] = c
    full_ma = np.convolve(ma_poly, sma_poly)

    return -full_ar[1:], full_ma[1:]


def _roots_outside(coefs: np.ndarray) -> bool:
    """True when 1 + c_1 z + ... + c_k z^k has all roots outside the unit circle."""
    coefs = np.trim_zeros(np.asarray(coefs, dtype=float), "b")
    if len(coefs) == 0:
        return True
    poly = np.r_[1.0, coefs]
    roots = np.roots(poly[::-1])
    return bool(np.all(np.abs(roots) > 1.0 + _ROOT_MARGIN))


def _params_admissible(params: SarimaParams) -> bool:
    return (
        _roots_outside(-np.asarray(params.ar))
        and _roots_outside(-np.asarray(params.sar))
        and _roots_outside(np.asarray(params.ma))
        and _roots_outside(np.asarray(params.sma))
    )


# ------------------------------------------------------------- filter kernel

@njit(cache=True, nogil=True)
def _pe_filter(z, pb, rv, P0):  # pragma: no cover - exercised via wrappers
    """Prediction-error decomposition for a unit-variance ARMA state space.

    Returns (ok, sum_log_F, sum_v2_over_F, one_step_preds, final_state)
    where final_state is the state prediction for step n+1.  The gain is
    frozen once the innovation variance has numerically converged.
    """
    n = z.shape[0]
    r = pb.shape[0]
    x = np.zeros(r)
    xf = np.zeros(r)
    P = P0.copy()
    A = np.empty((r, r))
    B = np.empty((r, r))
    K = np.zeros(r)
    preds = np.empty(n)
    sum_log_f = 0.0
    sum_v2f = 0.0
    F = 1.0
    F_prev = -1.0
    steady_run = 0
    steady = False
    for t in range(n):
        if not steady:
            F = P[0, 0]
            if not (F > 1e-300) or not np.isfinite(F):
                return 0, 0.0, 0.0, preds, x
            for i in range(r):
                K[i] = P[i, 0] / F
        preds[t] = x[0]
        v = z[t] - x[0]
        sum_log_f += np.log(F)
        sum_v2f += v * v / F
        for i in range(r):
            xf[i] = x[i] + K[i] * v
        for i in range(r):
            nxt = pb[i] * xf[0]
            if i + 1 < r:
                nxt += xf[i + 1]
            x[i] = nxt
        if not steady:
            # P_filt = P - K * P[0, :]
            for j in range(r):
                p0j = P[0, j]
                for i in range(r):
                    A[i, j] = P[i, j] - K[i] * p0j
            # B = T @ P_filt  (companion form: row i = pb_i * row0 + row_{i+1})
            for i in range(r):
                for j in range(r):
                    val = pb[i] * A[0, j]
                    if i + 1 < r:
                        val += A[i + 1, j]
                    B[i, j] = val
            # P = B @ T' + R R'  (col j = pb_j * col0 + col_{j+1})
            for i in range(r):
                for j in range(r):
                    val = pb[j] * B[i, 0]
                    if j + 1 < r:
                        val += B[i, j + 1]
                    P[i, j] = val + rv[i] * rv[j]
            # keep P symmetric against roundoff drift
            for i in range(r):
                for j in range(i + 1, r):
                    s = 0.5 * (P[i, j] + P[j, i])
                    P[i, j] = s
                    P[j, i] = s
            if F_prev > 0.0 and abs(F - F_prev) <= 1e-12 * F:
                steady_run += 1
                if steady_run >= 3:
                    steady = True
            else:
                steady_run = 0
            F_prev = F
    return 1, sum_log_f, sum_v2f, preds, x


@njit(cache=True, nogil=True)
def _css_sum(u, pb, tb):  # pragma: no cover - exercised via wrappers
    """Conditional sum of squares of the ARMA recursion residuals."""
    n = u.shape[0]
    p = pb.shape[0]
    q = tb.shape[0]
    e = np.zeros(n)
    s = 0.0
    count = 0
    for t in range(p, n):
        acc = u[t]
        for i in range(p):
            acc -= pb[i] * u[t - 1 - i]
        for j in range(q):
            if t - 1 - j >= p:
                acc -= tb[j] * e[t - 1 - j]
        e[t] = acc
        s += acc * acc
        count += 1
    return s, count


@njit(cache=True, nogil=True)
def _lyap_doubling(T, Q):  # pragma: no cover - exercised via wrappers
    """Solve P = T P T' + Q by doubling: P += A P A', A = A A.

    After k rounds the partial sum covers 2**k terms of the series
    sum_j T^j Q T'^j, so convergence is fast whenever T is stable (which
    the admissibility barrier guarantees before this is reached).
    """
    P = Q.copy()
    A = T.copy()
    for _ in range(60):
        delta = A @ P @ A.T
        P = P + delta
        step = np.abs(delta).max()
        if not np.isfinite(step):
            return P, False
        if step <= 1e-14 * max(1.0, np.abs(P).max()):
            return P, True
        A = A @ A
    return P, False


# ----------------------------------------------------------------- internals

def _state_system(pb: np.ndarray, tb: np.ndarray):
    """Harvey-form system vectors and stationary initial covariance."""
    r = max(len(pb), len(tb) + 1)
    pb_full = np.zeros(r)
    pb_full[: len(pb)] = pb
    rv = np.zeros(r)
    rv[0] = 1.0
    rv[1 : len(tb) + 1] = tb
    T = np.zeros((r, r))
    T[:, 0] = pb_full
    for i in range(r - 1):
        T[i, i + 1] = 1.0
    P0, ok = _lyap_doubling(T, np.outer(rv, rv))
    if not ok or not np.all(np.isfinite(P0)):
        return None
    return pb_full, rv, np.ascontiguousarray(P0)


def _residual_series(
    series: np.ndarray,
    order: SarimaOrder,
    beta: float | None,
    mean: float,
    regressor: np.ndarray | None,
) -> np.ndarray:
    """Differenced regression residual z = diff(y) - beta * diff(x) - mean."""
    z = difference(series, order.d, order.D, order.m)
    if beta is not None:
        zx = difference(regressor, order.d, order.D, order.m)
        z = z - beta * zx
    if order.has_mean:
        z = z - mean
    return z


def _filter_stats(z: np.ndarray, params: SarimaParams, order: SarimaOrder):
    """Run the unit-variance filter; None when parameters are inadmissible."""
    if not _params_admissible(params):
        return None
    pb, tb = _expand_poly(params, order)
    system = _state_system(pb, tb)
    if system is None:
        return None
    pb_full, rv, P0 = system
    ok, sum_log_f, sum_v2f, preds, x_final = _pe_filter(
        np.ascontiguousarray(z, dtype=float), pb_full, rv, P0
    )
    if not ok:
        return None
    return sum_log_f, sum_v2f, preds, x_final


def log_likelihood(
    series: np.ndarray,
    order: SarimaOrder,
    params: SarimaParams,
    regressor: np.ndarray | None = None,
) -> float:
    """Exact Gaussian log likelihood of the model at the given parameters.

    Returns -inf for parameter vectors outside the stationary/invertible
    region rather than raising, so optimizers can treat the boundary as a
    barrier.
    """
    series = np.asarray(series, dtype=float)
    if regressor is not None:
        regressor = np.asarray(regressor, dtype=float)
        if regressor.shape != series.shape:
            raise ValueError("regressor and series must have equal length")
    params.validate(order, regressor is not None)
    z = _residual_series(series, order, params.beta, params.mean, regressor)
    stats = _filter_stats(z, params, order)
    if stats is None:
        return -math.inf
    sum_log_f, sum_v2f, _, _ = stats
    n = len(z)
    s2 = params.sigma2
    return -0.5 * (n * (_LOG_2PI + math.log(s2)) + sum_log_f + sum_v2f / s2)


# ----------------------------------------------------------- fitting helpers

def _pack(params: SarimaParams, order: SarimaOrder, with_regressor: bool) -> np.ndarray:
    psi: list[float] = []
    if order.has_mean:
        psi.append(params.mean)
    if with_regressor:
        psi.append(params.beta if params.beta is not None else 0.0)
    psi.extend(params.ar)
    psi.extend(params.ma)
    psi.extend(params.sar)
    psi.extend(params.sma)
    return np.array(psi, dtype=float)


def _unpack(psi: np.ndarray, order: SarimaOrder, with_regressor: bool) -> SarimaParams:
    pos = 0
    mean = 0.0
    if order.has_mean:
        mean = float(psi[pos])
        pos += 1
    beta = None
    if with_regressor:
        beta = float(psi[pos])
        pos += 1
    ar = tuple(psi[pos : pos + order.p])
    pos += order.p
    ma = tuple(psi[pos : pos + order.q])
    pos += order.q
    sar = tuple(psi[pos : pos + order.P])
    pos += order.P
    sma = tuple(psi[pos : pos + order.Q])
    return SarimaParams(ar=ar, ma=ma, sar=sar, sma=sma, sigma2=1.0, beta=beta, mean=mean)


def _concentrated_negloglik(
    psi: np.ndarray,
    zy: np.ndarray,
    zx: np.ndarray | None,
    order: SarimaOrder,
) -> float:
    """Negative exact log likelihood with sigma2 profiled out."""
    params = _unpack(psi, order, zx is not None)
    z = zy
    if zx is not None:
        z = z - params.beta * zx
    if order.has_mean:
        z = z - params.mean
    stats = _filter_stats(z, params, order)
    if stats is None:
        return math.inf
    sum_log_f, sum_v2f, _, _ = stats
    n = len(z)
    s2 = sum_v2f / n
    if not (s2 > 0.0) or not math.isfinite(s2):
        return math.inf
    return 0.5 * (n * (_LOG_2PI + 1.0 + math.log(s2)) + sum_log_f)


def _css_objective(
    psi: np.ndarray,
    zy: np.ndarray,
    zx: np.ndarray | None,
    order: SarimaOrder,
) -> float:
    params = _unpack(psi, order, zx is not None)
    if not _params_admissible(params):
        return math.inf
    u = zy
    if zx is not None:
        u = u - params.beta * zx
    if order.has_mean:
        u = u - params.mean
    pb, tb = _expand_poly(params, order)
    s, count = _css_sum(np.ascontiguousarray(u, dtype=float), pb, tb)
    if count == 0 or not math.isfinite(s):
        return math.inf
    return s / count


def _nelder_mead(objective, psi0: np.ndarray, maxiter: int, step: float | None = None):
    f0 = objective(psi0)
    fatol = 1e-8 * max(1.0, abs(f0))
    options = {"maxiter": maxiter, "fatol": fatol, "xatol": 1e-6, "adaptive": len(psi0) > 4}
    if step is not None:
        # tight simplex around a warm start: the optimum of the previous
        # origin is O(1/n) away, so a wide default simplex wastes evaluations
        sim = np.tile(psi0, (len(psi0) + 1, 1))
        for i in range(len(psi0)):
            sim[i + 1, i] += step * max(1.0, abs(psi0[i]))
        options["initial_simplex"] = sim
    result = minimize(objective, psi0, method="Nelder-Mead", options=options)
    return result, f0


def fit(
    series: np.ndarray,
    order: SarimaOrder,
    regressor: np.ndarray | None = None,
    start: SarimaParams | None = None,
    maxiter: int = 500,
    css_maxiter: int = 300,
) -> SarimaFit:
    """Jointly estimate regression and ARMA coefficients by exact ML.

    The optimizer starts from a conditional-sum-of-squares refinement of
    (zero ARMA coefficients, least-squares beta); passing ``start`` skips
    the CSS stage and starts there instead, which rolling re-fits use to
    warm-start from the previous origin.  The returned log likelihood never
    falls below the start point's; when the optimizer fails to improve, the
    start point is returned flagged as non-converged.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if regressor is not None:
        regressor = np.asarray(regressor, dtype=float)
        if regressor.shape != series.shape:
            raise ValueError("regressor and series must have equal length")
    with_x = regressor is not None

    zy = difference(series, order.d, order.D, order.m)
    zx = difference(regressor, order.d, order.D, order.m) if with_x else None
    n = len(zy)
    n_coef = order.n_coefficients(with_x)
    if n < max(n_coef + 2, order.p + order.P * order.m + order.q + order.Q * order.m + 2):
        raise NumericalError(
            f"{n} differenced observations are too few for {n_coef} coefficients"
        )

    if start is not None:
        start.validate(order, with_x)
        if not _params_admissible(start):
            raise NumericalError("start parameters are not stationary/invertible")
        psi_start = _pack(start, order, with_x)
    else:
        beta0 = 0.0
        if with_x:
            sxx = float(zx @ zx)
            beta0 = float(zx @ zy) / sxx if sxx > 0 else 0.0
        mean0 = 0.0
        if order.has_mean:
            mean0 = float(np.mean(zy - beta0 * zx)) if with_x else float(np.mean(zy))
        zero = SarimaParams(
            ar=(0.0,) * order.p,
            ma=(0.0,) * order.q,
            sar=(0.0,) * order.P,
            sma=(0.0,) * order.Q,
            beta=beta0 if with_x else None,
            mean=mean0,
        )
        psi_start = _pack(zero, order, with_x)
        if n_coef > int(order.has_mean):
            css_res, css_f0 = _nelder_mead(
                lambda psi: _css_objective(psi, zy, zx, order), psi_start, css_maxiter
            )
            if math.isfinite(css_res.fun) and css_res.fun <= css_f0:
                psi_start = css_res.x

    # degenerate series: nothing to estimate a scale from
    resid0 = zy - (_unpack(psi_start, order, with_x).beta or 0.0) * (
        zx if zx is not None else 0.0
    )
    if order.has_mean:
        resid0 = resid0 - _unpack(psi_start, order, with_x).mean
    if float(np.var(np.asarray(resid0))) < 1e-12:
        log.warning("residual variance is numerically zero; returning degenerate fit")
        params = _unpack(psi_start, order, with_x)
        params.sigma2 = 1e-12
        ll = log_likelihood(series, order, params, regressor)
        return SarimaFit(
            order=order,
            params=params,
            loglik=ll,
            aic=aic(ll, n_coef + 1),
            converged=False,
            n_iter=0,
            n_obs=n,
            start_loglik=ll,
            series=series.copy(),
            regressor=None if regressor is None else regressor.copy(),
        )

    objective = lambda psi: _concentrated_negloglik(psi, zy, zx, order)  # noqa: E731
    if not math.isfinite(objective(psi_start)):
        psi_start = _pack(
            SarimaParams(
                ar=(0.0,) * order.p,
                ma=(0.0,) * order.q,
                sar=(0.0,) * order.P,
                sma=(0.0,) * order.Q,
                beta=0.0 if with_x else None,
                mean=float(np.mean(zy)) if order.has_mean else 0.0,
            ),
            order,
            with_x,
        )

    if len(psi_start) == 0:
        # pure white noise model: sigma2 is the only parameter
        best_psi, n_iter, converged = psi_start, 0, True
        f_start = f_best = objective(psi_start)
    else:
        step = 2e-3 if start is not None else None
        result, f_start = _nelder_mead(objective, psi_start, maxiter, step=step)
        if math.isfinite(result.fun) and result.fun <= f_start:
            best_psi, f_best = result.x, result.fun
            converged = bool(result.success)
        else:
            log.warning("optimizer failed to improve on the start point")
            best_psi, f_best = psi_start, f_start
            converged = False
        n_iter = int(result.nit)

    params = _unpack(best_psi, order, with_x)
    z = zy - (params.beta * zx if zx is not None else 0.0)
    if order.has_mean:
        z = z - params.mean
    stats = _filter_stats(np.asarray(z), params, order)
    if stats is None:
        raise NumericalError("fitted parameters are numerically inadmissible")
    sum_log_f, sum_v2f, _, _ = stats
    s2 = sum_v2f / n
    if s2 < 1e-12:
        log.warning("concentrated innovation variance underflowed; flooring")
        s2 = 1e-12
        converged = False
    params.sigma2 = float(s2)
    loglik = -0.5 * (n * (_LOG_2PI + math.log(s2)) + sum_log_f + sum_v2f / s2)
    start_ll = -f_start if math.isfinite(f_start) else loglik
    return SarimaFit(
        order=order,
        params=params,
        loglik=float(loglik),
        aic=aic(float(loglik), n_coef + 1),
        converged=converged,
        n_iter=n_iter,
        n_obs=n,
        start_loglik=float(start_ll),
        series=series.copy(),
        regressor=None if regressor is None else regressor.copy(),
    )


# ---------------------------------------------------------------- prediction

def _forecast_eta(
    eta: np.ndarray, params: SarimaParams, order: SarimaOrder, steps: int
) -> np.ndarray:
    """Minimum-MSE forecasts of the error process, undone through differencing."""
    levels = [np.asarray(eta, dtype=float)]
    for _ in range(order.d):
        levels.append(levels[-1][1:] - levels[-1][:-1])
    for _ in range(order.D):
        levels.append(levels[-1][order.m :] - levels[-1][: -order.m])
    z = levels[-1]
    if order.has_mean:
        z = z - params.mean

    stats = _filter_stats(z, params, order)
    if stats is None:
        raise NumericalError("parameters are not stationary/invertible")
    _, _, _, x = stats
    pb, tb = _expand_poly(params, order)
    r = max(len(pb), len(tb) + 1)
    pb_full = np.zeros(r)
    pb_full[: len(pb)] = pb

    fz = np.empty(steps)
    state = x.copy()
    for j in range(steps):
        fz[j] = state[0]
        nxt = np.empty(r)
        nxt[:-1] = pb_full[:-1] * state[0] + state[1:]
        nxt[-1] = pb_full[-1] * state[0]
        state = nxt
    if order.has_mean:
        fz = fz + params.mean

    # integrate back: seasonal differences were applied last, so they are
    # undone first, then the ordinary ones
    forecasts = fz
    for idx in range(len(levels) - 2, -1, -1):
        lag = order.m if idx >= order.d else 1
        ext = list(levels[idx])
        out = np.empty(steps)
        for j in range(steps):
            prev = ext[-lag]
            out[j] = forecasts[j] + prev
            ext.append(out[j])
        forecasts = out
    return forecasts


def forecast(
    fit_result: SarimaFit,
    steps: int,
    history: np.ndarray | None = None,
    future_regressor: np.ndarray | None = None,
    history_regressor: np.ndarray | None = None,
) -> np.ndarray:
    """Point forecasts for the ``steps`` windows after the end of history.

    ``history`` defaults to the series the model was fitted on; a longer
    continuation may be passed together with its regressor values.  When the
    model carries a regression term, ``future_regressor`` must supply one
    value per forecast step.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    params = fit_result.params
    y = np.asarray(fit_result.series if history is None else history, dtype=float)
    if params.beta is not None:
        x = history_regressor
        if x is None:
            x = fit_result.regressor if history is None else None
        if x is None:
            raise ValueError("history_regressor is required with a regression term")
        x = np.asarray(x, dtype=float)
        if x.shape != y.shape:
            raise ValueError("history and regressor lengths differ")
        if future_regressor is None:
            raise ValueError("future_regressor is required with a regression term")
        fx = np.asarray(future_regressor, dtype=float)
        if len(fx) < steps:
            raise ValueError(f"future_regressor supplies {len(fx)} of {steps} steps")
        eta = y - params.beta * x
    else:
        eta = y
    f_eta = _forecast_eta(eta, params, fit_result.order, steps)
    if params.beta is not None:
        return f_eta + params.beta * fx[:steps]
    return f_eta


def one_step_predictions(
    fit_result: SarimaFit,
    series: np.ndarray | None = None,
    regressor: np.ndarray | None = None,
) -> np.ndarray:
    """In-sample one-step-ahead predictions with parameters held fixed.

    Runs the filter over ``series`` (default: the training series) and
    reassembles predictions on the original scale.  The first d + D*m
    positions cannot be reconstructed from the differenced filter and are
    NaN.
    """
    params = fit_result.params
    order = fit_result.order
    y = np.asarray(fit_result.series if series is None else series, dtype=float)
    if params.beta is not None:
        x = fit_result.regressor if series is None else regressor
        if x is None:
            raise ValueError("regressor values are required with a regression term")
        x = np.asarray(x, dtype=float)
        if x.shape != y.shape:
            raise ValueError("series and regressor lengths differ")
        eta = y - params.beta * x
    else:
        eta = y
    z = difference(eta, order.d, order.D, order.m)
    if order.has_mean:
        z = z - params.mean
    stats = _filter_stats(z, params, order)
    if stats is None:
        raise NumericalError("parameters are not stationary/invertible")
    _, _, preds_z, _ = stats
    if order.has_mean:
        preds_z = preds_z + params.mean
        z = z + params.mean
    s = order.diff_loss
    out = np.full(len(y), np.nan)
    # eta_t = z_t + (reconstruction from past eta values); the one-step
    # prediction replaces z_t by its filtered prediction
    recon = eta[s:] - z
    out[s:] = preds_z + recon
    if params.beta is not None:
        out[s:] = out[s:] + params.beta * x[s:]
    return out


def simulate(
    order: SarimaOrder,
    params: SarimaParams,
    n: int,
    rng: np.random.Generator,
    regressor: np.ndarray | None = None,
    burn: int = 500,
) -> np.ndarray:
    """Draw one realisation of the model (used for parametric checks)."""
    params.validate(order, regressor is not None)
    pb, tb = _expand_poly(params, order)
    p, q = len(pb), len(tb)
    total = n + burn + p + q
    e = rng.normal(0.0, math.sqrt(params.sigma2), size=total)
    u = np.zeros(total)
    for t in range(total):
        acc = e[t]
        for j in range(q):
            if t - 1 - j >= 0:
                acc += tb[j] * e[t - 1 - j]
        for i in range(p):
            if t - 1 - i >= 0:
                acc += pb[i] * u[t - 1 - i]
        u[t] = acc
    z = u[-n:]
    if order.has_mean:
        z = z + params.mean
    # differencing applies (1-B)^d first, then (1-B^m)^D, so integration
    # undoes the seasonal operator first and the ordinary one last
    y = z
    for _ in range(order.D):
        out = y.copy()
        for t in range(order.m, len(out)):
            out[t] += out[t - order.m]
        y = out
    for _ in range(order.d):
        y = np.cumsum(y)
    if regressor is not None:
        y = y + params.beta * np.asarray(regressor, dtype=float)[:n]
    return y
