"""Return-probability table estimation and returning-flow prediction.

The return-probability table of a station gives, for every window-of-day w
and every in-service gap h (1..horizon), the probability that a passenger
who alights in a window of type w boards again at the same station h
windows later.  Row sums may stay below one; the remainder is the mass of
passengers who never return within the horizon.

Predicted returning flow for window t is the expectation of returns implied
by the alighting counts of the preceding ``horizon`` windows under that
table.  An event-aware variant splits the table into a normal and an event
component and mixes them per window by the share of excess alighting.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calendars import ServiceCalendar
from .flows import FlowSeries
from .ingest import ReturnPairCounts

log = logging.getLogger(__name__)


class PartialHistoryWarning(UserWarning):
    """Prediction used fewer than ``horizon`` windows of alighting history."""


@dataclass
class Rpp:
    """Return-probability table: probs[w, h-1] = P(board w+h | alight in w)."""

    station: str
    windows_per_day: int
    horizon: int
    probs: np.ndarray

    def __post_init__(self) -> None:
        self.probs = np.asarray(self.probs, dtype=float)
        expected = (self.windows_per_day, self.horizon)
        if self.probs.shape != expected:
            raise ValueError(f"probability table shape {self.probs.shape}, expected {expected}")
        if np.any(self.probs < 0) or np.any(self.probs > 1 + 1e-9):
            raise ValueError("probabilities must lie in [0, 1]")
        row_sums = self.probs.sum(axis=1)
        if np.any(row_sums > 1 + 1e-9):
            raise ValueError(f"row sums exceed one (max {row_sums.max():.6f})")

    @property
    def no_return_mass(self) -> np.ndarray:
        """Per-row probability of not returning within the horizon."""
        return 1.0 - self.probs.sum(axis=1)


def _as_array(alighting: FlowSeries | np.ndarray) -> np.ndarray:
    if isinstance(alighting, FlowSeries):
        return np.asarray(alighting.values, dtype=float)
    return np.asarray(alighting, dtype=float)


def estimate_rpp(
    pairs: ReturnPairCounts,
    alighting: FlowSeries | np.ndarray,
    calendar: ServiceCalendar,
    horizon: int = 48,
    span: tuple[int, int] | None = None,
    ta_windows: set[int] | None = None,
) -> Rpp:
    """Estimate the return-probability table from pair counts and alighting.

    Each cell is the number of observed returns with that window-of-day and
    gap divided by the total alighting over the contributing alight windows,
    so rows of a station where some passengers never come back sum to less
    than one.  ``span`` restricts the alight windows to a half-open global
    range (the estimation split); ``ta_windows`` restricts them to an
    explicit set (used for the normal/event table split).  Rows without any
    alighting are left at zero.
    """
    m = _as_array(alighting)
    w_per_day = calendar.windows_per_day
    lo, hi = span if span is not None else (0, calendar.n_windows)
    if not 0 <= lo < hi <= calendar.n_windows:
        raise ValueError(f"span {span} outside calendar of {calendar.n_windows} windows")

    def admit(t_a: int) -> bool:
        if not lo <= t_a < hi:
            return False
        return ta_windows is None or t_a in ta_windows

    numer = np.zeros((w_per_day, horizon))
    for (t_a, t_b), n in pairs.counts.items():
        h = t_b - t_a
        if not admit(t_a) or not 1 <= h <= horizon:
            continue
        numer[t_a % w_per_day, h - 1] += n

    denom = np.zeros(w_per_day)
    for t_a in range(lo, hi):
        if admit(t_a):
            denom[t_a % w_per_day] += m[t_a]

    probs = np.zeros_like(numer)
    nonzero = denom > 0
    probs[nonzero] = numer[nonzero] / denom[nonzero, None]
    if not np.all(nonzero):
        log.warning(
            "station %r: %d window-of-day rows have no alighting; rows left at zero",
            pairs.station,
            int((~nonzero).sum()),
        )
    return Rpp(pairs.station, w_per_day, horizon, probs)


def predict_returning_flow(
    rpp: Rpp,
    alighting: FlowSeries | np.ndarray,
    t: int,
) -> float:
    """Expected returning flow at global window t from past alighting.

    Sums alighting of the preceding ``horizon`` windows weighted by the
    return probability for the matching window-of-day and gap.  When t lies
    closer than ``horizon`` to the start of the data, only the available
    windows contribute and a PartialHistoryWarning is emitted.
    """
    m = _as_array(alighting)
    if not 0 < t <= len(m):
        raise ValueError(f"window {t} has no alighting history")
    h_max = min(rpp.horizon, t)
    if h_max < rpp.horizon:
        warnings.warn(
            f"window {t}: only {h_max} of {rpp.horizon} history windows available",
            PartialHistoryWarning,
            stacklevel=2,
        )
    total = 0.0
    for h in range(1, h_max + 1):
        t_a = t - h
        total += m[t_a] * rpp.probs[t_a % rpp.windows_per_day, h - 1]
    return total


def predicted_returning_series(
    rpp: Rpp,
    alighting: FlowSeries | np.ndarray,
    start: int,
    stop: int,
    observed_until: int | None = None,
    future_means: np.ndarray | None = None,
) -> np.ndarray:
    """Predicted returning flow for every window in [start, stop).

    With ``observed_until`` set, alighting at windows >= that index is
    replaced by ``future_means`` (per window-of-day), the approximation used
    when predicting several steps past the last observed window.
    """
    m = _as_array(alighting).copy()
    w = rpp.windows_per_day
    if observed_until is not None:
        if future_means is None:
            raise ValueError("observed_until requires future_means")
        idx = np.arange(observed_until, len(m))
        m[idx] = future_means[idx % w]
    if start < 1:
        raise ValueError("predictions need at least one window of history")
    out = np.zeros(stop - start)
    wod = np.arange(len(m)) % w
    for h in range(1, rpp.horizon + 1):
        src_lo, src_hi = start - h, stop - h
        if src_hi <= 0:
            continue
        src = np.arange(max(src_lo, 0), src_hi)
        dst = src + h - start
        out[dst] += m[src] * rpp.probs[wod[src], h - 1]
    return out


def approximate_future_alighting(
    alighting: FlowSeries | np.ndarray,
    calendar: ServiceCalendar,
    span: tuple[int, int],
) -> np.ndarray:
    """Per window-of-day mean alighting over a training span.

    Stands in for alighting at windows that have not happened yet.  A
    window-of-day with no sample in the span falls back to zero with a
    warning.
    """
    m = _as_array(alighting)
    lo, hi = span
    w_per_day = calendar.windows_per_day
    sums = np.zeros(w_per_day)
    counts = np.zeros(w_per_day)
    for t in range(lo, hi):
        sums[t % w_per_day] += m[t]
        counts[t % w_per_day] += 1
    means = np.zeros(w_per_day)
    has = counts > 0
    means[has] = sums[has] / counts[has]
    if not np.all(has):
        log.warning("%d window-of-day slots have no history; approximating with 0", int((~has).sum()))
    return means


@dataclass
class EventDetection:
    """Windows whose alighting exceeds the per-window-of-day outlier fence."""

    windows: frozenset[int]
    thresholds: np.ndarray  # per window-of-day: Q3 + 1.5 IQR

    def periods(self) -> list[tuple[int, int]]:
        """Flagged windows grouped into maximal runs [start, end] inclusive."""
        runs: list[tuple[int, int]] = []
        for t in sorted(self.windows):
            if runs and t == runs[-1][1] + 1:
                runs[-1] = (runs[-1][0], t)
            else:
                runs.append((t, t))
        return runs


def detect_event_periods(
    alighting: FlowSeries | np.ndarray,
    calendar: ServiceCalendar,
    train_span: tuple[int, int] | None = None,
    apply_span: tuple[int, int] | None = None,
) -> EventDetection:
    """Flag windows whose alighting strictly exceeds Q3 + 1.5 IQR.

    Quartiles are computed per window-of-day from the training span; the
    fence is then applied over ``apply_span`` (the whole calendar by
    default).  Fewer than four training days yields no flags and a warning,
    since quartiles over fewer samples are not meaningful.
    """
    m = _as_array(alighting)
    w_per_day = calendar.windows_per_day
    lo, hi = train_span if train_span is not None else (0, calendar.n_windows)
    a_lo, a_hi = apply_span if apply_span is not None else (0, calendar.n_windows)

    samples: list[list[float]] = [[] for _ in range(w_per_day)]
    for t in range(lo, hi):
        samples[t % w_per_day].append(m[t])
    n_days = min(len(s) for s in samples) if samples else 0
    thresholds = np.full(w_per_day, np.inf)
    if n_days < 4:
        log.warning("event detection needs >= 4 training days per window; got %d", n_days)
        return EventDetection(frozenset(), thresholds)
    for w in range(w_per_day):
        q1, q3 = np.quantile(samples[w], [0.25, 0.75])
        thresholds[w] = q3 + 1.5 * (q3 - q1)

    flagged = frozenset(
        t for t in range(a_lo, a_hi) if m[t] > thresholds[t % w_per_day]
    )
    return EventDetection(flagged, thresholds)


@dataclass
class EventDecomposition:
    """Normal/event split of a station's return behaviour."""

    normal_rpp: Rpp
    event_rpp: Rpp
    event_windows: frozenset[int]
    normal_median: np.ndarray  # per window-of-day median of normal alighting
    thresholds: np.ndarray  # detection fence per window-of-day
    alighting: np.ndarray = field(repr=False)

    def excess(self, t_a: int) -> float:
        """Event-induced share of alighting at window t_a (0 off events)."""
        if t_a not in self.event_windows:
            return 0.0
        w = t_a % self.normal_rpp.windows_per_day
        return max(0.0, float(self.alighting[t_a]) - float(self.normal_median[w]))


def split_event_rpp(
    pairs: ReturnPairCounts,
    alighting: FlowSeries | np.ndarray,
    detection: EventDetection,
    calendar: ServiceCalendar,
    horizon: int = 48,
    span: tuple[int, int] | None = None,
) -> EventDecomposition:
    """Split return behaviour into a normal and an event table.

    The normal table is estimated from non-flagged windows only.  On flagged
    windows the alighting above the per-window-of-day normal median counts
    as event-induced; return counts beyond what the normal share of the
    alighting would explain (floored at zero) are attributed to the event
    table, normalised by the pooled event-induced alighting.
    """
    m = _as_array(alighting)
    w_per_day = calendar.windows_per_day
    lo, hi = span if span is not None else (0, calendar.n_windows)
    event_in_span = {t for t in detection.windows if lo <= t < hi}
    normal_in_span = {t for t in range(lo, hi) if t not in event_in_span}

    normal_rpp = estimate_rpp(pairs, m, calendar, horizon, span=(lo, hi), ta_windows=normal_in_span)

    normal_median = np.zeros(w_per_day)
    for w in range(w_per_day):
        vals = [m[t] for t in range(lo, hi) if t % w_per_day == w and t in normal_in_span]
        if vals:
            normal_median[w] = float(np.median(vals))
        else:
            log.warning("window-of-day %d has no normal window in span; median falls back to 0", w)

    excess = {
        t: max(0.0, m[t] - normal_median[t % w_per_day]) for t in sorted(event_in_span)
    }

    numer = np.zeros((w_per_day, horizon))
    denom = np.zeros(w_per_day)
    for t_a in sorted(event_in_span):
        w = t_a % w_per_day
        denom[w] += excess[t_a]
        normal_share = m[t_a] - excess[t_a]
        for h in range(1, horizon + 1):
            observed = pairs.counts.get((t_a, t_a + h), 0)
            expected_normal = normal_share * normal_rpp.probs[w, h - 1]
            numer[w, h - 1] += max(0.0, observed - expected_normal)

    probs = np.zeros_like(numer)
    nonzero = denom > 0
    probs[nonzero] = numer[nonzero] / denom[nonzero, None]
    # attribution can overshoot the pooled excess on noisy rows; renormalise
    # any row that does so the table stays a probability table
    row_sums = probs.sum(axis=1)
    over = row_sums > 1.0
    if np.any(over):
        probs[over] /= row_sums[over, None]
    if not event_in_span:
        log.warning("station %r: no event windows in span; event table is zero", pairs.station)
    event_rpp = Rpp(pairs.station, w_per_day, horizon, probs)
    return EventDecomposition(
        normal_rpp=normal_rpp,
        event_rpp=event_rpp,
        # tables come from the span, but excess applies wherever the detector
        # fired, so events after the estimation span still get decomposed
        event_windows=frozenset(detection.windows),
        normal_median=normal_median,
        thresholds=detection.thresholds,
        alighting=m,
    )


def combined_return_probability(decomp: EventDecomposition, t_a: int, t: int) -> float:
    """Return probability for the gap t - t_a, mixing event and normal parts.

    The weights are the event-induced and normal shares of the alighting at
    t_a; a window with no alighting contributes probability zero.
    """
    rpp = decomp.normal_rpp
    h = t - t_a
    if not 1 <= h <= rpp.horizon:
        return 0.0
    if not 0 <= t_a < len(decomp.alighting):
        raise ValueError(f"window {t_a} outside the decomposition's alighting series")
    m = float(decomp.alighting[t_a])
    if m <= 0:
        return 0.0
    w = t_a % rpp.windows_per_day
    m_e = decomp.excess(t_a)
    p_n = rpp.probs[w, h - 1]
    p_e = decomp.event_rpp.probs[w, h - 1]
    return (m_e / m) * p_e + ((m - m_e) / m) * p_n


def event_adjusted_series(
    decomp: EventDecomposition,
    start: int,
    stop: int,
    observed_until: int | None = None,
    future_means: np.ndarray | None = None,
) -> np.ndarray:
    """Predicted returning flow using the event-aware mixed probabilities.

    Windows at or past ``observed_until`` take the per-window-of-day mean as
    their alighting value and are treated as event-free, since an event that
    has not happened yet cannot be observed in the alighting series.
    """
    m = decomp.alighting
    w_per_day = decomp.normal_rpp.windows_per_day
    horizon = decomp.normal_rpp.horizon
    if observed_until is not None and future_means is None:
        raise ValueError("observed_until requires future_means")
    out = np.zeros(stop - start)
    for t in range(start, stop):
        total = 0.0
        for h in range(1, min(horizon, t) + 1):
            t_a = t - h
            if observed_until is not None and t_a >= observed_until:
                total += future_means[t_a % w_per_day] * decomp.normal_rpp.probs[t_a % w_per_day, h - 1]
            else:
                total += m[t_a] * combined_return_probability(decomp, t_a, t)
        out[t - start] = total
    return out


def write_rpp_csv(path: str | Path, tables: list[Rpp]) -> None:
    """Sparse export: station,window_of_day,h,probability (zero cells omitted)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("station", "window_of_day", "h", "probability"))
        for rpp in tables:
            for w in range(rpp.windows_per_day):
                for h in range(1, rpp.horizon + 1):
                    p = rpp.probs[w, h - 1]
                    if p > 0:
                        writer.writerow((rpp.station, w, h, f"{p:.10g}"))


def write_event_windows_csv(
    path: str | Path, station: str, detection: EventDetection, calendar: ServiceCalendar
) -> None:
    """Export flagged windows as station,window_index,date,window_of_day."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("station", "window_index", "date", "window_of_day"))
        for t in sorted(detection.windows):
            writer.writerow((station, t, calendar.date_of(t).isoformat(), calendar.window_of_day(t)))
