"""Per-window passenger-flow series at a station.

Boarding and alighting series count trips whose board (resp. alight) time
falls in each global window of the service calendar.  The returning-flow
series redistributes extracted return pairs onto the window the passenger
boards in.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .calendars import ServiceCalendar
from .ingest import ReturnPairCounts, TripRecord

log = logging.getLogger(__name__)

FLOW_KINDS = ("boarding", "alighting", "returning")


@dataclass
class FlowSeries:
    """Counts per global window for one station and one flow kind."""

    station: str
    kind: str
    values: np.ndarray  # int64, length calendar.n_windows
    calendar: ServiceCalendar

    def __post_init__(self) -> None:
        if self.kind not in FLOW_KINDS:
            raise ValueError(f"unknown flow kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.values.shape != (self.calendar.n_windows,):
            raise ValueError(
                f"flow series has {self.values.shape} values for "
                f"{self.calendar.n_windows} calendar windows"
            )

    def __len__(self) -> int:
        return len(self.values)


def count_series(
    records: Iterable[TripRecord],
    station: str,
    kind: str,
    calendar: ServiceCalendar,
) -> FlowSeries:
    """Count boardings or alightings at ``station`` per global window.

    Trips outside service hours or on non-service days are skipped.  A
    station that appears in no record yields an all-zero series with a
    warning rather than an error.
    """
    if kind not in ("boarding", "alighting"):
        raise ValueError(f"count_series only counts boarding/alighting, got {kind!r}")
    values = np.zeros(calendar.n_windows, dtype=np.int64)
    seen = False
    for rec in records:
        if kind == "boarding":
            if rec.board_station != station:
                seen = seen or rec.alight_station == station
                continue
            t = calendar.locate(rec.board_time)
        else:
            if rec.alight_station != station:
                seen = seen or rec.board_station == station
                continue
            t = calendar.locate(rec.alight_time)
        seen = True
        if t is not None:
            values[t] += 1
    if not seen:
        log.warning("station %r appears in no trip record", station)
    return FlowSeries(station, kind, values, calendar)


def station_flows(
    records: Iterable[TripRecord],
    stations: Sequence[str],
    calendar: ServiceCalendar,
) -> dict[str, tuple[FlowSeries, FlowSeries]]:
    """One-pass (boarding, alighting) series for several stations."""
    wanted = set(stations)
    boarding = {s: np.zeros(calendar.n_windows, dtype=np.int64) for s in wanted}
    alighting = {s: np.zeros(calendar.n_windows, dtype=np.int64) for s in wanted}
    seen: set[str] = set()
    for rec in records:
        if rec.board_station in wanted:
            seen.add(rec.board_station)
            t = calendar.locate(rec.board_time)
            if t is not None:
                boarding[rec.board_station][t] += 1
        if rec.alight_station in wanted:
            seen.add(rec.alight_station)
            t = calendar.locate(rec.alight_time)
            if t is not None:
                alighting[rec.alight_station][t] += 1
    for s in wanted - seen:
        log.warning("station %r appears in no trip record", s)
    return {
        s: (
            FlowSeries(s, "boarding", boarding[s], calendar),
            FlowSeries(s, "alighting", alighting[s], calendar),
        )
        for s in stations
    }


def observed_returning_flow(pairs: ReturnPairCounts, calendar: ServiceCalendar) -> FlowSeries:
    """Returning flow r_t: pairs summed onto their board window t."""
    values = np.zeros(calendar.n_windows, dtype=np.int64)
    for (_, t_b), n in pairs.counts.items():
        values[t_b] += n
    return FlowSeries(pairs.station, "returning", values, calendar)


def write_flows_csv(path: str | Path, series: Iterable[FlowSeries]) -> None:
    """Export flow series as station,kind,window_index,date,window_of_day,count."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("station", "kind", "window_index", "date", "window_of_day", "count"))
        for fs in series:
            cal = fs.calendar
            for t, count in enumerate(fs.values):
                writer.writerow(
                    (fs.station, fs.kind, t, cal.date_of(t).isoformat(), cal.window_of_day(t), int(count))
                )
