"""Trip-record ingestion and return-pair extraction.

Input is a transaction log in CSV form, one completed trip per row:

    card_id,board_station,board_time,alight_station,alight_time

Timestamps are ISO-8601.  Malformed rows are collected and reported, never
silently dropped.  Return pairs follow the consecutive-trip rule: a card
that alights at a station and whose next trip boards at the same station is
counted as one return, keyed by the (alight window, board window) pair.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, NamedTuple

from .calendars import ServiceCalendar
from .errors import DataError

log = logging.getLogger(__name__)

TRIP_HEADER = ("card_id", "board_station", "board_time", "alight_station", "alight_time")


class TripRecord(NamedTuple):
    card_id: str
    board_station: str
    board_time: datetime
    alight_station: str
    alight_time: datetime


class RejectedRow(NamedTuple):
    row: int  # 1-based line number in the source file
    reason: str


@dataclass
class ParseResult:
    records: list[TripRecord]
    rejects: list[RejectedRow] = field(default_factory=list)

    @property
    def n_rejected(self) -> int:
        return len(self.rejects)


@dataclass
class ChainResult:
    """Per-card trip sequences ordered by board time."""

    chains: dict[str, list[TripRecord]]
    dropped: list[TripRecord] = field(default_factory=list)


@dataclass
class ReturnPairCounts:
    """Counts of alight->board return pairs keyed by global window pair."""

    station: str
    horizon: int
    counts: dict[tuple[int, int], int] = field(default_factory=dict)

    def total(self) -> int:
        return sum(self.counts.values())


def parse_trips(source: str | Path | IO[str]) -> ParseResult:
    """Read a trip CSV, separating valid records from rejected rows.

    The header row must name the five canonical columns; anything else is
    fatal.  Data rows are rejected (with the line number and a reason) for a
    wrong field count, an unparseable timestamp, an empty field, or an alight
    time that does not come after the board time.
    """
    if hasattr(source, "read"):
        return _parse_stream(source)  # type: ignore[arg-type]
    path = Path(source)
    if not path.exists():
        raise DataError(f"trip file not found: {path}")
    with open(path, newline="") as fh:
        return _parse_stream(fh)


def _parse_stream(fh: IO[str]) -> ParseResult:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("trip file is empty") from None
    if tuple(h.strip().lower() for h in header) != TRIP_HEADER:
        raise DataError(f"unexpected trip header: {header!r}")

    records: list[TripRecord] = []
    rejects: list[RejectedRow] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            rejects.append(RejectedRow(lineno, "field-count"))
            continue
        card, b_station, b_time, a_station, a_time = (f.strip() for f in row)
        if not (card and b_station and a_station):
            rejects.append(RejectedRow(lineno, "empty-field"))
            continue
        try:
            board = datetime.fromisoformat(b_time)
            alight = datetime.fromisoformat(a_time)
        except ValueError:
            rejects.append(RejectedRow(lineno, "bad-timestamp"))
            continue
        if alight <= board:
            rejects.append(RejectedRow(lineno, "non-positive-duration"))
            continue
        records.append(TripRecord(card, b_station, board, a_station, alight))
    if rejects:
        log.warning("rejected %d of %d trip rows", len(rejects), len(rejects) + len(records))
    return ParseResult(records, rejects)


def write_trips(path: str | Path, records: Iterable[TripRecord]) -> int:
    """Write records in the canonical CSV layout; returns row count."""
    n = 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIP_HEADER)
        for rec in records:
            writer.writerow(
                (
                    rec.card_id,
                    rec.board_station,
                    rec.board_time.isoformat(),
                    rec.alight_station,
                    rec.alight_time.isoformat(),
                )
            )
            n += 1
    return n


def chain_trips(records: Iterable[TripRecord]) -> ChainResult:
    """Group trips per card and order each chain by board time.

    A trip that boards before the card's previous trip has alighted cannot
    belong to the same traveller's itinerary; the later-boarding trip is
    dropped from the chain and reported.
    """
    by_card: dict[str, list[TripRecord]] = {}
    for rec in records:
        by_card.setdefault(rec.card_id, []).append(rec)

    dropped: list[TripRecord] = []
    for card, trips in by_card.items():
        trips.sort(key=lambda r: (r.board_time, r.alight_time))
        kept = [trips[0]]
        for rec in trips[1:]:
            if rec.board_time < kept[-1].alight_time:
                dropped.append(rec)
            else:
                kept.append(rec)
        by_card[card] = kept
    if dropped:
        log.warning("dropped %d overlapping trips", len(dropped))
    return ChainResult(by_card, dropped)


def extract_return_pairs(
    chains: dict[str, list[TripRecord]],
    station: str,
    calendar: ServiceCalendar,
    horizon: int = 48,
    allow_weekend_span: bool = True,
    max_gap_hours: float | None = None,
) -> ReturnPairCounts:
    """Count alight->board return pairs at ``station`` within ``horizon``.

    For each consecutive trip pair where the first alights at the station and
    the next boards there, both the alight and the board time must fall in
    service; the window gap must satisfy 0 < t_b - t_a <= horizon.

    ``allow_weekend_span`` keeps pairs whose alight and board windows sit on
    service days separated by excluded calendar days (Friday evening to
    Monday morning); switching it off skips them.  ``max_gap_hours`` caps the
    wall-clock gap instead of only the operational-window gap, for runs that
    read the horizon as elapsed time rather than in-service windows.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    w_per_day = calendar.windows_per_day
    counts: dict[tuple[int, int], int] = {}
    for trips in chains.values():
        for first, nxt in zip(trips, trips[1:]):
            if first.alight_station != station or nxt.board_station != station:
                continue
            t_a = calendar.locate(first.alight_time)
            t_b = calendar.locate(nxt.board_time)
            if t_a is None or t_b is None:
                continue
            gap = t_b - t_a
            if not 0 < gap <= horizon:
                continue
            if max_gap_hours is not None:
                elapsed = nxt.board_time - first.alight_time
                if elapsed.total_seconds() > max_gap_hours * 3600.0:
                    continue
            if not allow_weekend_span:
                k_a, k_b = t_a // w_per_day, t_b // w_per_day
                if (calendar.days[k_b] - calendar.days[k_a]).days > k_b - k_a:
                    continue
            key = (t_a, t_b)
            counts[key] = counts.get(key, 0) + 1
    return ReturnPairCounts(station, horizon, counts)
