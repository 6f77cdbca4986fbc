"""Service calendar: maps wall-clock timestamps onto operational windows.

A service day is divided into ``windows_per_day`` equal windows starting at
``day_start`` and ending exactly at midnight.  Windows are numbered globally
across the ordered service days, so the last window of one day is adjacent
to the first window of the next service day even when calendar days in
between (e.g. weekends) are excluded.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from datetime import date, datetime, time, timedelta
from functools import cached_property

from .errors import ConfigError

MINUTES_PER_DAY = 24 * 60


@dataclass(frozen=True)
class ServiceCalendar:
    """Ordered set of service days with an intra-day window grid.

    The grid must tile the span from ``day_start`` to midnight exactly:
    ``windows_per_day * window_minutes`` equals the minutes remaining in the
    day.  Window boundaries are half-open, ``[start, start + window_minutes)``,
    so midnight itself belongs to no window.
    """

    days: tuple[date, ...]
    windows_per_day: int = 36
    day_start: time = time(6, 0)
    window_minutes: int = 30

    def __post_init__(self) -> None:
        if not self.days:
            raise ConfigError("service calendar needs at least one day")
        if list(self.days) != sorted(set(self.days)):
            raise ConfigError("service days must be unique and ascending")
        start_min = self.day_start.hour * 60 + self.day_start.minute
        if self.day_start.second or self.day_start.microsecond:
            raise ConfigError("day_start must fall on a whole minute")
        if self.windows_per_day * self.window_minutes != MINUTES_PER_DAY - start_min:
            raise ConfigError(
                f"{self.windows_per_day} windows of {self.window_minutes} min "
                f"do not tile {self.day_start:%H:%M}..24:00"
            )

    @classmethod
    def from_range(
        cls,
        start: date,
        end: date,
        exclude_weekends: bool = True,
        **grid: int | time,
    ) -> "ServiceCalendar":
        """Calendar over all days in ``[start, end]``, weekends optional."""
        if end < start:
            raise ConfigError(f"calendar range ends before it starts: {start}..{end}")
        days = []
        d = start
        while d <= end:
            if not (exclude_weekends and d.weekday() >= 5):
                days.append(d)
            d += timedelta(days=1)
        if not days:
            raise ConfigError(f"no service days in {start}..{end}")
        return cls(days=tuple(days), **grid)  # type: ignore[arg-type]

    @cached_property
    def _day_index(self) -> dict[date, int]:
        return {d: k for k, d in enumerate(self.days)}

    @property
    def n_days(self) -> int:
        return len(self.days)

    @property
    def n_windows(self) -> int:
        return len(self.days) * self.windows_per_day

    def window_of_day(self, t: int) -> int:
        """Window-of-day index (0..windows_per_day-1) of global window ``t``."""
        return t % self.windows_per_day

    def locate(self, ts: datetime) -> int | None:
        """Global window index containing ``ts``, or None when out of service."""
        k = self._day_index.get(ts.date())
        if k is None:
            return None
        offset = ts - datetime.combine(ts.date(), self.day_start)
        if offset < timedelta(0):
            return None
        w = int(offset // timedelta(minutes=self.window_minutes))
        if w >= self.windows_per_day:
            return None
        return k * self.windows_per_day + w

    def locate_date(self, d: date) -> int | None:
        """Index of service day ``d`` (0-based), or None when not in service."""
        return self._day_index.get(d)

    def window_start(self, t: int) -> datetime:
        """Wall-clock start of global window ``t``."""
        if not 0 <= t < self.n_windows:
            raise IndexError(f"window {t} outside calendar of {self.n_windows}")
        k, w = divmod(t, self.windows_per_day)
        return datetime.combine(self.days[k], self.day_start) + timedelta(
            minutes=w * self.window_minutes
        )

    def date_of(self, t: int) -> date:
        """Service day that global window ``t`` belongs to."""
        if not 0 <= t < self.n_windows:
            raise IndexError(f"window {t} outside calendar of {self.n_windows}")
        return self.days[t // self.windows_per_day]

    def day_span(self, first: date, last: date) -> tuple[int, int]:
        """Global window range [lo, hi) covering service days in first..last.

        The bounds may fall on non-service days; they snap inward to the
        nearest service day.  An interval containing no service day is fatal.
        """
        lo = bisect_left(self.days, first)
        hi = bisect_right(self.days, last)
        if hi <= lo:
            raise ConfigError(f"{first}..{last} contains no service day")
        return lo * self.windows_per_day, hi * self.windows_per_day
