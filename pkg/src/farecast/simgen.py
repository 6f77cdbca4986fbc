"""Synthetic smart-card trip generator with a known ground truth.

Each station draws per-window alighting counts from Poisson profiles; every
alighting passenger either boards again h windows later, with h drawn from
the station's ground-truth return-probability row, or never comes back.
Independent boardings (passengers who did not arrive by train) come from a
separate Poisson profile.  Optional day-level demand shocks scale a whole
day's alighting volume, per-day duration jitter shifts the return-gap
distribution, and injected events add extra alighting with their own
concentrated return-gap distribution.

All randomness flows from a single scenario seed through per-station
substreams, so generation is reproducible record-for-record and stations
can be generated independently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, time, timedelta
from pathlib import Path

import numpy as np

from .calendars import ServiceCalendar
from .errors import ConfigError
from .ingest import TripRecord

ARCHETYPES = ("commercial", "residential", "mixed")
ORIGIN_HUB = "HUB_A"
DEST_HUB = "HUB_B"


@dataclass
class StationSpec:
    """Ground truth for one station."""

    station: str
    archetype: str
    alight_profile: np.ndarray  # Poisson mean per window-of-day
    g2_profile: np.ndarray  # independent boardings per window-of-day
    rpp: np.ndarray  # W x H return-gap probabilities, rows sum <= 1
    day_shock: tuple[float, float] | None = None  # uniform day volume factor
    duration_jitter: int = 0  # max per-day shift of the return-gap row

    def validate(self, windows_per_day: int, horizon: int) -> None:
        if self.archetype not in ARCHETYPES:
            raise ConfigError(f"unknown archetype {self.archetype!r}")
        if self.alight_profile.shape != (windows_per_day,):
            raise ConfigError(f"{self.station}: alighting profile must have {windows_per_day} windows")
        if self.g2_profile.shape != (windows_per_day,):
            raise ConfigError(f"{self.station}: boarding profile must have {windows_per_day} windows")
        if self.rpp.shape != (windows_per_day, horizon):
            raise ConfigError(f"{self.station}: return table must be {windows_per_day}x{horizon}")
        if np.any(self.alight_profile < 0) or np.any(self.g2_profile < 0):
            raise ConfigError(f"{self.station}: profiles must be non-negative")
        if np.any(self.rpp < 0) or np.any(self.rpp.sum(axis=1) > 1 + 1e-9):
            raise ConfigError(f"{self.station}: return rows must be probabilities summing <= 1")
        if self.day_shock is not None and not 0 < self.day_shock[0] <= self.day_shock[1]:
            raise ConfigError(f"{self.station}: day shock bounds must be 0 < lo <= hi")
        if self.duration_jitter < 0:
            raise ConfigError(f"{self.station}: duration jitter must be >= 0")


@dataclass
class EventSpec:
    """Extra alighting on one day with its own return-gap distribution."""

    station: str
    day: date
    window_lo: int  # window-of-day span, inclusive
    window_hi: int
    extra_alighting: float  # Poisson mean added per window in the span
    return_offsets: dict[int, float]  # gap -> probability, sum <= 1

    def validate(self, windows_per_day: int, horizon: int) -> None:
        if not 0 <= self.window_lo <= self.window_hi < windows_per_day:
            raise ConfigError(f"event window span {self.window_lo}..{self.window_hi} out of range")
        if self.extra_alighting <= 0:
            raise ConfigError("event extra alighting must be positive")
        total = 0.0
        for h, p in self.return_offsets.items():
            if not 1 <= h <= horizon:
                raise ConfigError(f"event return gap {h} outside 1..{horizon}")
            if p < 0:
                raise ConfigError("event return probabilities must be >= 0")
            total += p
        if total > 1 + 1e-9:
            raise ConfigError("event return probabilities sum above one")


@dataclass
class ScenarioConfig:
    calendar: ServiceCalendar
    stations: list[StationSpec]
    events: list[EventSpec] = field(default_factory=list)
    horizon: int = 48
    seed: int = 0

    def __post_init__(self) -> None:
        ids = [s.station for s in self.stations]
        if not ids:
            raise ConfigError("scenario needs at least one station")
        if len(set(ids)) != len(ids):
            raise ConfigError("station ids must be unique")
        for s in self.stations:
            s.validate(self.calendar.windows_per_day, self.horizon)
        for e in self.events:
            if e.station not in ids:
                raise ConfigError(f"event references unknown station {e.station!r}")
            if self.calendar.locate_date(e.day) is None:
                raise ConfigError(f"event day {e.day} is not a service day")
            e.validate(self.calendar.windows_per_day, self.horizon)


# ------------------------------------------------------------------ presets

def _gauss(w: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-((w - center) ** 2) / (2.0 * width**2))


def _return_row(horizon: int, parts: list[tuple[float, float, float]]) -> np.ndarray:
    """Mixture of discretised Gaussians over gaps 1..horizon.

    ``parts`` lists (mass, mean, width); each component is normalised on the
    in-range gaps so the row total equals the summed masses.
    """
    h = np.arange(1, horizon + 1, dtype=float)
    row = np.zeros(horizon)
    for mass, mean, width in parts:
        shape = _gauss(h, mean, width)
        total = shape.sum()
        if total > 0:
            row += mass * shape / total
    return row


def _commercial_tables(w_per_day: int, horizon: int):
    w = np.arange(w_per_day, dtype=float)
    alight = 0.12 + 1.0 * _gauss(w, 3.5, 1.6) + 0.35 * _gauss(w, 13.0, 4.0)
    g2 = 0.25 + 0.3 * _gauss(w, 14.0, 5.0)
    rows = np.zeros((w_per_day, horizon))
    for i in range(w_per_day):
        # workers stay roughly nine hours, short visits about two; those who
        # alight later in the day stay a little less
        work_gap = max(4.0, 18.0 - i / 6.0)
        rows[i] = _return_row(horizon, [(0.55, work_gap, 2.0), (0.2, 4.0, 1.5)])
    return alight, g2, rows


def _residential_tables(w_per_day: int, horizon: int):
    w = np.arange(w_per_day, dtype=float)
    alight = 0.10 + 1.0 * _gauss(w, 25.0, 2.2) + 0.25 * _gauss(w, 13.0, 4.0)
    g2 = 0.2 + 0.5 * _gauss(w, 4.0, 2.0)
    rows = np.zeros((w_per_day, horizon))
    for i in range(w_per_day):
        # residents leave again next morning: the gap shrinks as the day
        # advances, bottoming out at a short overnight stay
        overnight = max(6.0, (w_per_day - i) + 4.0)
        rows[i] = _return_row(horizon, [(0.62, overnight, 2.5)])
    return alight, g2, rows


def _mixed_tables(w_per_day: int, horizon: int):
    w = np.arange(w_per_day, dtype=float)
    alight = 0.11 + 0.55 * _gauss(w, 3.5, 1.8) + 0.45 * _gauss(w, 25.0, 2.8) + 0.3 * _gauss(w, 13.0, 4.5)
    g2 = 0.25 + 0.25 * _gauss(w, 5.0, 2.5) + 0.2 * _gauss(w, 14.0, 5.0)
    rows = np.zeros((w_per_day, horizon))
    for i in range(w_per_day):
        # balanced station: errand-length same-day returns and a broad
        # late-next-morning hump carry similar mass
        errand = max(3.0, 8.0 - i / 8.0)
        overnight = (w_per_day - i) + 12.0
        rows[i] = _return_row(horizon, [(0.40, errand, 2.5), (0.38, overnight, 6.0)])
    return alight, g2, rows


def station_preset(
    station: str,
    archetype: str,
    w_per_day: int = 36,
    horizon: int = 48,
    alight_scale: float = 100.0,
    g2_scale: float = 40.0,
    day_shock: tuple[float, float] | None = None,
    duration_jitter: int = 0,
) -> StationSpec:
    """Ready-made station of one of the three built-in archetypes."""
    if archetype == "commercial":
        alight, g2, rows = _commercial_tables(w_per_day, horizon)
    elif archetype == "residential":
        alight, g2, rows = _residential_tables(w_per_day, horizon)
    elif archetype == "mixed":
        alight, g2, rows = _mixed_tables(w_per_day, horizon)
    else:
        raise ConfigError(f"unknown archetype {archetype!r}")
    return StationSpec(
        station=station,
        archetype=archetype,
        alight_profile=alight_scale * alight,
        g2_profile=g2_scale * g2,
        rpp=rows,
        day_shock=day_shock,
        duration_jitter=duration_jitter,
    )


# ---------------------------------------------------------------- generation

def _shift_row(row: np.ndarray, shift: int) -> np.ndarray:
    """Shift a return-gap row; mass pushed outside 1..H becomes no-return."""
    if shift == 0:
        return row
    out = np.zeros_like(row)
    if shift > 0:
        out[shift:] = row[:-shift]
    else:
        out[:shift] = row[-shift:]
    return out


def _event_lookup(config: ScenarioConfig) -> dict[tuple[str, int], EventSpec]:
    table: dict[tuple[str, int], EventSpec] = {}
    cal = config.calendar
    for ev in config.events:
        k = cal.locate_date(ev.day)
        for w in range(ev.window_lo, ev.window_hi + 1):
            table[(ev.station, k * cal.windows_per_day + w)] = ev
    return table


def injected_event_windows(config: ScenarioConfig) -> dict[str, set[int]]:
    """Ground-truth event windows per station (global indices)."""
    out: dict[str, set[int]] = {s.station: set() for s in config.stations}
    for (station, t), _ in _event_lookup(config).items():
        out[station].add(t)
    return out


def _event_row(ev: EventSpec, horizon: int) -> np.ndarray:
    row = np.zeros(horizon)
    for h, p in ev.return_offsets.items():
        row[h - 1] = p
    return row


def expected_boarding(spec: StationSpec, calendar: ServiceCalendar, horizon: int) -> np.ndarray:
    """Mean boarding per global window implied by the ground truth.

    Valid for shock- and jitter-free stations: independent boardings plus
    the return convolution of the alighting profile.  Returns that would
    land past the end of the calendar are not generated, matching the
    generator's truncation.
    """
    w_per_day = calendar.windows_per_day
    n = calendar.n_windows
    mu = np.zeros(n)
    for t in range(n):
        mu[t] = spec.g2_profile[t % w_per_day]
        for h in range(1, min(horizon, t) + 1):
            t_a = t - h
            mu[t] += spec.alight_profile[t_a % w_per_day] * spec.rpp[t_a % w_per_day, h - 1]
    return mu


def generate(config: ScenarioConfig) -> list[TripRecord]:
    """Draw the full trip log for a scenario, sorted by board time.

    Stations use independent substreams spawned from the scenario seed, so
    the output is reproducible and per-station generation order does not
    matter.
    """
    cal = config.calendar
    events = _event_lookup(config)
    seeds = np.random.SeedSequence(config.seed).spawn(len(config.stations))
    records: list[TripRecord] = []
    for spec, seed in zip(config.stations, seeds):
        records.extend(_generate_station(spec, cal, config.horizon, events, seed))
    records.sort(key=lambda r: (r.board_time, r.card_id))
    return records


def _generate_station(
    spec: StationSpec,
    cal: ServiceCalendar,
    horizon: int,
    events: dict[tuple[str, int], EventSpec],
    seed: np.random.SeedSequence,
) -> list[TripRecord]:
    rng = np.random.default_rng(seed)
    w_per_day = cal.windows_per_day
    win_sec = cal.window_minutes * 60
    n_windows = cal.n_windows
    records: list[TripRecord] = []

    def emit_group(t: int, count: int, row: np.ndarray, tag: str) -> None:
        """Passengers alighting in window t whose return gap follows ``row``."""
        if count == 0:
            return
        p_full = np.append(row, max(0.0, 1.0 - row.sum()))
        p_full /= p_full.sum()
        counts = rng.multinomial(count, p_full)
        start = cal.window_start(t)
        serial = 0
        for h_idx in range(horizon + 1):
            c = int(counts[h_idx])
            if c == 0:
                continue
            alight_off = rng.integers(0, win_sec, size=c)
            travel_in = rng.integers(8 * 60, 25 * 60, size=c)
            returns = h_idx < horizon and t + h_idx + 1 < n_windows
            if returns:
                t_b = t + h_idx + 1
                board_start = cal.window_start(t_b)
                board_off = rng.integers(0, win_sec, size=c)
                travel_out = rng.integers(8 * 60, 25 * 60, size=c)
            for i in range(c):
                card = f"{tag}.{h_idx}.{serial}"
                serial += 1
                alight_at = start + timedelta(seconds=int(alight_off[i]))
                records.append(
                    TripRecord(
                        card,
                        ORIGIN_HUB,
                        alight_at - timedelta(seconds=int(travel_in[i])),
                        spec.station,
                        alight_at,
                    )
                )
                if returns:
                    board_at = board_start + timedelta(seconds=int(board_off[i]))
                    records.append(
                        TripRecord(
                            card,
                            spec.station,
                            board_at,
                            DEST_HUB,
                            board_at + timedelta(seconds=int(travel_out[i])),
                        )
                    )

    for k in range(cal.n_days):
        shock = rng.uniform(*spec.day_shock) if spec.day_shock else 1.0
        shift = int(rng.integers(-spec.duration_jitter, spec.duration_jitter + 1)) if spec.duration_jitter else 0
        for w in range(w_per_day):
            t = k * w_per_day + w
            n_alight = rng.poisson(spec.alight_profile[w] * shock)
            emit_group(t, int(n_alight), _shift_row(spec.rpp[w], shift), f"{spec.station}.{t}")

            ev = events.get((spec.station, t))
            if ev is not None:
                n_extra = rng.poisson(ev.extra_alighting)
                emit_group(t, int(n_extra), _event_row(ev, horizon), f"e.{spec.station}.{t}")

            n_g2 = rng.poisson(spec.g2_profile[w])
            if n_g2:
                start = cal.window_start(t)
                board_off = rng.integers(0, win_sec, size=n_g2)
                travel = rng.integers(8 * 60, 25 * 60, size=n_g2)
                for i in range(int(n_g2)):
                    board_at = start + timedelta(seconds=int(board_off[i]))
                    records.append(
                        TripRecord(
                            f"g.{spec.station}.{t}.{i}",
                            spec.station,
                            board_at,
                            DEST_HUB,
                            board_at + timedelta(seconds=int(travel[i])),
                        )
                    )
    return records


# ------------------------------------------------------------- configuration

def scenario_from_json(path: str | Path) -> ScenarioConfig:
    """Load a scenario description; see the README for the layout."""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario file is not valid JSON: {exc}") from None
    return scenario_from_dict(raw)


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    try:
        cal_raw = raw["calendar"]
        calendar = ServiceCalendar.from_range(
            date.fromisoformat(cal_raw["start"]),
            date.fromisoformat(cal_raw["end"]),
            exclude_weekends=cal_raw.get("exclude_weekends", True),
            windows_per_day=cal_raw.get("windows_per_day", 36),
            day_start=time.fromisoformat(cal_raw.get("day_start", "06:00")),
            window_minutes=cal_raw.get("window_minutes", 30),
        )
        horizon = int(raw.get("horizon", 48))
        stations = []
        for s in raw["stations"]:
            if "alight_profile" in s or "rpp" in s:
                spec = StationSpec(
                    station=s["id"],
                    archetype=s.get("archetype", "mixed"),
                    alight_profile=np.asarray(s["alight_profile"], dtype=float),
                    g2_profile=np.asarray(s["g2_profile"], dtype=float),
                    rpp=np.asarray(s["rpp"], dtype=float),
                    day_shock=tuple(s["day_shock"]) if s.get("day_shock") else None,
                    duration_jitter=int(s.get("duration_jitter", 0)),
                )
            else:
                spec = station_preset(
                    s["id"],
                    s["archetype"],
                    w_per_day=calendar.windows_per_day,
                    horizon=horizon,
                    alight_scale=float(s.get("alight_scale", 100.0)),
                    g2_scale=float(s.get("g2_scale", 40.0)),
                    day_shock=tuple(s["day_shock"]) if s.get("day_shock") else None,
                    duration_jitter=int(s.get("duration_jitter", 0)),
                )
            stations.append(spec)
        events = [
            EventSpec(
                station=e["station"],
                day=date.fromisoformat(e["date"]),
                window_lo=int(e["windows"][0]),
                window_hi=int(e["windows"][1]),
                extra_alighting=float(e["extra_alighting"]),
                return_offsets={int(k): float(v) for k, v in e["return_offsets"].items()},
            )
            for e in raw.get("events", [])
        ]
        seed = int(raw.get("seed", 0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario configuration: {exc!r}") from None
    return ScenarioConfig(calendar=calendar, stations=stations, events=events, horizon=horizon, seed=seed)


def ground_truth_tables(config: ScenarioConfig) -> dict[str, np.ndarray]:
    """Station id -> true return-probability table."""
    return {s.station: s.rpp.copy() for s in config.stations}
