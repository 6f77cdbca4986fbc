"""Batch command-line interface.

Subcommands cover the whole workflow: generating synthetic trips, building
flow series and return-probability tables, fitting and evaluating the
forecasting models, clustering stations, and the event-aware variant.
``pipeline`` chains everything on one trip file.

Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
failure.  Station-level failures inside a multi-station run are isolated
and reported; they do not abort the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date, time
from pathlib import Path

import numpy as np

from . import cluster as cluster_mod
from . import evaluation, flows, ingest, rpp, sarima, simgen
from .calendars import ServiceCalendar
from .errors import ConfigError, DataError, FarecastError
from .evaluation import CvReport, EvalReport

log = logging.getLogger(__name__)

MODELS = ("M0", "M1", "M2")
EVENT_MODELS = ("M0", "M2", "M2e")


# ------------------------------------------------------------- configuration

@dataclass
class RunConfig:
    """Validated run configuration: calendar, splits, models, switches."""

    calendar: ServiceCalendar
    estimate_days: tuple[date, date]
    train_days: tuple[date, date]
    test_days: tuple[date, date]
    horizon: int = 48
    stations: list[str] | None = None  # None means discover from the data
    order: sarima.SarimaOrder = None  # type: ignore[assignment]
    event_order: sarima.SarimaOrder = None  # type: ignore[assignment]
    models: tuple[str, ...] = MODELS
    cv_horizons: tuple[int, ...] = ()
    cv_refit_every: int = 1
    events_enabled: bool = False
    allow_weekend_span: bool = True
    workers: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        cal = self.calendar
        self.estimate_span = cal.day_span(*self.estimate_days)
        self.train_span = cal.day_span(*self.train_days)
        self.test_span = cal.day_span(*self.test_days)
        if not (
            self.estimate_span[1] <= self.train_span[0]
            and self.train_span[1] <= self.test_span[0]
        ):
            raise ConfigError("estimate, train and test spans must be ordered and disjoint")
        if self.train_span[1] != self.test_span[0]:
            raise ConfigError("the test span must start on the service day after the train span")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.cv_refit_every < 1:
            raise ConfigError("cv_refit_every must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        for L in self.cv_horizons:
            if L < 1:
                raise ConfigError("cv horizons must be >= 1")
        for name in self.models:
            if name not in MODELS:
                raise ConfigError(f"unknown model {name!r}; choose from {MODELS}")


def _parse_order(raw, m: int) -> sarima.SarimaOrder:
    vals = [int(v) for v in raw]
    if len(vals) == 3:
        return sarima.SarimaOrder(*vals)
    if len(vals) == 6:
        p, d, q, P, D, Q = vals
        return sarima.SarimaOrder(p, d, q, P, D, Q, m if (P or D or Q) else 1)
    raise ConfigError(f"order must have 3 or 6 components, got {raw!r}")


def load_run_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"run configuration not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"run configuration is not valid JSON: {exc}") from None
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
        splits = raw["splits"]

        def span(name: str) -> tuple[date, date]:
            lo, hi = splits[name]
            return date.fromisoformat(lo), date.fromisoformat(hi)

        stations = raw.get("stations", "all")
        return RunConfig(
            calendar=calendar,
            estimate_days=span("estimate"),
            train_days=span("train"),
            test_days=span("test"),
            horizon=int(raw.get("horizon", 48)),
            stations=None if stations == "all" else list(stations),
            order=_parse_order(raw.get("order", [2, 0, 1, 1, 1, 0]), calendar.windows_per_day),
            event_order=_parse_order(raw.get("event_order", [2, 0, 1]), calendar.windows_per_day),
            models=tuple(raw.get("models", list(MODELS))),
            cv_horizons=tuple(int(v) for v in raw.get("cv_horizons", [])),
            cv_refit_every=int(raw.get("cv_refit_every", 1)),
            events_enabled=bool(raw.get("events", False)),
            allow_weekend_span=bool(raw.get("allow_weekend_span", True)),
            workers=int(raw.get("workers", 1)),
            seed=int(raw.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad run configuration: {exc!r}") from None


# ------------------------------------------------------------- station stage

@dataclass
class StationData:
    """Everything derived from the trip log for one station."""

    station: str
    boarding: flows.FlowSeries
    alighting: flows.FlowSeries
    returning: flows.FlowSeries
    pairs: ingest.ReturnPairCounts
    table: rpp.Rpp  # estimated on the estimate span


@dataclass
class StationOutputs:
    """Per-station model results collected for the report writers."""

    station: str
    fits: dict[str, sarima.SarimaFit] = field(default_factory=dict)
    reports: list[EvalReport] = field(default_factory=list)
    cv_reports: list[CvReport] = field(default_factory=list)
    p_values: dict[tuple[str, str], float] = field(default_factory=dict)
    detection: rpp.EventDetection | None = None
    error: str | None = None


def discover_stations(records: list[ingest.TripRecord]) -> list[str]:
    """Stations appearing as both a board and an alight side of some trip."""
    boarded = {r.board_station for r in records}
    alighted = {r.alight_station for r in records}
    return sorted(boarded & alighted)


def build_station_data(
    cfg: RunConfig, records: list[ingest.TripRecord], chains: dict[str, list[ingest.TripRecord]]
) -> dict[str, StationData]:
    stations = cfg.stations if cfg.stations is not None else discover_stations(records)
    if not stations:
        raise DataError("no stations to analyse")
    flow_map = flows.station_flows(records, stations, cfg.calendar)
    data: dict[str, StationData] = {}
    for station in stations:
        boarding, alighting = flow_map[station]
        pairs = ingest.extract_return_pairs(
            chains,
            station,
            cfg.calendar,
            horizon=cfg.horizon,
            allow_weekend_span=cfg.allow_weekend_span,
        )
        table = rpp.estimate_rpp(
            pairs, alighting, cfg.calendar, cfg.horizon, span=cfg.estimate_span
        )
        data[station] = StationData(
            station=station,
            boarding=boarding,
            alighting=alighting,
            returning=flows.observed_returning_flow(pairs, cfg.calendar),
            pairs=pairs,
            table=table,
        )
    return data


def _covariates(cfg: RunConfig, sd: StationData) -> dict[str, np.ndarray | None]:
    """Aligned regressor series for each model over the whole calendar.

    M1 uses the observed returning flow of the previous window; M2 uses the
    predicted returning flow for the window itself, computed from alighting
    of earlier windows only.
    """
    n = cfg.calendar.n_windows
    r_obs = sd.returning.values.astype(float)
    lagged = np.zeros(n)
    lagged[1:] = r_obs[:-1]
    start = max(1, cfg.estimate_span[1])
    predicted = np.zeros(n)
    predicted[start:] = rpp.predicted_returning_series(sd.table, sd.alighting, start, n)
    return {"M0": None, "M1": lagged, "M2": predicted}


def evaluate_station(cfg: RunConfig, sd: StationData) -> StationOutputs:
    out = StationOutputs(station=sd.station)
    y = sd.boarding.values.astype(float)
    covs = _covariates(cfg, sd)
    reports: dict[str, EvalReport] = {}
    for model in cfg.models:
        fit, rep = evaluation.evaluate_one_step(
            y,
            cfg.order,
            cfg.train_span,
            cfg.test_span,
            regressor=covs[model],
            station=sd.station,
            model=model,
        )
        out.fits[model] = fit
        reports[model] = rep
        out.reports.append(rep)
    for model, baseline in (("M1", "M0"), ("M2", "M0"), ("M2", "M1")):
        if model in reports and baseline in reports:
            test = evaluation.paired_t_test(
                reports[model].errors_test, reports[baseline].errors_test
            )
            out.p_values[(model, baseline)] = test.p_value

    if cfg.cv_horizons:
        cv_models = [m for m in cfg.models if m in ("M0", "M2")]
        for L in cfg.cv_horizons:
            for model in cv_models:
                out.cv_reports.append(_station_cv(cfg, sd, covs, model, L))

    if cfg.events_enabled:
        _evaluate_event_models(cfg, sd, out)
    return out


def _station_cv(
    cfg: RunConfig,
    sd: StationData,
    covs: dict[str, np.ndarray | None],
    model: str,
    L: int,
) -> CvReport:
    y = sd.boarding.values.astype(float)
    m = sd.alighting.values.astype(float)
    cal = cfg.calendar
    est_lo = cfg.estimate_span[0]

    future_fn = None
    if model == "M2":

        def future_fn(origin: int, steps: int) -> np.ndarray:
            means = rpp.approximate_future_alighting(m, cal, (est_lo, origin + 1))
            return rpp.predicted_returning_series(
                sd.table,
                m,
                origin + 1,
                origin + 1 + steps,
                observed_until=origin + 1,
                future_means=means,
            )

    return evaluation.rolling_origin_cv(
        y,
        cfg.order,
        L,
        train_start=cfg.train_span[0],
        test_span=cfg.test_span,
        regressor=covs[model],
        future_regressor_fn=future_fn,
        refit_every=cfg.cv_refit_every,
        station=sd.station,
        model=model,
    )


def _evaluate_event_models(cfg: RunConfig, sd: StationData, out: StationOutputs) -> None:
    """Non-seasonal models scored on event windows of the test span."""
    cal = cfg.calendar
    y = sd.boarding.values.astype(float)
    m = sd.alighting.values.astype(float)
    history_span = (cfg.estimate_span[0], cfg.train_span[1])

    detection = rpp.detect_event_periods(m, cal, train_span=history_span)
    out.detection = detection
    decomp = rpp.split_event_rpp(
        sd.pairs, m, detection, cal, horizon=cfg.horizon, span=history_span
    )
    start = max(1, cfg.estimate_span[1])
    adjusted = np.zeros(cal.n_windows)
    adjusted[start:] = rpp.event_adjusted_series(decomp, start, cal.n_windows)
    plain = _covariates(cfg, sd)["M2"]

    boarding_events = rpp.detect_event_periods(y, cal, train_span=history_span)
    mask = np.zeros(cal.n_windows, dtype=bool)
    for t in boarding_events.windows:
        mask[t] = True

    covariates = {"M0": None, "M2": plain, "M2e": adjusted}
    reports: dict[str, EvalReport] = {}
    for model in EVENT_MODELS:
        fit, rep = evaluation.evaluate_one_step(
            y,
            cfg.event_order,
            cfg.train_span,
            cfg.test_span,
            regressor=covariates[model],
            station=sd.station,
            model=model,
            event_mask=mask,
        )
        rep.model = model
        rep.horizon = 0  # marks the event variant in the evaluation table
        reports[model] = rep
        out.fits[f"event:{model}"] = fit
        out.reports.append(rep)
    for model, baseline in (("M2", "M0"), ("M2e", "M0"), ("M2e", "M2")):
        test = evaluation.paired_t_test(reports[model].errors_test, reports[baseline].errors_test)
        out.p_values[(f"event:{model}", f"event:{baseline}")] = test.p_value


def run_stations(cfg: RunConfig, data: dict[str, StationData]) -> dict[str, StationOutputs]:
    """Evaluate every station, isolating per-station failures."""

    def safe(sd: StationData) -> StationOutputs:
        try:
            return evaluate_station(cfg, sd)
        except FarecastError as exc:
            log.error("station %s failed: %s", sd.station, exc)
            return StationOutputs(station=sd.station, error=str(exc))

    stations = sorted(data)
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(lambda s: safe(data[s]), stations))
    else:
        results = [safe(data[s]) for s in stations]
    return {r.station: r for r in results}


# ------------------------------------------------------------------- writers

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def write_evaluation_csv(path: Path, outputs: dict[str, StationOutputs]) -> None:
    header = (
        "station,variant,model,horizon,n_test,rmse_train,smape_train,rmse_test,"
        "smape_test,aic,p_vs_m0,p_vs_m1,rmse_event,smape_event"
    ).split(",")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for station in sorted(outputs):
            out = outputs[station]
            for rep in out.reports:
                variant = "event" if rep.horizon == 0 else "seasonal"
                prefix = "event:" if variant == "event" else ""
                writer.writerow(
                    [
                        station,
                        variant,
                        rep.model,
                        1 if rep.horizon == 0 else rep.horizon,
                        rep.n_test,
                        _fmt(rep.rmse_train),
                        _fmt(rep.smape_train),
                        _fmt(rep.rmse_test),
                        _fmt(rep.smape_test),
                        _fmt(rep.aic),
                        _fmt(out.p_values.get((f"{prefix}{rep.model}", f"{prefix}M0"))),
                        _fmt(out.p_values.get((f"{prefix}{rep.model}", f"{prefix}M1"))),
                        _fmt(rep.rmse_event),
                        _fmt(rep.smape_event),
                    ]
                )
            for cv in out.cv_reports:
                writer.writerow(
                    [
                        station,
                        "rolling",
                        cv.model,
                        cv.horizon,
                        cv.n_test,
                        "",
                        "",
                        _fmt(cv.rmse_test),
                        _fmt(cv.smape_test),
                        "",
                        "",
                        "",
                        "",
                        "",
                    ]
                )


def write_predictions_csv(
    path: Path, cfg: RunConfig, data: dict[str, StationData], outputs: dict[str, StationOutputs]
) -> None:
    te_lo, te_hi = cfg.test_span
    cal = cfg.calendar
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ("station", "variant", "model", "window_index", "date", "window_of_day", "actual", "predicted")
        )
        for station in sorted(outputs):
            out = outputs[station]
            actual = data[station].boarding.values[te_lo:te_hi]
            for rep in out.reports:
                variant = "event" if rep.horizon == 0 else "seasonal"
                preds = rep.errors_test + actual
                for i, t in enumerate(range(te_lo, te_hi)):
                    writer.writerow(
                        (
                            station,
                            variant,
                            rep.model,
                            t,
                            cal.date_of(t).isoformat(),
                            cal.window_of_day(t),
                            int(actual[i]),
                            _fmt(float(preds[i])),
                        )
                    )


def write_fits_json(path: Path, outputs: dict[str, StationOutputs]) -> None:
    doc: dict[str, dict] = {}
    for station in sorted(outputs):
        out = outputs[station]
        if out.error is not None:
            doc[station] = {"error": out.error}
            continue
        entry: dict[str, dict] = {}
        for name in sorted(out.fits):
            fit = out.fits[name]
            o = fit.order
            entry[name] = {
                "order": [o.p, o.d, o.q, o.P, o.D, o.Q, o.m],
                "ar": list(fit.params.ar),
                "ma": list(fit.params.ma),
                "seasonal_ar": list(fit.params.sar),
                "seasonal_ma": list(fit.params.sma),
                "beta": fit.params.beta,
                "mean": fit.params.mean,
                "sigma2": fit.params.sigma2,
                "loglik": fit.loglik,
                "aic": fit.aic,
                "converged": fit.converged,
                "iterations": fit.n_iter,
                "n_obs": fit.n_obs,
            }
        doc[station] = entry
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def write_rejects_csv(path: Path, parse_result: ingest.ParseResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("row", "reason"))
        for rej in parse_result.rejects:
            writer.writerow((rej.row, rej.reason))


def write_overlaps_csv(path: Path, chain_result: ingest.ChainResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("card_id", "board_time"))
        for rec in sorted(chain_result.dropped, key=lambda r: (r.card_id, r.board_time)):
            writer.writerow((rec.card_id, rec.board_time.isoformat()))


# -------------------------------------------------------------------- stages

def _prepare(cfg: RunConfig, trips: str):
    parsed = ingest.parse_trips(trips)
    chained = ingest.chain_trips(parsed.records)
    data = build_station_data(cfg, parsed.records, chained.chains)
    return parsed, chained, data


def cmd_simulate(args) -> int:
    config = simgen.scenario_from_json(args.config)
    if args.seed is not None:
        config.seed = args.seed
    records = simgen.generate(config)
    n = ingest.write_trips(args.out, records)
    print(f"wrote {n} trips to {args.out}")
    return 0


def cmd_flows(args) -> int:
    cfg = _config_from_args(args)
    parsed, chained, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)
    all_series = []
    for station in sorted(data):
        sd = data[station]
        all_series.extend([sd.boarding, sd.alighting, sd.returning])
    flows.write_flows_csv(outdir / "flows.csv", all_series)
    write_rejects_csv(outdir / "rejects.csv", parsed)
    write_overlaps_csv(outdir / "overlaps.csv", chained)
    print(f"wrote flow series for {len(data)} stations to {outdir}")
    return 0


def cmd_rpp(args) -> int:
    cfg = _config_from_args(args)
    _, _, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)
    rpp.write_rpp_csv(outdir / "rpp.csv", [data[s].table for s in sorted(data)])
    print(f"wrote return-probability tables for {len(data)} stations")
    return 0


def cmd_fit(args) -> int:
    cfg = _config_from_args(args)
    _, _, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)
    outputs: dict[str, StationOutputs] = {}
    for station in sorted(data):
        sd = data[station]
        out = StationOutputs(station=station)
        y = sd.boarding.values.astype(float)
        covs = _covariates(cfg, sd)
        tr_lo, tr_hi = cfg.train_span
        for model in cfg.models:
            x = covs[model]
            out.fits[model] = sarima.fit(
                y[tr_lo:tr_hi],
                cfg.order,
                regressor=None if x is None else x[tr_lo:tr_hi],
            )
        outputs[station] = out
    write_fits_json(outdir / "fits.json", outputs)
    print(f"fitted {len(cfg.models)} models for {len(data)} stations")
    return 0


def cmd_forecast(args) -> int:
    cfg = _config_from_args(args)
    _, _, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)
    steps = args.steps
    cal = cfg.calendar
    tr_lo, tr_hi = cfg.train_span
    with open(outdir / "forecasts.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("station", "model", "step", "window_index", "predicted", "actual"))
        for station in sorted(data):
            sd = data[station]
            y = sd.boarding.values.astype(float)
            covs = _covariates(cfg, sd)
            m = sd.alighting.values.astype(float)
            for model in cfg.models:
                x = covs[model]
                fit = sarima.fit(
                    y[tr_lo:tr_hi], cfg.order, regressor=None if x is None else x[tr_lo:tr_hi]
                )
                if x is None:
                    future = None
                elif model == "M2":
                    means = rpp.approximate_future_alighting(m, cal, (cfg.estimate_span[0], tr_hi))
                    future = rpp.predicted_returning_series(
                        sd.table, m, tr_hi, tr_hi + steps, observed_until=tr_hi, future_means=means
                    )
                else:
                    future = x[tr_hi : tr_hi + steps]
                    if len(future) < steps:
                        future = np.r_[future, np.zeros(steps - len(future))]
                preds = sarima.forecast(fit, steps, future_regressor=future)
                for j in range(steps):
                    t = tr_hi + j
                    actual = int(y[t]) if t < len(y) else None
                    writer.writerow((station, model, j + 1, t, _fmt(float(preds[j])), _fmt(actual)))
    print(f"wrote {steps}-step forecasts for {len(data)} stations")
    return 0


def cmd_evaluate(args) -> int:
    cfg = _config_from_args(args)
    parsed, chained, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)
    outputs = run_stations(cfg, data)
    write_evaluation_csv(outdir / "evaluation.csv", outputs)
    write_predictions_csv(outdir / "predictions.csv", cfg, data, outputs)
    write_fits_json(outdir / "fits.json", outputs)
    failures = sorted(s for s, o in outputs.items() if o.error is not None)
    if failures:
        print(f"{len(failures)} stations failed: {', '.join(failures)}", file=sys.stderr)
    print(f"evaluated {len(data) - len(failures)} stations")
    return 0


def cmd_cluster(args) -> int:
    cfg = _config_from_args(args)
    _, _, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)
    stations = sorted(data)
    if len(stations) < 2:
        raise DataError("clustering needs at least two stations")
    vectors = np.vstack([cluster_mod.vectorize_rpp(data[s].table) for s in stations])
    dendrogram = cluster_mod.ward_cluster(vectors, stations)
    labels = cluster_mod.half_height_cut(dendrogram)
    cluster_mod.write_clusters_csv(outdir / "clusters.csv", labels)
    cluster_mod.write_dendrogram_csv(outdir / "dendrogram.csv", dendrogram)
    print(f"clustered {len(stations)} stations into {len(set(labels.values()))} groups")
    return 0


def cmd_event(args) -> int:
    cfg = _config_from_args(args)
    cfg.events_enabled = True
    parsed, chained, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)
    outputs = run_stations(cfg, data)
    write_evaluation_csv(outdir / "evaluation.csv", outputs)
    with open(outdir / "events.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("station", "window_index", "date", "window_of_day"))
        for station in sorted(outputs):
            detection = outputs[station].detection
            if detection is None:
                continue
            for t in sorted(detection.windows):
                writer.writerow(
                    (station, t, cfg.calendar.date_of(t).isoformat(), cfg.calendar.window_of_day(t))
                )
    print(f"evaluated event models for {len(data)} stations")
    return 0


def cmd_pipeline(args) -> int:
    cfg = _config_from_args(args)
    parsed, chained, data = _prepare(cfg, args.trips)
    outdir = _outdir(args)

    all_series = []
    for station in sorted(data):
        sd = data[station]
        all_series.extend([sd.boarding, sd.alighting, sd.returning])
    flows.write_flows_csv(outdir / "flows.csv", all_series)
    write_rejects_csv(outdir / "rejects.csv", parsed)
    write_overlaps_csv(outdir / "overlaps.csv", chained)
    rpp.write_rpp_csv(outdir / "rpp.csv", [data[s].table for s in sorted(data)])

    outputs = run_stations(cfg, data)
    write_evaluation_csv(outdir / "evaluation.csv", outputs)
    write_predictions_csv(outdir / "predictions.csv", cfg, data, outputs)
    write_fits_json(outdir / "fits.json", outputs)

    if cfg.events_enabled:
        with open(outdir / "events.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("station", "window_index", "date", "window_of_day"))
            for station in sorted(outputs):
                detection = outputs[station].detection
                if detection is None:
                    continue
                for t in sorted(detection.windows):
                    writer.writerow(
                        (
                            station,
                            t,
                            cfg.calendar.date_of(t).isoformat(),
                            cfg.calendar.window_of_day(t),
                        )
                    )

    if len(data) >= 2:
        stations = sorted(data)
        vectors = np.vstack([cluster_mod.vectorize_rpp(data[s].table) for s in stations])
        dendrogram = cluster_mod.ward_cluster(vectors, stations)
        labels = cluster_mod.half_height_cut(dendrogram)
        cluster_mod.write_clusters_csv(outdir / "clusters.csv", labels)
        cluster_mod.write_dendrogram_csv(outdir / "dendrogram.csv", dendrogram)

    failures = sorted(s for s, o in outputs.items() if o.error is not None)
    if failures:
        print(f"{len(failures)} stations failed: {', '.join(failures)}", file=sys.stderr)
    print(f"pipeline complete for {len(data) - len(failures)} stations in {outdir}")
    return 0


# ---------------------------------------------------------------- entry point

def _config_from_args(args) -> RunConfig:
    cfg = load_run_config(args.config)
    if getattr(args, "stations", None):
        cfg.stations = [s.strip() for s in args.stations.split(",") if s.strip()]
    if getattr(args, "workers", None):
        cfg.workers = args.workers
    return cfg


def _outdir(args) -> Path:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    return outdir


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="farecast",
        description="Station-level passenger-flow forecasting from smart-card trips",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic trip log")
    sim.add_argument("--config", required=True, help="scenario configuration (JSON)")
    sim.add_argument("--out", required=True, help="output trip CSV path")
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.set_defaults(func=cmd_simulate)

    def common(p, steps=False):
        p.add_argument("--config", required=True, help="run configuration (JSON)")
        p.add_argument("--trips", required=True, help="trip CSV path")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--stations", default=None, help="comma-separated station subset")
        p.add_argument("--workers", type=int, default=None, help="parallel station workers")
        if steps:
            p.add_argument("--steps", type=int, default=6, help="forecast steps past the train span")

    for name, fn, extra in (
        ("flows", cmd_flows, False),
        ("rpp", cmd_rpp, False),
        ("fit", cmd_fit, False),
        ("forecast", cmd_forecast, True),
        ("evaluate", cmd_evaluate, False),
        ("cluster", cmd_cluster, False),
        ("event", cmd_event, False),
        ("pipeline", cmd_pipeline, False),
    ):
        p = sub.add_parser(name)
        common(p, steps=extra)
        p.set_defaults(func=fn)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FarecastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
