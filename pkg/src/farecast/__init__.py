"""Passenger-flow forecasting for gated transit networks.

The package turns a smart-card trip log into per-station boarding
forecasts.  Alighting passengers are linked to their next boarding at the
same station, the distribution of that return delay is tabulated per
window of day, and the resulting predicted returning flow feeds a
seasonal time-series regression as an exogenous input.  Stations can be
grouped by the shape of their return-delay tables, and windows disturbed
by special events get a separate decomposition.
"""

from .calendars import ServiceCalendar
from .cluster import Dendrogram, Merge, cut_tree, half_height_cut, vectorize_rpp, ward_cluster
from .errors import ConfigError, DataError, FarecastError, NumericalError
from .evaluation import (
    CvReport,
    EvalReport,
    TTestResult,
    evaluate_one_step,
    paired_t_test,
    rmse,
    rolling_origin_cv,
    smape,
    student_t_cdf,
)
from .flows import FlowSeries, count_series, observed_returning_flow, station_flows
from .ingest import (
    ChainResult,
    ParseResult,
    ReturnPairCounts,
    TripRecord,
    chain_trips,
    extract_return_pairs,
    parse_trips,
    write_trips,
)
from .rpp import (
    EventDecomposition,
    EventDetection,
    PartialHistoryWarning,
    Rpp,
    approximate_future_alighting,
    combined_return_probability,
    detect_event_periods,
    estimate_rpp,
    event_adjusted_series,
    predict_returning_flow,
    predicted_returning_series,
    split_event_rpp,
)
from .sarima import (
    SarimaFit,
    SarimaOrder,
    SarimaParams,
    aic,
    difference,
    fit,
    forecast,
    log_likelihood,
    one_step_predictions,
    simulate,
)
from .simgen import ScenarioConfig, StationSpec, generate, scenario_from_json, station_preset

__version__ = "0.1.0"

__all__ = [
    "ChainResult",
    "ConfigError",
    "CvReport",
    "DataError",
    "Dendrogram",
    "EvalReport",
    "EventDecomposition",
    "EventDetection",
    "FarecastError",
    "FlowSeries",
    "Merge",
    "NumericalError",
    "ParseResult",
    "PartialHistoryWarning",
    "ReturnPairCounts",
    "Rpp",
    "SarimaFit",
    "SarimaOrder",
    "SarimaParams",
    "ScenarioConfig",
    "ServiceCalendar",
    "StationSpec",
    "TTestResult",
    "TripRecord",
    "aic",
    "approximate_future_alighting",
    "chain_trips",
    "combined_return_probability",
    "count_series",
    "cut_tree",
    "detect_event_periods",
    "difference",
    "estimate_rpp",
    "evaluate_one_step",
    "event_adjusted_series",
    "extract_return_pairs",
    "fit",
    "forecast",
    "generate",
    "half_height_cut",
    "log_likelihood",
    "observed_returning_flow",
    "one_step_predictions",
    "paired_t_test",
    "parse_trips",
    "predict_returning_flow",
    "predicted_returning_series",
    "rmse",
    "rolling_origin_cv",
    "scenario_from_json",
    "simulate",
    "smape",
    "split_event_rpp",
    "station_flows",
    "station_preset",
    "student_t_cdf",
    "vectorize_rpp",
    "ward_cluster",
    "write_trips",
]
