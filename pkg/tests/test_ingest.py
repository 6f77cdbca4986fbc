"""Trip parsing, card chaining, and return-pair extraction."""

import io
from datetime import date, datetime

import pytest

from farecast.calendars import ServiceCalendar
from farecast.errors import DataError
from farecast.ingest import (
    TripRecord,
    chain_trips,
    extract_return_pairs,
    parse_trips,
    write_trips,
)

HEADER = "card_id,board_station,board_time,alight_station,alight_time\n"


def trip(card, b_st, b_time, a_st, a_time):
    return TripRecord(card, b_st, datetime.fromisoformat(b_time), a_st, datetime.fromisoformat(a_time))


def test_parse_valid_rows():
    text = HEADER + (
        "c1,A,2017-07-24T08:00:00,B,2017-07-24T08:20:00\n"
        "c2,B,2017-07-24T09:00:00,A,2017-07-24T09:31:00\n"
    )
    result = parse_trips(io.StringIO(text))
    assert len(result.records) == 2
    assert result.rejects == []
    assert result.records[0].card_id == "c1"
    assert result.records[0].alight_time == datetime(2017, 7, 24, 8, 20)


def test_parse_rejects_bad_rows():
    text = HEADER + (
        "c1,A,2017-07-24T08:00:00,B\n"                                   # field count
        "c2,,2017-07-24T08:00:00,B,2017-07-24T08:20:00\n"                # empty field
        "c3,A,not-a-time,B,2017-07-24T08:20:00\n"                        # bad timestamp
        "c4,A,2017-07-24T08:20:00,B,2017-07-24T08:20:00\n"               # zero duration
        "c5,A,2017-07-24T08:20:00,B,2017-07-24T08:00:00\n"               # negative duration
        "c6,A,2017-07-24T08:00:00,B,2017-07-24T08:20:00\n"               # fine
    )
    result = parse_trips(io.StringIO(text))
    assert [r.card_id for r in result.records] == ["c6"]
    assert [(r.row, r.reason) for r in result.rejects] == [
        (2, "field-count"),
        (3, "empty-field"),
        (4, "bad-timestamp"),
        (5, "non-positive-duration"),
        (6, "non-positive-duration"),
    ]


def test_parse_header_required():
    with pytest.raises(DataError):
        parse_trips(io.StringIO("a,b,c,d,e\nc1,A,t,B,t\n"))
    with pytest.raises(DataError):
        parse_trips(io.StringIO(""))


def test_parse_missing_file(tmp_path):
    with pytest.raises(DataError):
        parse_trips(tmp_path / "absent.csv")


def test_write_then_parse_round_trip(tmp_path):
    records = [
        trip("c1", "A", "2017-07-24T08:00:00", "B", "2017-07-24T08:20:00"),
        trip("c1", "B", "2017-07-24T17:00:00", "A", "2017-07-24T17:25:00"),
    ]
    path = tmp_path / "trips.csv"
    assert write_trips(path, records) == 2
    again = parse_trips(path)
    assert again.records == records
    assert again.rejects == []


def test_chain_sorts_within_card():
    records = [
        trip("c1", "B", "2017-07-24T17:00:00", "A", "2017-07-24T17:25:00"),
        trip("c1", "A", "2017-07-24T08:00:00", "B", "2017-07-24T08:20:00"),
    ]
    result = chain_trips(records)
    chain = result.chains["c1"]
    assert [r.board_station for r in chain] == ["A", "B"]
    assert result.dropped == []


def test_chain_drops_overlapping_trip():
    records = [
        trip("c1", "A", "2017-07-24T08:00:00", "B", "2017-07-24T09:00:00"),
        trip("c1", "C", "2017-07-24T08:30:00", "D", "2017-07-24T08:50:00"),
    ]
    result = chain_trips(records)
    assert len(result.chains["c1"]) == 1
    assert len(result.dropped) == 1
    assert result.dropped[0].board_station == "C"


@pytest.fixture
def cal():
    return ServiceCalendar.from_range(date(2017, 7, 24), date(2017, 8, 4))


def test_extract_return_pair_basic(cal):
    # alight at S in window 4 (08:00-08:30), board again at S in window 22 (17:00)
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-24T08:00:00", "S", "2017-07-24T08:10:00"),
            trip("c1", "S", "2017-07-24T17:05:00", "B", "2017-07-24T17:30:00"),
        ]
    }
    pairs = extract_return_pairs(chains, "S", cal, horizon=48)
    assert pairs.counts == {(4, 22): 1}
    assert pairs.total() == 1


def test_extract_requires_same_station(cal):
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-24T08:00:00", "S", "2017-07-24T08:10:00"),
            trip("c1", "T", "2017-07-24T17:05:00", "B", "2017-07-24T17:30:00"),
        ]
    }
    assert extract_return_pairs(chains, "S", cal, horizon=48).total() == 0


def test_extract_same_window_not_a_return(cal):
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-24T08:00:00", "S", "2017-07-24T08:05:00"),
            trip("c1", "S", "2017-07-24T08:20:00", "B", "2017-07-24T08:40:00"),
        ]
    }
    # gap of zero windows is outside 1..H
    assert extract_return_pairs(chains, "S", cal, horizon=48).total() == 0


def test_extract_respects_horizon(cal):
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-24T08:00:00", "S", "2017-07-24T08:10:00"),
            trip("c1", "S", "2017-07-26T08:20:00", "B", "2017-07-26T08:40:00"),  # 72 windows later
        ]
    }
    assert extract_return_pairs(chains, "S", cal, horizon=48).total() == 0
    assert extract_return_pairs(chains, "S", cal, horizon=96).total() == 1


def test_extract_weekend_span_switch(cal):
    # alight Friday evening, return Monday morning: 6 windows apart on the
    # service grid but three nights on the wall clock
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-28T20:00:00", "S", "2017-07-28T20:10:00"),
            trip("c1", "S", "2017-07-31T08:20:00", "B", "2017-07-31T08:40:00"),
        ]
    }
    t_a = 4 * 36 + 28
    t_b = 5 * 36 + 4
    assert extract_return_pairs(chains, "S", cal, horizon=48).counts == {(t_a, t_b): 1}
    assert extract_return_pairs(chains, "S", cal, horizon=48, allow_weekend_span=False).total() == 0


def test_extract_wall_clock_cap(cal):
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-28T20:00:00", "S", "2017-07-28T20:10:00"),
            trip("c1", "S", "2017-07-31T08:20:00", "B", "2017-07-31T08:40:00"),
        ]
    }
    assert extract_return_pairs(chains, "S", cal, horizon=48, max_gap_hours=24).total() == 0
    assert extract_return_pairs(chains, "S", cal, horizon=48, max_gap_hours=72).total() == 1


def test_extract_ignores_out_of_service_boarding(cal):
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-24T08:00:00", "S", "2017-07-24T08:10:00"),
            trip("c1", "S", "2017-07-29T10:00:00", "B", "2017-07-29T10:20:00"),  # Saturday
        ]
    }
    assert extract_return_pairs(chains, "S", cal, horizon=48).total() == 0


def test_extract_consecutive_pairs_only(cal):
    # alight at S, ride elsewhere, then board at S again: the intermediate
    # trip breaks the alight->board adjacency
    chains = {
        "c1": [
            trip("c1", "A", "2017-07-24T08:00:00", "S", "2017-07-24T08:10:00"),
            trip("c1", "B", "2017-07-24T12:00:00", "C", "2017-07-24T12:20:00"),
            trip("c1", "S", "2017-07-24T17:05:00", "B", "2017-07-24T17:30:00"),
        ]
    }
    assert extract_return_pairs(chains, "S", cal, horizon=48).total() == 0
