"""Unit tests for the trading-session window and calendar."""

from datetime import date, datetime, time
from decimal import Decimal
from zoneinfo import ZoneInfo

import pytest

from app.data_io.csv_io import QuoteRecord, TradeRecord
from app.data_io.sessions import SessionCalendar, filter_session, split_sessions
from app.errors import DomainError

_NY = ZoneInfo("America/New_York")


def _ts(day: int, hour: int, minute: int, second: int = 0) -> int:
    # March 2009: the 2nd is a Monday, the 7th a Saturday
    return int(datetime(2009, 3, day, hour, minute, second, tzinfo=_NY).timestamp()) * 1_000_000_000


def _quote(ts: int) -> QuoteRecord:
    return QuoteRecord(ts, Decimal("10.00"), 1, Decimal("10.02"), 1)


class TestFilterSession:
    def test_window_is_closed_left_open_right(self):
        records = [_quote(_ts(2, 9, 35)), _quote(_ts(2, 9, 40)), _quote(_ts(2, 15, 29, 59)), _quote(_ts(2, 15, 30))]
        grouped = filter_session(records)
        assert list(grouped) == [date(2009, 3, 2)]
        assert [r.ts_ns for r in grouped[date(2009, 3, 2)]] == [_ts(2, 9, 40), _ts(2, 15, 29, 59)]

    def test_weekends_are_skipped(self):
        assert filter_session([_quote(_ts(7, 10, 0))]) == {}

    def test_excluded_dates(self):
        calendar = SessionCalendar(excluded_dates=frozenset({date(2009, 3, 3)}))
        grouped = filter_session([_quote(_ts(2, 10, 0)), _quote(_ts(3, 10, 0))], calendar=calendar)
        assert list(grouped) == [date(2009, 3, 2)]

    def test_days_come_out_in_order(self):
        grouped = filter_session([_quote(_ts(4, 10, 0)), _quote(_ts(2, 10, 0))])
        assert list(grouped) == [date(2009, 3, 2), date(2009, 3, 4)]

    def test_empty_window_rejected(self):
        with pytest.raises(DomainError):
            filter_session([], time(15, 30), time(9, 40))


class TestSplitSessions:
    def test_trades_follow_their_day(self):
        quotes = [_quote(_ts(2, 10, 0)), _quote(_ts(3, 10, 0))]
        trades = [TradeRecord(_ts(3, 10, 0), Decimal("10.02"), 1)]
        sessions = split_sessions(quotes, trades)
        assert [s.label for s in sessions] == ["2009-03-02", "2009-03-03"]
        assert sessions[0].trades == []
        assert len(sessions[1].trades) == 1

    def test_whole_days(self):
        quotes = [_quote(_ts(7, 8, 0)), _quote(_ts(7, 20, 0))]
        sessions = split_sessions(quotes, [], apply_window=False)
        assert len(sessions) == 1
        assert len(sessions[0].quotes) == 2
