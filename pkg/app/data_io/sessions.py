"""Trading-session filtering.

Each trading day contributes the records stamped inside [start, end) of its
local time; every day is an independent session for the posterior sweep.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, datetime, time, timezone
from zoneinfo import ZoneInfo

from app.config import DEFAULT_SESSION_END, DEFAULT_SESSION_START, DEFAULT_TIMEZONE
from app.data_io.csv_io import QuoteRecord, TradeRecord
from app.errors import DomainError


@dataclass(frozen=True)
class SessionCalendar:
    timezone: str = DEFAULT_TIMEZONE
    excluded_dates: frozenset[date] = field(default_factory=frozenset)
    weekdays_only: bool = True

    def local(self, ts_ns: int) -> datetime:
        utc = datetime.fromtimestamp(ts_ns // 1_000_000_000, tz=timezone.utc)
        return utc.astimezone(ZoneInfo(self.timezone)).replace(microsecond=(ts_ns // 1000) % 1_000_000)

    def is_trading_day(self, day: date) -> bool:
        if self.weekdays_only and day.weekday() >= 5:
            return False
        return day not in self.excluded_dates


@dataclass
class Session:
    day: date
    quotes: list[QuoteRecord] = field(default_factory=list)
    trades: list[TradeRecord] = field(default_factory=list)

    @property
    def label(self) -> str:
        return self.day.isoformat()


def filter_session(records, session_start: time = DEFAULT_SESSION_START,
                   session_end: time = DEFAULT_SESSION_END,
                   calendar: SessionCalendar | None = None) -> dict[date, list]:
    """Records inside [session_start, session_end) of each trading day, grouped by day in date order."""
    if session_start >= session_end:
        raise DomainError(f"session start {session_start} is not before its end {session_end}")
    calendar = calendar or SessionCalendar()
    grouped: dict[date, list] = {}
    for record in records:
        stamp = calendar.local(record.ts_ns)
        if not calendar.is_trading_day(stamp.date()):
            continue
        if session_start <= stamp.time() < session_end:
            grouped.setdefault(stamp.date(), []).append(record)
    return dict(sorted(grouped.items()))


def split_sessions(quotes: list[QuoteRecord], trades: list[TradeRecord],
                   session_start: time = DEFAULT_SESSION_START, session_end: time = DEFAULT_SESSION_END,
                   calendar: SessionCalendar | None = None, apply_window: bool = True) -> list[Session]:
    """Pair each day's quotes with its trades; apply_window=False keeps whole days."""
    if not apply_window:
        session_start, session_end = time(0, 0), time(23, 59, 59, 999999)
        calendar = calendar or SessionCalendar(weekdays_only=False)
    quote_days = filter_session(quotes, session_start, session_end, calendar)
    trade_days = filter_session(trades, session_start, session_end, calendar)
    return [Session(day=day, quotes=day_quotes, trades=trade_days.get(day, []))
            for day, day_quotes in quote_days.items()]
