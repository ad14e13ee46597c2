"""Quote and trade CSV files.

    quotes: ts_ns,bid_px,bid_sz,ask_px,ask_sz
    trades: ts_ns,px,sz

UTF-8, '\\n' line endings, decimal prices with a period. An empty side of
the book is a blank price with size 0. A trade's size is the volume of the
market order and its price the quote it hit, stamped with the same
timestamp as the quote change it caused.
"""

from __future__ import annotations

import csv
import logging
import warnings
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from app.errors import DomainError, InputFormatError
from app.models.domain import L1History, L1Record, L1State, TickGrid

logger = logging.getLogger(__name__)

QUOTE_HEADER = ["ts_ns", "bid_px", "bid_sz", "ask_px", "ask_sz"]
TRADE_HEADER = ["ts_ns", "px", "sz"]


@dataclass(frozen=True)
class QuoteRecord:
    ts_ns: int
    bid_px: Decimal | None
    bid_sz: int
    ask_px: Decimal | None
    ask_sz: int

    def __post_init__(self):
        if self.bid_sz < 0 or self.ask_sz < 0:
            raise DomainError("quote sizes must be nonnegative")
        if (self.bid_px is None) != (self.bid_sz == 0) or (self.ask_px is None) != (self.ask_sz == 0):
            raise DomainError("a side has a price exactly when its size is positive")
        if self.bid_px is not None and self.ask_px is not None and self.ask_px <= self.bid_px:
            raise DomainError(f"crossed or locked quote: bid {self.bid_px} >= ask {self.ask_px}")

    def state(self, grid: TickGrid) -> L1State:
        a = grid.to_tick(self.ask_px) if self.ask_px is not None else grid.empty_ask
        b = grid.to_tick(self.bid_px) if self.bid_px is not None else grid.empty_bid
        state = L1State(a=a, b=b, q=self.ask_sz, r=self.bid_sz)
        state.validate(grid.n)
        return state

    @classmethod
    def from_state(cls, ts_ns: int, state: L1State, grid: TickGrid) -> "QuoteRecord":
        return cls(
            ts_ns=ts_ns,
            bid_px=grid.to_price(state.b) if state.b >= 1 else None,
            bid_sz=state.r,
            ask_px=grid.to_price(state.a) if state.a <= grid.n else None,
            ask_sz=state.q,
        )


@dataclass(frozen=True)
class TradeRecord:
    ts_ns: int
    price: Decimal
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise DomainError(f"trade size must be >= 1, got {self.size}")


def _decimal(text: str, line: int, label: str) -> Decimal | None:
    text = text.strip()
    if not text:
        return None
    try:
        return Decimal(text)
    except InvalidOperation:
        raise InputFormatError(f"{label} is not a decimal price: {text!r}", line) from None


def _integer(text: str, line: int, label: str) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise InputFormatError(f"{label} is not an integer: {text!r}", line) from None


def _read_rows(path: Path, header: list[str]):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        first = next(reader, None)
        if first is None:
            return
        if [h.strip() for h in first] != header:
            raise InputFormatError(f"expected header {','.join(header)}, got {','.join(first)}", 1)
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputFormatError(f"expected {len(header)} fields, got {len(row)}", line)
            yield line, row


def _sorted_by_time(records: list, label: str) -> list:
    out_of_order = sum(1 for prev, cur in zip(records, records[1:]) if cur.ts_ns < prev.ts_ns)
    if out_of_order:
        message = f"{label}: {out_of_order} out-of-order timestamp(s); records stable-sorted"
        logger.warning(message)
        warnings.warn(message, UserWarning, stacklevel=3)
        records = sorted(records, key=lambda r: r.ts_ns)
    return records


def load_quotes(path: str | Path) -> list[QuoteRecord]:
    records = []
    for line, row in _read_rows(Path(path), QUOTE_HEADER):
        try:
            records.append(QuoteRecord(
                ts_ns=_integer(row[0], line, "ts_ns"),
                bid_px=_decimal(row[1], line, "bid_px"),
                bid_sz=_integer(row[2], line, "bid_sz"),
                ask_px=_decimal(row[3], line, "ask_px"),
                ask_sz=_integer(row[4], line, "ask_sz"),
            ))
        except DomainError as exc:
            raise InputFormatError(str(exc), line) from exc
    logger.info("Loaded %d quotes from %s", len(records), path)
    return _sorted_by_time(records, str(path))


def load_trades(path: str | Path) -> list[TradeRecord]:
    records = []
    for line, row in _read_rows(Path(path), TRADE_HEADER):
        price = _decimal(row[1], line, "px")
        if price is None:
            raise InputFormatError("trade price is missing", line)
        try:
            records.append(TradeRecord(ts_ns=_integer(row[0], line, "ts_ns"), price=price,
                                       size=_integer(row[2], line, "sz")))
        except DomainError as exc:
            raise InputFormatError(str(exc), line) from exc
    logger.info("Loaded %d trades from %s", len(records), path)
    return _sorted_by_time(records, str(path))


def _text(price: Decimal | None) -> str:
    return "" if price is None else str(price)


def write_quotes(path: str | Path, quotes) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(QUOTE_HEADER)
        for q in quotes:
            writer.writerow([q.ts_ns, _text(q.bid_px), q.bid_sz, _text(q.ask_px), q.ask_sz])


def write_trades(path: str | Path, trades) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(TRADE_HEADER)
        for t in trades:
            writer.writerow([t.ts_ns, str(t.price), t.size])


def history_to_records(history: L1History, grid: TickGrid) -> tuple[list[QuoteRecord], list[TradeRecord]]:
    """Quote rows for every L1 record, and a trade row for each record carrying a trade."""
    quotes, trades = [], []
    previous: L1State | None = None
    for rec in history:
        quotes.append(QuoteRecord.from_state(rec.ts_ns, rec.state, grid))
        if rec.trade != 0 and previous is not None:
            tick = previous.a if rec.trade < 0 else previous.b
            trades.append(TradeRecord(ts_ns=rec.ts_ns, price=grid.to_price(tick), size=abs(rec.trade)))
        previous = rec.state
    return quotes, trades


def records_to_history(quotes: list[QuoteRecord], trades: list[TradeRecord], grid: TickGrid) -> L1History:
    """Rebuild the L1 process; a trade at a quote change's timestamp is signed by the side it hit."""
    by_ts: dict[int, TradeRecord] = {t.ts_ns: t for t in trades}
    half_tick = grid.tick_size / 2
    records: list[L1Record] = []
    for quote in quotes:
        state = quote.state(grid)
        if records and state == records[-1].state:
            continue
        if records and quote.ts_ns == records[-1].ts_ns:
            # several changes on one timestamp collapse to the last one
            records.pop()
        trade = 0
        if records and quote.ts_ns in by_ts:
            before = records[-1].state
            hit = by_ts[quote.ts_ns]
            if before.a <= grid.n and abs(hit.price - grid.to_price(before.a)) <= half_tick:
                trade = -hit.size
            elif before.b >= 1 and abs(hit.price - grid.to_price(before.b)) <= half_tick:
                trade = hit.size
        dt = (quote.ts_ns - records[-1].ts_ns) / 1e9 if records else 0.0
        records.append(L1Record(ts_ns=quote.ts_ns, dt=dt, state=state, trade=trade))
    return L1History(tuple(records))
