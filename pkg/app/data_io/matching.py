"""Attribution of trades to quote changes.

A trade is ask-side when its price is the prevailing ask (within half a
tick), bid-side at the prevailing bid; trades inside the spread cannot be
attributed. For an ask-side trade of size z, a quote change within the
window is consistent when the bid is untouched and either the ask depth
fell by exactly z at the same price, or the ask moved up with a pre-change
depth of at most z (a depletion eating s = z - q_prev beyond the quote).
The bid side mirrors this.

Among consistent changes one stamped exactly at the trade's time wins;
otherwise the change must be the only consistent one. A quote change
claimed by several trades leaves all of them unmatched.
"""

from __future__ import annotations

import bisect
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum

from app.config import DEFAULT_MATCH_WINDOW_NS
from app.data_io.csv_io import QuoteRecord, TradeRecord

logger = logging.getLogger(__name__)


class Side(str, Enum):
    ASK = "ask"
    BID = "bid"


@dataclass(frozen=True)
class MatchedTrade:
    trade_index: int
    quote_index: int  # index of the quote row after the change
    side: Side
    s: int | None  # orders eaten beyond the quote; None when the quote did not move

    @property
    def depletion(self) -> bool:
        return self.s is not None


@dataclass
class MatchReport:
    side: Side
    matched: list[MatchedTrade] = field(default_factory=list)
    unmatched_count: int = 0
    other_side: int = 0  # trades attributed to the opposite side, not counted

    @property
    def match_rate(self) -> float:
        total = len(self.matched) + self.unmatched_count
        return len(self.matched) / total if total else 0.0

    def by_quote(self) -> dict[int, MatchedTrade]:
        return {m.quote_index: m for m in self.matched}


def _near(price: Decimal | None, target: Decimal | None, half_tick: Decimal) -> bool:
    return price is not None and target is not None and abs(price - target) <= half_tick


def _prevailing(quotes: list[QuoteRecord], stamps: list[int], ts_ns: int) -> QuoteRecord | None:
    """Last quote strictly before ts_ns (the first quote when none is)."""
    idx = bisect.bisect_left(stamps, ts_ns) - 1
    if idx < 0:
        return quotes[0] if quotes else None
    return quotes[idx]


def _consistent(before: QuoteRecord, after: QuoteRecord, size: int, side: Side) -> tuple[bool, int | None]:
    if side is Side.ASK:
        if (before.bid_px, before.bid_sz) != (after.bid_px, after.bid_sz) or before.ask_px is None:
            return False, None
        if after.ask_px == before.ask_px:
            return before.ask_sz - after.ask_sz == size, None
        moved_up = after.ask_px is None or after.ask_px > before.ask_px
        return (moved_up and before.ask_sz <= size), size - before.ask_sz
    if (before.ask_px, before.ask_sz) != (after.ask_px, after.ask_sz) or before.bid_px is None:
        return False, None
    if after.bid_px == before.bid_px:
        return before.bid_sz - after.bid_sz == size, None
    moved_down = after.bid_px is None or after.bid_px < before.bid_px
    return (moved_down and before.bid_sz <= size), size - before.bid_sz


def match_trades(quotes: list[QuoteRecord], trades: list[TradeRecord],
                 window_ns: int = DEFAULT_MATCH_WINDOW_NS, mode: Side | str = Side.ASK,
                 tick_size: Decimal = Decimal("0.01")) -> MatchReport:
    side = Side(mode)
    half_tick = Decimal(tick_size) / 2
    stamps = [q.ts_ns for q in quotes]
    report = MatchReport(side=side)
    claims: dict[int, list[MatchedTrade]] = defaultdict(list)

    for t_idx, trade in enumerate(trades):
        prevailing = _prevailing(quotes, stamps, trade.ts_ns)
        if prevailing is None:
            report.unmatched_count += 1
            continue
        at_ask = _near(trade.price, prevailing.ask_px, half_tick)
        at_bid = _near(trade.price, prevailing.bid_px, half_tick)
        if (side is Side.ASK and at_bid and not at_ask) or (side is Side.BID and at_ask and not at_bid):
            report.other_side += 1
            continue

        lo = bisect.bisect_left(stamps, trade.ts_ns - window_ns)
        hi = bisect.bisect_right(stamps, trade.ts_ns + window_ns)
        candidates = []
        for q_idx in range(max(lo, 1), hi):
            before, after = quotes[q_idx - 1], quotes[q_idx]
            quote_px = before.ask_px if side is Side.ASK else before.bid_px
            if not _near(trade.price, quote_px, half_tick):
                continue
            ok, s = _consistent(before, after, trade.size, side)
            if ok:
                candidates.append(MatchedTrade(t_idx, q_idx, side, s))

        exact = [c for c in candidates if quotes[c.quote_index].ts_ns == trade.ts_ns]
        if len(exact) == 1:
            claims[exact[0].quote_index].append(exact[0])
        elif len(candidates) == 1 and not exact:
            claims[candidates[0].quote_index].append(candidates[0])
        else:
            report.unmatched_count += 1

    for q_idx in sorted(claims):
        claimants = claims[q_idx]
        if len(claimants) == 1:
            report.matched.append(claimants[0])
        else:
            report.unmatched_count += len(claimants)
    report.matched.sort(key=lambda m: m.trade_index)
    logger.info("Matched %d of %d %s-side trades (%.1f%%)", len(report.matched),
                len(report.matched) + report.unmatched_count, side.value, 100 * report.match_rate)
    return report
