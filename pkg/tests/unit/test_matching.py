"""Unit tests for attributing trades to quote changes."""

from decimal import Decimal

from app.data_io.csv_io import QuoteRecord, TradeRecord
from app.data_io.matching import Side, match_trades

_S = 1_000_000_000


def _quote(ts, ask="10.02", ask_sz=5, bid="10.00", bid_sz=1) -> QuoteRecord:
    return QuoteRecord(ts, Decimal(bid) if bid else None, bid_sz, Decimal(ask) if ask else None, ask_sz)


def _trade(ts, price="10.02", size=2) -> TradeRecord:
    return TradeRecord(ts, Decimal(price), size)


class TestAskSide:
    def test_depth_decrement(self):
        report = match_trades([_quote(1 * _S), _quote(2 * _S, ask_sz=3)], [_trade(2 * _S)])
        assert len(report.matched) == 1
        matched = report.matched[0]
        assert (matched.quote_index, matched.s, matched.depletion) == (1, None, False)
        assert report.match_rate == 1.0

    def test_depletion_eats_beyond_the_quote(self):
        quotes = [_quote(1 * _S, ask_sz=2), _quote(2 * _S, ask="10.04", ask_sz=1)]
        report = match_trades(quotes, [_trade(2 * _S, size=5)])
        assert report.matched[0].s == 3
        assert report.matched[0].depletion

    def test_wrong_decrement_is_unmatched(self):
        report = match_trades([_quote(1 * _S), _quote(2 * _S, ask_sz=4)], [_trade(2 * _S)])
        assert report.matched == []
        assert report.unmatched_count == 1

    def test_bid_change_breaks_consistency(self):
        quotes = [_quote(1 * _S), _quote(2 * _S, ask_sz=3, bid_sz=2)]
        assert match_trades(quotes, [_trade(2 * _S)]).matched == []

    def test_two_candidates_without_exact_stamp(self):
        quotes = [_quote(0), _quote(_S // 5, ask_sz=4), _quote(7 * _S // 10, ask_sz=3)]
        report = match_trades(quotes, [_trade(_S // 2, size=1)])
        assert report.matched == []
        assert report.unmatched_count == 1

    def test_exact_stamp_wins(self):
        quotes = [_quote(0), _quote(_S // 5, ask_sz=4), _quote(_S // 2, ask_sz=3)]
        report = match_trades(quotes, [_trade(_S // 2, size=1)])
        assert report.matched[0].quote_index == 2

    def test_shared_quote_change_leaves_both_unmatched(self):
        quotes = [_quote(1 * _S), _quote(2 * _S, ask_sz=3)]
        report = match_trades(quotes, [_trade(2 * _S), _trade(2 * _S)])
        assert report.matched == []
        assert report.unmatched_count == 2

    def test_change_outside_window(self):
        quotes = [_quote(1 * _S), _quote(5 * _S, ask_sz=3)]
        assert match_trades(quotes, [_trade(2 * _S)], window_ns=_S).matched == []

    def test_bid_trades_are_counted_apart(self):
        quotes = [_quote(1 * _S), _quote(2 * _S, bid=None, bid_sz=0)]
        report = match_trades(quotes, [_trade(2 * _S, price="10.00", size=1)])
        assert report.other_side == 1
        assert report.unmatched_count == 0
        assert report.match_rate == 0.0


class TestBidSide:
    def test_mirror_depletion(self):
        quotes = [_quote(1 * _S, bid_sz=1), _quote(2 * _S, bid="9.98", bid_sz=2)]
        report = match_trades(quotes, [_trade(2 * _S, price="10.00", size=3)], mode="bid")
        assert report.side is Side.BID
        assert report.matched[0].s == 2
