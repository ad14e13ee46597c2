"""Matching service: attribute trades to quote changes, session by session."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from decimal import Decimal

from app.data_io.matching import match_trades
from app.models.schemas import MatchEntry, MatchReportModel, RunConfig, SessionMatch
from app.services.estimation_service import load_sessions, report_label

logger = logging.getLogger(__name__)


def match(config: RunConfig) -> MatchReportModel:
    sessions = load_sessions(config)
    tick_size = Decimal(config.tick_size)

    def run(session):
        return session, match_trades(session.quotes, session.trades, config.window_ns, config.side, tick_size)

    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        results = list(executor.map(run, sessions))

    per_session, entries = [], []
    matched = unmatched = 0
    for session, report in results:
        per_session.append(SessionMatch(session=session.label, matched=len(report.matched),
                                        unmatched=report.unmatched_count, match_rate=report.match_rate))
        entries.extend(
            MatchEntry(session=session.label, trade_index=m.trade_index, quote_index=m.quote_index,
                       side=m.side.value, s=m.s)
            for m in report.matched
        )
        matched += len(report.matched)
        unmatched += report.unmatched_count
    total = matched + unmatched
    rate = matched / total if total else 0.0
    logger.info("Matched %d of %d trades over %d sessions (%.1f%%)", matched, total, len(sessions), 100 * rate)
    return MatchReportModel(
        config=config,
        label=report_label(config),
        side=config.side,
        matched_count=matched,
        unmatched_count=unmatched,
        match_rate=rate,
        sessions=per_session,
        matched=entries,
    )
