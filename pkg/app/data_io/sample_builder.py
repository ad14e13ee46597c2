"""From session quote/trade records to an estimation Sample.

Each session is walked once. Consecutive quotes with the same ask tick form
one ask epoch; the epoch ends when the ask moves, and an upward move is a
candidate observation. In ZI mode every upward move with the bid side
untouched qualifies. In GZI mode only upward moves matched with a trade
qualify, and the match supplies s. Upward moves that touch the bid at the
same instant, or that are not matched in GZI mode, are opaque: they still
close the epoch (so the recursion clock advances) but carry no density.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from decimal import Decimal

from app.config import DEFAULT_GRID_MARGIN, DEFAULT_MATCH_WINDOW_NS, DEFAULT_THREADS, MAX_IN_SAMPLE
from app.data_io.csv_io import QuoteRecord, history_to_records
from app.data_io.matching import MatchReport, Side, match_trades
from app.data_io.sessions import Session, split_sessions
from app.errors import DomainError
from app.estimation.sample import AskEpoch, Mode, Observation, Sample, SessionSkeleton
from app.models.domain import L1History, L1State, TickGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SessionBuild:
    skeleton: SessionSkeleton
    observations: list[Observation]
    opaque: int
    match: MatchReport | None


def infer_grid(sessions: list[Session], tick_size: Decimal = Decimal("0.01"),
               margin: int = DEFAULT_GRID_MARGIN) -> TickGrid:
    """A grid covering every quoted price with `margin` spare ticks on both sides."""
    tick_size = Decimal(tick_size)
    prices = [px for s in sessions for q in s.quotes for px in (q.bid_px, q.ask_px) if px is not None]
    if not prices:
        raise DomainError("no quoted prices to infer a grid from")
    low, high = min(prices), max(prices)
    below = min(margin, max(int((low - tick_size) / tick_size), 0))
    offset = low - below * tick_size
    n = int(((high - offset) / tick_size).to_integral_value()) + 1 + margin
    return TickGrid(n=n, tick_size=tick_size, price_offset=offset)


def _changes(quotes: list[QuoteRecord], grid: TickGrid):
    """(quote index, ts, state) of every quote that changes the L1 state."""
    previous = None
    for idx, quote in enumerate(quotes):
        state = quote.state(grid)
        if state != previous:
            yield idx, quote.ts_ns, state
            previous = state


def build_session(index: int, session: Session, grid: TickGrid, mode: Mode,
                  window_ns: int = DEFAULT_MATCH_WINDOW_NS) -> SessionBuild:
    match = None
    matched_s: dict[int, int] = {}
    if mode is Mode.GZI:
        match = match_trades(session.quotes, session.trades, window_ns, Side.ASK, grid.tick_size)
        matched_s = {m.quote_index: m.s for m in match.matched if m.depletion}

    epochs: list[AskEpoch] = []
    observations: list[Observation] = []
    opaque = 0
    prior: L1State | None = None
    epoch_start = 0
    last_ts = 0
    for q_idx, ts, state in _changes(session.quotes, grid):
        last_ts = ts
        if prior is None:
            prior, epoch_start = state, ts
            continue
        if state.a != prior.a:
            epochs.append(AskEpoch(a=prior.a, duration=(ts - epoch_start) / 1e9, q_end=prior.q))
            epoch_start = ts
            if state.a > prior.a:
                obs = _observation(index, len(epochs) - 1, prior, state, ts, mode, matched_s.get(q_idx))
                if obs is None:
                    opaque += 1
                else:
                    observations.append(obs)
        prior = state
    if prior is not None:
        epochs.append(AskEpoch(a=prior.a, duration=(last_ts - epoch_start) / 1e9, q_end=prior.q))
    skeleton = SessionSkeleton(label=session.label, epochs=tuple(epochs))
    return SessionBuild(skeleton, observations, opaque, match)


def _observation(session: int, epoch: int, prior: L1State, state: L1State, ts: int,
                 mode: Mode, s: int | None) -> Observation | None:
    if (state.b, state.r) != (prior.b, prior.r):
        return None
    if mode is Mode.GZI:
        if s is None:
            return None
        return Observation(session=session, epoch=epoch, prior=prior, a_new=state.a, q_new=state.q,
                           s=s, ts_ns=ts, trade_size=s + prior.q)
    return Observation(session=session, epoch=epoch, prior=prior, a_new=state.a, q_new=state.q, ts_ns=ts)


def build_sample(sessions: list[Session], grid: TickGrid, mode: Mode | str = Mode.ZI,
                 window_ns: int = DEFAULT_MATCH_WINDOW_NS, cap: int = MAX_IN_SAMPLE,
                 threads: int = DEFAULT_THREADS) -> tuple[Sample, list[MatchReport]]:
    """Sample over all sessions in order, plus the per-session match reports (GZI mode)."""
    mode = Mode(mode)
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        builds = list(executor.map(
            lambda item: build_session(item[0], item[1], grid, mode, window_ns), enumerate(sessions)
        ))
    observations = [obs for build in builds for obs in build.observations]
    opaque = sum(build.opaque for build in builds)
    sample = Sample.from_observations(grid.n, mode, [b.skeleton for b in builds], observations, cap)
    logger.info("Built %s sample: %d sessions, %d qualifying jumps (%d opaque), N=%d, M=%d",
                mode.value, len(sessions), len(observations), opaque, sample.n_in, sample.n_out)
    if sample.insufficient:
        logger.warning("Only %d in-sample observations; the sample is insufficient", sample.n_in)
    return sample, [b.match for b in builds if b.match is not None]


def sessions_from_history(history: L1History, grid: TickGrid) -> list[Session]:
    """Sessions for a simulated history: every calendar day is one session, no time window."""
    quotes, trades = history_to_records(history, grid)
    return split_sessions(quotes, trades, apply_window=False)
