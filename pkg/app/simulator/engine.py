"""Exact continuous-time simulation of ZI and GZI books.

The holding time in a state is Exp(Lambda) with Lambda the sum of every
event intensity; the event is then picked with probability I(e)/Lambda.
Rates depend on the book only through (a, b) and the depth vectors, so the
intensity tables are built once per quote pair and cached for the run.

Rate vector layout for one step on an n-tick grid:

    [0]                BMO            theta
    [1]                SMO            vartheta
    [2 .. n+1]         SLO(p)         kappa_p  for p > b
    [n+2 .. 2n+1]      BLO(p)         lambda_p for p < a
    [2n+2 .. 3n+1]     CA(p)          A[p] * rho_p
    [3n+2 .. 4n+1]     CB(p)          B[p] * sigma_p
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from app.config import DEFAULT_THREADS, SIM_START_NS
from app.errors import AbsorbedChainError, DomainError
from app.models.domain import BookState, EventCode, EventKind, L1History, L1Record, L1State, TickGrid
from app.models.intensity import IntensitySpec
from app.simulator.events import (
    GziConfig,
    apply_shift,
    apply_zi_event,
    best_ask,
    best_bid,
    draw_shift,
    execute_market_order,
    shift_target,
    thin_displaced_quote,
)
from app.utils.rng import make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SimConfig:
    spec: IntensitySpec
    grid: TickGrid
    gzi: GziConfig | None = None
    max_events: int = 10_000
    burn_in_events: int = 0
    seed: int = 0
    initial_a: int | None = None
    initial_b: int | None = None
    keep_books: bool = True
    start_ns: int = SIM_START_NS
    stream: int = 0

    def __post_init__(self):
        n = self.grid.n
        if self.initial_a is None:
            object.__setattr__(self, "initial_a", n // 2 + 1)
        if self.initial_b is None:
            object.__setattr__(self, "initial_b", n // 2)
        if self.max_events < 0 or self.burn_in_events < 0:
            raise DomainError("event counts must be nonnegative")
        if not (1 <= self.initial_a <= n + 1 and 0 <= self.initial_b <= n):
            raise DomainError(f"initial quotes outside the grid: a={self.initial_a}, b={self.initial_b}")
        if self.initial_b >= self.initial_a:
            raise DomainError(f"initial quotes are crossed: b={self.initial_b} >= a={self.initial_a}")


@dataclass
class SimulationResult:
    history: L1History
    books: list[BookState] = field(default_factory=list)
    event_counts: dict[str, int] = field(default_factory=dict)
    final_book: BookState | None = None
    elapsed: float = 0.0
    absorbed: bool = False

    @property
    def total_events(self) -> int:
        return sum(self.event_counts.values())


class _RateCache:
    """Per-(a, b) intensity vectors with the limit-order masks already applied."""

    def __init__(self, spec: IntensitySpec, n: int):
        self._spec = spec
        self._n = n
        self._ticks = np.arange(1, n + 1)
        self._tables: dict[tuple[int, int], tuple] = {}

    def get(self, a: int, b: int):
        key = (a, b)
        entry = self._tables.get(key)
        if entry is None:
            table = self._spec.rate_table(a, b, self._n)
            entry = (
                np.array([table.theta, table.vartheta]),
                np.where(self._ticks > b, table.kappa, 0.0),
                np.where(self._ticks < a, table.lam, 0.0),
                table.rho,
                table.sigma,
            )
            self._tables[key] = entry
        return entry


def sample_initial_book(spec: IntensitySpec, grid: TickGrid, a0: int, b0: int,
                        rng: np.random.Generator) -> BookState:
    """One order at each initial quote, independent Poisson depths beyond them."""
    if b0 >= a0:
        raise DomainError(f"initial quotes are crossed: b0={b0} >= a0={a0}")
    n = grid.n
    asks = np.zeros(n, dtype=np.int64)
    bids = np.zeros(n, dtype=np.int64)
    if a0 <= n:
        asks[a0 - 1] = 1
        asks[a0:] = rng.poisson(spec.iota_vector(n)[a0:])
    if b0 >= 1:
        bids[b0 - 1] = 1
        bids[: b0 - 1] = rng.poisson(spec.iota_bid_vector(n)[: b0 - 1])
    return BookState(asks, bids)


def _rate_vector(asks, bids, cache: _RateCache, limit_open: bool = True) -> np.ndarray:
    head, kappa, lam, rho, sigma = cache.get(best_ask(asks), best_bid(bids))
    if not limit_open:
        kappa = lam = np.zeros_like(kappa)
    return np.concatenate((head, kappa, lam, asks * rho, bids * sigma))


def total_intensity(book: BookState, spec: IntensitySpec, grid: TickGrid) -> float:
    cache = _RateCache(spec, grid.n)
    return float(_rate_vector(book.asks, book.bids, cache).sum())


def _decode(idx: int, n: int) -> EventCode:
    if idx == 0:
        return EventCode(EventKind.BMO)
    if idx == 1:
        return EventCode(EventKind.SMO)
    block, offset = divmod(idx - 2, n)
    kind = (EventKind.SLO, EventKind.BLO, EventKind.CA, EventKind.CB)[block]
    return EventCode(kind, p=offset + 1)


def _draw(rates: np.ndarray, n: int, rng: np.random.Generator) -> tuple[float, EventCode]:
    cumulative = np.cumsum(rates)
    total = cumulative[-1]
    if not total > 0:
        raise AbsorbedChainError("total event intensity is zero")
    dt = rng.exponential(1.0 / total)
    idx = int(np.searchsorted(cumulative, rng.random() * total, side="right"))
    if idx >= rates.size:
        idx = int(np.flatnonzero(rates)[-1])
    return dt, _decode(idx, n)


def _zi_advance(asks, bids, cache, n, rng) -> tuple[float, EventCode]:
    dt, event = _draw(_rate_vector(asks, bids, cache), n, rng)
    apply_zi_event(asks, bids, event)
    return dt, event


def _gzi_advance(asks, bids, cache, gzi: GziConfig, n, rng) -> tuple[float, EventCode]:
    limit_open = int(asks.sum() + bids.sum()) < gzi.volume_cap
    dt, event = _draw(_rate_vector(asks, bids, cache, limit_open), n, rng)
    a, b = best_ask(asks), best_bid(bids)
    kind = event.kind

    if kind in (EventKind.BMO, EventKind.SMO):
        z = int(gzi.mo_volume_law.sample(rng))
        execute_market_order(asks if kind is EventKind.BMO else bids, z, from_low=kind is EventKind.BMO)
        return dt, EventCode(kind, z=z)

    if kind is EventKind.SLO and event.p < a:
        asks[event.p - 1] += 1
        thin_displaced_quote(asks, a, gzi.eta, rng)
        return dt, event
    if kind is EventKind.BLO and event.p > b:
        bids[event.p - 1] += 1
        thin_displaced_quote(bids, b, gzi.eta, rng)
        return dt, event

    at_quote = (kind is EventKind.CA and event.p == a) or (kind is EventKind.CB and event.p == b)
    if at_quote and gzi.shift_prob > 0 and rng.random() < gzi.shift_prob:
        depth = int(asks[a - 1]) if kind is EventKind.CA else int(bids[b - 1])
        shift = draw_shift(kind, gzi, depth, rng)
        target = shift_target(shift, a, b, n)
        if target is not None:
            apply_shift(asks, bids, shift, target)
            return dt, replace(shift, p=a if shift.is_ask_side else b)
        # a shift that would cross or leave the grid stays a plain cancellation

    apply_zi_event(asks, bids, event)
    return dt, event


def _working_copy(book: BookState) -> tuple[np.ndarray, np.ndarray]:
    return np.array(book.asks, dtype=np.int64), np.array(book.bids, dtype=np.int64)


def step(book: BookState, spec: IntensitySpec, grid: TickGrid,
         rng: np.random.Generator) -> tuple[float, EventCode, BookState]:
    asks, bids = _working_copy(book)
    dt, event = _zi_advance(asks, bids, _RateCache(spec, grid.n), grid.n, rng)
    return dt, event, BookState(asks, bids)


def gzi_step(book: BookState, spec: IntensitySpec, gzi: GziConfig, grid: TickGrid,
             rng: np.random.Generator) -> tuple[float, EventCode, BookState]:
    asks, bids = _working_copy(book)
    dt, event = _gzi_advance(asks, bids, _RateCache(spec, grid.n), gzi, grid.n, rng)
    return dt, event, BookState(asks, bids)


def _l1(asks: np.ndarray, bids: np.ndarray) -> L1State:
    n = asks.size
    a, b = best_ask(asks), best_bid(bids)
    return L1State(
        a=a,
        b=b,
        q=int(asks[a - 1]) if a <= n else 0,
        r=int(bids[b - 1]) if b >= 1 else 0,
    )


def _trade_of(event: EventCode, l1_before: L1State, n: int) -> int:
    """Signed trade volume: -z for a buy market order, +z for a sell one, 0 otherwise."""
    if event.kind is EventKind.BMO and l1_before.a <= n:
        return -event.z
    if event.kind is EventKind.SMO and l1_before.b >= 1:
        return event.z
    return 0


def simulate(config: SimConfig) -> SimulationResult:
    """Run burn_in_events unrecorded events, then record the L1 jumps of max_events more."""
    grid, n = config.grid, config.grid.n
    rng = make_rng(config.seed, config.stream)
    book = sample_initial_book(config.spec, grid, config.initial_a, config.initial_b, rng)
    asks, bids = _working_copy(book)
    cache = _RateCache(config.spec, n)

    if config.gzi is None:
        def advance():
            return _zi_advance(asks, bids, cache, n, rng)
    else:
        def advance():
            return _gzi_advance(asks, bids, cache, config.gzi, n, rng)

    for done in range(config.burn_in_events):
        try:
            advance()
        except AbsorbedChainError as exc:
            raise AbsorbedChainError(f"chain absorbed after {done} burn-in events") from exc

    if config.max_events == 0:
        return SimulationResult(history=L1History(()), final_book=BookState(asks, bids))

    current = _l1(asks, bids)
    records = [L1Record(ts_ns=config.start_ns, dt=0.0, state=current)]
    books = [BookState(asks.copy(), bids.copy())] if config.keep_books else []
    counts: Counter[str] = Counter()
    elapsed = since_last = 0.0
    absorbed = False

    for _ in range(config.max_events):
        try:
            dt, event = advance()
        except AbsorbedChainError:
            logger.warning("Chain absorbed after %d recorded events", sum(counts.values()))
            absorbed = True
            break
        elapsed += dt
        since_last += dt
        counts[event.kind.value] += 1
        new = _l1(asks, bids)
        if new == current:
            continue
        ts_ns = max(config.start_ns + round(elapsed * 1e9), records[-1].ts_ns + 1)
        records.append(L1Record(ts_ns=ts_ns, dt=since_last, state=new, event=event,
                                trade=_trade_of(event, current, n)))
        if config.keep_books:
            books.append(BookState(asks.copy(), bids.copy()))
        current = new
        since_last = 0.0

    logger.debug("Simulated %d events, %d L1 jumps, %.3fs of book time",
                 sum(counts.values()), len(records) - 1, elapsed)
    return SimulationResult(
        history=L1History(tuple(records)),
        books=books,
        event_counts=dict(counts),
        final_book=BookState(asks, bids),
        elapsed=elapsed,
        absorbed=absorbed,
    )


def simulate_many(config: SimConfig, paths: int, threads: int = DEFAULT_THREADS) -> list[SimulationResult]:
    """Independent paths on spawned streams of config.seed; path k always uses stream k."""
    configs = [replace(config, stream=k) for k in range(paths)]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        return list(executor.map(simulate, configs))
