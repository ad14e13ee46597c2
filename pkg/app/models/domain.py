"""Domain types shared by the simulator, the density engine and the estimator.

Prices live on an integer tick grid 1..n. Two virtual ticks close the grid:
ask = n+1 means the sell book is empty, bid = 0 means the buy book is empty.
All types are immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from enum import Enum

import numpy as np

from app.errors import DomainError


@dataclass(frozen=True)
class TickGrid:
    """A finite price grid: tick p has price price_offset + (p - 1) * tick_size."""

    n: int
    tick_size: Decimal = Decimal("0.01")
    price_offset: Decimal = Decimal("0")

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"grid needs at least 2 ticks, got n={self.n}")
        object.__setattr__(self, "tick_size", Decimal(self.tick_size))
        object.__setattr__(self, "price_offset", Decimal(self.price_offset))
        if self.tick_size <= 0:
            raise DomainError("tick_size must be positive")

    @property
    def empty_ask(self) -> int:
        return self.n + 1

    @property
    def empty_bid(self) -> int:
        return 0

    def to_tick(self, price: Decimal) -> int:
        """round((price - offset) / tick_size) + 1, half-even on exact halves."""
        steps = (Decimal(price) - self.price_offset) / self.tick_size
        return int(steps.to_integral_value(rounding=ROUND_HALF_EVEN)) + 1

    def to_price(self, tick: int) -> Decimal:
        return self.price_offset + (tick - 1) * self.tick_size

    def mirror(self, p: int) -> int:
        """Bid-side tick p seen as an ask-side tick (and back)."""
        return self.n + 1 - p

    def ticks(self) -> range:
        return range(1, self.n + 1)


@dataclass(frozen=True)
class L1State:
    """The observable top of book x = (a, b, q, r)."""

    a: int
    b: int
    q: int
    r: int

    def __post_init__(self):
        if self.q < 0 or self.r < 0:
            raise DomainError(f"quote volumes must be nonnegative: {self}")
        if self.a < 1 or self.b < 0:
            raise DomainError(f"quote ticks out of range: {self}")

    def validate(self, n: int) -> None:
        """Check the invariants that need the grid size."""
        if self.a > n + 1 or self.b > n:
            raise DomainError(f"quote ticks outside grid 1..{n}: {self}")
        if (self.q >= 1) != (self.a <= n):
            raise DomainError(f"ask volume inconsistent with ask tick: {self}")
        if (self.r >= 1) != (self.b >= 1):
            raise DomainError(f"bid volume inconsistent with bid tick: {self}")
        if self.a <= n and self.b >= 1 and self.b >= self.a:
            raise DomainError(f"crossed quotes: {self}")

    def mirrored(self, n: int) -> "L1State":
        """The same state with buy and sell sides exchanged by p -> n+1-p."""
        return L1State(a=n + 1 - self.b, b=n + 1 - self.a, q=self.r, r=self.q)


class EventKind(str, Enum):
    BMO = "BMO"  # buy market order, hits the ask
    SLO = "SLO"  # sell limit order at tick p
    CA = "CA"  # cancellation of a sell order at tick p
    SMO = "SMO"  # sell market order, hits the bid
    BLO = "BLO"  # buy limit order at tick p
    CB = "CB"  # cancellation of a buy order at tick p
    SAL = "SAL"  # shift of z ask orders `shift` ticks to the left
    SAR = "SAR"  # shift of z ask orders `shift` ticks to the right
    SBL = "SBL"  # shift of z bid orders `shift` ticks to the left
    SBR = "SBR"  # shift of z bid orders `shift` ticks to the right


_PRICED_KINDS = {EventKind.SLO, EventKind.CA, EventKind.BLO, EventKind.CB}
_SHIFT_KINDS = {EventKind.SAL, EventKind.SAR, EventKind.SBL, EventKind.SBR}


@dataclass(frozen=True)
class EventCode:
    """One event of the book. ZI events carry the implicit volume z = 1."""

    kind: EventKind
    p: int | None = None
    z: int = 1
    shift: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EventKind(self.kind))
        if self.kind in _PRICED_KINDS and self.p is None:
            raise DomainError(f"{self.kind.value} needs a tick p")
        if self.kind in _SHIFT_KINDS and (self.shift is None or self.shift < 1):
            raise DomainError(f"{self.kind.value} needs a positive shift")
        if self.z < 1:
            raise DomainError(f"event volume must be >= 1, got z={self.z}")

    @property
    def is_ask_side(self) -> bool:
        return self.kind in {EventKind.BMO, EventKind.SLO, EventKind.CA, EventKind.SAL, EventKind.SAR}

    def label(self) -> str:
        """Compact text form used in manifests, e.g. 'SLO(4)' or 'BMO(z=3)'."""
        args = []
        if self.p is not None:
            args.append(str(self.p))
        if self.z != 1:
            args.append(f"z={self.z}")
        if self.shift is not None:
            args.append(f"shift={self.shift}")
        return f"{self.kind.value}({','.join(args)})" if args else self.kind.value


@dataclass(frozen=True, eq=False)
class BookState:
    """Full two-sided book: asks[p-1] sell orders and bids[p-1] buy orders at tick p."""

    asks: np.ndarray
    bids: np.ndarray

    def __post_init__(self):
        asks = np.array(self.asks, dtype=np.int64)
        bids = np.array(self.bids, dtype=np.int64)
        if asks.shape != bids.shape or asks.ndim != 1:
            raise DomainError("asks and bids must be vectors of equal length")
        if (asks < 0).any() or (bids < 0).any():
            raise DomainError("book depths must be nonnegative")
        asks.flags.writeable = False
        bids.flags.writeable = False
        object.__setattr__(self, "asks", asks)
        object.__setattr__(self, "bids", bids)
        if self.ask <= self.n and self.bid >= 1 and self.bid >= self.ask:
            raise DomainError(f"crossed book: bid={self.bid} ask={self.ask}")

    @classmethod
    def empty(cls, n: int) -> "BookState":
        return cls(np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.asks.shape[0])

    @property
    def ask(self) -> int:
        occupied = np.flatnonzero(self.asks)
        return int(occupied[0]) + 1 if occupied.size else self.n + 1

    @property
    def bid(self) -> int:
        occupied = np.flatnonzero(self.bids)
        return int(occupied[-1]) + 1 if occupied.size else 0

    @property
    def q(self) -> int:
        a = self.ask
        return int(self.asks[a - 1]) if a <= self.n else 0

    @property
    def r(self) -> int:
        b = self.bid
        return int(self.bids[b - 1]) if b >= 1 else 0

    @property
    def total_orders(self) -> int:
        return int(self.asks.sum() + self.bids.sum())

    def l1(self) -> L1State:
        return L1State(a=self.ask, b=self.bid, q=self.q, r=self.r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BookState):
            return NotImplemented
        return np.array_equal(self.asks, other.asks) and np.array_equal(self.bids, other.bids)

    __hash__ = None


@dataclass(frozen=True)
class L1Record:
    """One instant of the L1 process.

    trade follows the sign convention tau = z for SMO(z), -z for BMO(z), 0 otherwise.
    """

    ts_ns: int
    dt: float
    state: L1State
    event: EventCode | None = None
    trade: int = 0


@dataclass(frozen=True)
class L1History:
    """Jump instants of the L1 process; records[0] is the starting state (dt = 0)."""

    records: tuple[L1Record, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.ts_ns <= prev.ts_ns:
                raise DomainError(f"timestamps must increase strictly: {prev.ts_ns} -> {cur.ts_ns}")
            if cur.dt <= 0:
                raise DomainError("inter-event times must be positive")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def states(self) -> list[L1State]:
        return [rec.state for rec in self.records]

    def times(self) -> np.ndarray:
        """Seconds since the first record."""
        if not self.records:
            return np.zeros(0)
        start = self.records[0].ts_ns
        return np.array([(rec.ts_ns - start) / 1e9 for rec in self.records])

    def trades(self) -> list[tuple[int, int]]:
        """(ts_ns, signed trade) for every record carrying a trade."""
        return [(rec.ts_ns, rec.trade) for rec in self.records if rec.trade != 0]
