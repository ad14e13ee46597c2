"""Event rules of the ZI and GZI books.

Books are handled here as two mutable int64 depth vectors (asks, bids)
indexed by tick p-1; the engine snapshots them into BookState only when it
records a jump. Every function below keeps the book uncrossed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from app.errors import DomainError
from app.models.domain import EventCode, EventKind


@dataclass(frozen=True)
class DiscreteLaw:
    """A finitely supported law: values[k] has probability probs[k]."""

    values: tuple
    probs: tuple[float, ...]
    _cdf: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size != len(self.values) or probs.size == 0:
            raise DomainError("a discrete law needs one probability per value")
        if (probs < 0).any() or not np.all(np.isfinite(probs)):
            raise DomainError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise DomainError(f"probabilities sum to {probs.sum():.15g}, not 1")
        object.__setattr__(self, "probs", tuple(float(p) for p in probs))
        object.__setattr__(self, "_cdf", np.cumsum(probs))

    @classmethod
    def point(cls, value) -> "DiscreteLaw":
        return cls((value,), (1.0,))

    def sample(self, rng: np.random.Generator):
        idx = int(np.searchsorted(self._cdf, rng.random() * self._cdf[-1], side="right"))
        return self.values[min(idx, len(self.values) - 1)]

    def mean(self) -> float:
        return float(np.dot(np.asarray(self.values, dtype=float), self.probs))


@dataclass(frozen=True)
class GziConfig:
    """Extensions of the GZI book over the ZI one.

    eta is the survival probability of each displaced quote order when a
    limit order lands inside the spread. A quote cancellation becomes, with
    probability shift_prob, a shift of quote orders drawn from shift_law,
    whose values are (displacement, volume) pairs: positive displacements
    move away from the spread, negative ones into it. Limit-order arrivals
    are switched off while the book holds volume_cap orders or more.
    """

    eta: float = 1.0
    mo_volume_law: DiscreteLaw = field(default_factory=lambda: DiscreteLaw.point(1))
    shift_prob: float = 0.0
    shift_law: DiscreteLaw | None = None
    volume_cap: int = 1_000_000

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")
        if any(int(z) != z or z < 1 for z in self.mo_volume_law.values):
            raise DomainError("market order volumes must be integers >= 1")
        if not 0.0 <= self.shift_prob < 1.0:
            raise DomainError(f"shift_prob must lie in [0, 1), got {self.shift_prob}")
        if self.shift_prob > 0 and self.shift_law is None:
            raise DomainError("shift_prob > 0 needs a shift_law")
        if self.shift_law is not None:
            for displacement, volume in self.shift_law.values:
                if displacement == 0 or volume < 1:
                    raise DomainError("shifts need a nonzero displacement and a volume >= 1")
        if self.volume_cap < 1:
            raise DomainError("volume_cap must be a positive integer")

    @property
    def reduces_to_zi(self) -> bool:
        return self.eta == 1.0 and self.mo_volume_law.values == (1,) and self.shift_prob == 0.0


def best_ask(asks: np.ndarray) -> int:
    occupied = np.flatnonzero(asks)
    return int(occupied[0]) + 1 if occupied.size else asks.size + 1


def best_bid(bids: np.ndarray) -> int:
    occupied = np.flatnonzero(bids)
    return int(occupied[-1]) + 1 if occupied.size else 0


def execute_market_order(depth: np.ndarray, z: int, from_low: bool) -> int:
    """Remove up to z orders walking away from the quote; returns the executed volume."""
    occupied = np.flatnonzero(depth)
    if not from_low:
        occupied = occupied[::-1]
    remaining = z
    for idx in occupied:
        take = min(remaining, int(depth[idx]))
        depth[idx] -= take
        remaining -= take
        if remaining == 0:
            break
    return z - remaining


def apply_zi_event(asks: np.ndarray, bids: np.ndarray, event: EventCode) -> None:
    """Apply one event of the ZI table in place. Market orders on an empty side are no-ops."""
    kind = event.kind
    if kind is EventKind.BMO:
        execute_market_order(asks, event.z, from_low=True)
    elif kind is EventKind.SMO:
        execute_market_order(bids, event.z, from_low=False)
    elif kind is EventKind.SLO:
        if event.p <= best_bid(bids):
            raise DomainError(f"sell limit order at {event.p} would cross the bid")
        asks[event.p - 1] += 1
    elif kind is EventKind.BLO:
        if event.p >= best_ask(asks):
            raise DomainError(f"buy limit order at {event.p} would cross the ask")
        bids[event.p - 1] += 1
    elif kind is EventKind.CA:
        if asks[event.p - 1] < 1:
            raise DomainError(f"no sell order to cancel at {event.p}")
        asks[event.p - 1] -= 1
    elif kind is EventKind.CB:
        if bids[event.p - 1] < 1:
            raise DomainError(f"no buy order to cancel at {event.p}")
        bids[event.p - 1] -= 1
    else:
        raise DomainError(f"{kind.value} is not a ZI event")


def thin_displaced_quote(depth: np.ndarray, old_quote: int, eta: float, rng: np.random.Generator) -> None:
    """Each order left behind the new quote survives independently with probability eta."""
    if eta < 1.0 and 1 <= old_quote <= depth.size:
        depth[old_quote - 1] = rng.binomial(int(depth[old_quote - 1]), eta)


def shift_target(event: EventCode, a: int, b: int, n: int) -> int | None:
    """Destination tick of a shift, or None when the move would cross or leave the grid."""
    kind, d = event.kind, event.shift
    if kind is EventKind.SAR:
        target = a + d
        return target if target <= n else None
    if kind is EventKind.SAL:
        target = a - d
        return target if target > max(b, 0) else None
    if kind is EventKind.SBL:
        target = b - d
        return target if target >= 1 else None
    if kind is EventKind.SBR:
        target = b + d
        return target if target < min(a, n + 1) else None
    raise DomainError(f"{kind.value} is not a shift")


def apply_shift(asks: np.ndarray, bids: np.ndarray, event: EventCode, target: int) -> None:
    if event.is_ask_side:
        source = best_ask(asks)
        asks[source - 1] -= event.z
        asks[target - 1] += event.z
    else:
        source = best_bid(bids)
        bids[source - 1] -= event.z
        bids[target - 1] += event.z


def draw_shift(kind: EventKind, gzi: GziConfig, depth_at_quote: int, rng: np.random.Generator) -> EventCode:
    """Turn a quote cancellation into a shift event; the volume is capped at the quote depth."""
    displacement, volume = gzi.shift_law.sample(rng)
    z = min(int(volume), depth_at_quote)
    ask_side = kind is EventKind.CA
    if displacement > 0:
        shift_kind = EventKind.SAR if ask_side else EventKind.SBL
    else:
        shift_kind = EventKind.SAL if ask_side else EventKind.SBR
    return EventCode(shift_kind, z=z, shift=abs(int(displacement)))
