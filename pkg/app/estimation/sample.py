"""Estimation samples.

A sample keeps, per trading session, the parameter-free skeleton of the
ask path: the sequence of ask epochs (ask tick, how long it stood, and the
quote depth when it moved). The conditional laws of the hidden book at any
observation are rebuilt from this skeleton for every candidate parameter
vector, so nothing parameter-dependent is stored here.

Observations are the up-jumps of the ask (ZI mode) or only the up-jumps
matched with a trade (GZI mode), in chronological order. The first N form
the in-sample segment and the next M = ceil(N/10) the out-of-sample one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from app.config import MAX_IN_SAMPLE, MIN_OBSERVATIONS, OUT_OF_SAMPLE_FRACTION
from app.errors import DomainError
from app.models.domain import L1State


class Mode(str, Enum):
    ZI = "zi"
    GZI = "gzi"


class EventClass(str, Enum):
    DEPLETION = "depletion"  # ask moved up
    INSERTION = "insertion"  # ask moved down into the spread


@dataclass(frozen=True)
class AskEpoch:
    a: int
    duration: float
    q_end: int


@dataclass(frozen=True)
class SessionSkeleton:
    label: str
    epochs: tuple[AskEpoch, ...]

    def __post_init__(self):
        object.__setattr__(self, "epochs", tuple(self.epochs))
        if any(e.duration < 0 for e in self.epochs):
            raise DomainError(f"session {self.label}: negative epoch duration")


@dataclass(frozen=True)
class Observation:
    """One jump of the ask; epoch is the index of the epoch that the jump ends."""

    session: int
    epoch: int
    prior: L1State
    a_new: int
    q_new: int
    event_class: EventClass = EventClass.DEPLETION
    s: int = 0
    ts_ns: int = 0
    trade_size: int | None = None

    @property
    def magnitude(self) -> int:
        return self.a_new - self.prior.a


def split_sizes(total: int, cap: int = MAX_IN_SAMPLE) -> tuple[int, int]:
    """Largest N <= cap with N + ceil(N/10) <= total, and that M."""
    n_in = min(cap, total)
    while n_in > 0 and n_in + math.ceil(n_in * OUT_OF_SAMPLE_FRACTION) > total:
        n_in -= 1
    return n_in, math.ceil(n_in * OUT_OF_SAMPLE_FRACTION)


@dataclass(frozen=True)
class Sample:
    n: int
    mode: Mode
    sessions: tuple[SessionSkeleton, ...]
    observations: tuple[Observation, ...]
    n_in: int
    n_out: int
    dropped: int = 0
    reduced: bool = False
    qualifying: int = field(default=-1)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "sessions", tuple(self.sessions))
        object.__setattr__(self, "observations", tuple(self.observations))
        if self.n_in + self.n_out > len(self.observations):
            raise DomainError("split exceeds the number of observations")
        if self.qualifying < 0:
            object.__setattr__(self, "qualifying", len(self.observations))

    @classmethod
    def from_observations(cls, n: int, mode: Mode, sessions, observations,
                          cap: int = MAX_IN_SAMPLE, **extra) -> "Sample":
        observations = tuple(observations)
        n_in, n_out = split_sizes(len(observations), cap)
        return cls(n=n, mode=mode, sessions=tuple(sessions), observations=observations[: n_in + n_out],
                   n_in=n_in, n_out=n_out, qualifying=len(observations), **extra)

    @property
    def insufficient(self) -> bool:
        return self.n_in < MIN_OBSERVATIONS

    def in_sample(self) -> tuple[Observation, ...]:
        return self.observations[: self.n_in]

    def out_of_sample(self) -> tuple[Observation, ...]:
        return self.observations[self.n_in: self.n_in + self.n_out]

    def with_cap(self, cap: int) -> "Sample":
        """Same data resplit with at most cap in-sample observations."""
        n_in, n_out = split_sizes(len(self.observations), cap)
        return replace(self, n_in=n_in, n_out=n_out, reduced=cap < self.n_in)

    def manifest(self) -> dict:
        """Counts and means shown in sample manifests and reports."""
        inside = self.in_sample()
        sizes = [o.trade_size for o in inside if o.trade_size is not None]
        return {
            "mode": self.mode.value,
            "grid_n": self.n,
            "sessions": len(self.sessions),
            "qualifying": self.qualifying,
            "n_in": self.n_in,
            "n_out": self.n_out,
            "dropped": self.dropped,
            "reduced": self.reduced,
            "insufficient": self.insufficient,
            "mean_jump": float(np.mean([o.magnitude for o in inside])) if inside else None,
            "mean_mo_volume": float(np.mean(sizes)) if sizes else None,
            "all_unit_jumps": bool(inside) and all(o.magnitude == 1 for o in inside),
        }
