"""Holding time and type of the next L1 jump.

Given the current L1 state only the events that move (a, b, q, r) count:
the two market orders, cancellations at the quotes, and limit orders at or
inside the quotes. Their summed intensity gamma makes the time to the next
L1 jump Exp(gamma), and each event type is picked with probability
pi(e) = I(e) / gamma.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from app.density.jumps import JumpContext, jump_density_gzi, jump_density_zi
from app.errors import AbsorbedChainError, DomainError
from app.models.domain import EventCode, EventKind, L1State
from app.models.intensity import IntensitySpec, SpreadRates, intensity_from_params
from app.models.params import ModelParams


@dataclass(frozen=True)
class EventRateSummary:
    gamma: float
    pi: dict[EventCode, float]

    def probability(self, event: EventCode) -> float:
        return self.pi.get(event, 0.0)


def rate_summary(state: L1State, intensities: IntensitySpec | ModelParams, n: int,
                 spread: SpreadRates | None = None, include_volume: bool = True) -> EventRateSummary:
    """gamma and pi at state. include_volume=False drops the q and r multipliers on the quote cancellations."""
    if isinstance(intensities, ModelParams):
        intensities = intensity_from_params(intensities, spread)
    state.validate(n)
    a, b = state.a, state.b
    table = intensities.rate_table(a, b, n)

    rates: dict[EventCode, float] = {
        EventCode(EventKind.BMO): table.theta,
        EventCode(EventKind.SMO): table.vartheta,
    }
    if a <= n:
        rates[EventCode(EventKind.CA, p=a)] = (state.q if include_volume else 1) * table.rho[a - 1]
    if b >= 1:
        rates[EventCode(EventKind.CB, p=b)] = (state.r if include_volume else 1) * table.sigma[b - 1]
    for p in range(b + 1, min(a, n) + 1):
        rates[EventCode(EventKind.SLO, p=p)] = table.kappa[p - 1]
    for p in range(max(b, 1), a):
        if p <= n:
            rates[EventCode(EventKind.BLO, p=p)] = table.lam[p - 1]

    gamma = float(sum(rates.values()))
    if not gamma > 0:
        raise AbsorbedChainError(f"no L1 event can occur at {state}")
    return EventRateSummary(gamma=gamma, pi={e: float(r) / gamma for e, r in rates.items()})


def event_time_density(tau: float, event: EventCode, summary: EventRateSummary) -> float:
    """gamma exp(-gamma tau) pi(e): the holding time and the type are independent."""
    if tau < 0:
        raise DomainError(f"tau must be nonnegative, got {tau}")
    return summary.gamma * math.exp(-summary.gamma * tau) * summary.probability(event)


def joint_density(tau: float, event: EventCode, a_new: int, q_new: int,
                  summary: EventRateSummary, context: JumpContext, gzi: bool = False) -> float:
    """Holding-time/type density times the conditional law of the new ask."""
    density = jump_density_gzi if gzi else jump_density_zi
    return event_time_density(tau, event, summary) * density(a_new, q_new, context)
