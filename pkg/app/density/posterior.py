"""Per-tick conditional laws of the sell book given the L1 history.

Given the history up to now, the depth at a tick p above the ask is
Bi(nu, varpi) o Po(eps + iota), independently across ticks; ticks below the
ask are empty and the ask tick holds exactly q orders. Between jumps every
tick above the ask evolves as an immigration-death queue with the
intensities at its distance to the prevailing ask:

    delta = exp(-rho(p - a) dt),  phi = kappa(p - a) / rho(p - a)
    eps'  = delta eps + phi (1 - delta)
    varpi' = delta varpi,  iota' = delta iota

When the ask moves strictly below p the tick restarts from what the L1
record reveals: nu = q_prev at the old ask (else 0), varpi = 1 (eta at the
old ask in the GZI book, whose displaced orders survive with probability
eta), eps = iota = 0.

The in-place kernels decay_arrays and reset_arrays are what the estimator
sweeps with; TickPosterior is the immutable snapshot the density functions
read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from app.density.bipo import BiPoLaw
from app.errors import DomainError
from app.models.domain import EventCode, EventKind, L1State
from app.models.params import ModelParams, distance_rates


def decay_arrays(varpi: np.ndarray, eps: np.ndarray, iota: np.ndarray, a: int, dt: float,
                 kappa_d: np.ndarray, rho_d: np.ndarray) -> None:
    """Advance ticks a+1..n through dt seconds with the ask fixed at a."""
    n = varpi.size
    if a >= n:
        return
    distance = np.arange(1, n - a + 1)
    rho = rho_d[distance]
    survival = np.exp(-rho * dt)
    above = slice(a, n)
    eps[above] = survival * eps[above] + (kappa_d[distance] / rho) * -np.expm1(-rho * dt)
    varpi[above] *= survival
    iota[above] *= survival


def reset_arrays(nu: np.ndarray, varpi: np.ndarray, eps: np.ndarray, iota: np.ndarray,
                 old_a: int, new_a: int, q_left: int, survival: float) -> None:
    """Restart the ticks the ask just moved below; q_left orders remain at the old ask."""
    n = nu.size
    if new_a >= old_a:
        return
    crossed = slice(new_a, min(old_a, n))
    nu[crossed] = 0
    varpi[crossed] = 1.0
    eps[crossed] = 0.0
    iota[crossed] = 0.0
    if old_a <= n:
        nu[old_a - 1] = q_left
        varpi[old_a - 1] = survival


@dataclass(frozen=True, eq=False)
class TickPosterior:
    """Conditional sell-book laws at one instant; arrays are indexed by tick p-1."""

    state: L1State
    nu: np.ndarray
    varpi: np.ndarray
    eps: np.ndarray
    iota: np.ndarray
    reset_at: np.ndarray
    jumps: int = 0

    def __post_init__(self):
        for name in ("nu", "varpi", "eps", "iota", "reset_at"):
            array = np.array(getattr(self, name))
            array.flags.writeable = False
            object.__setattr__(self, name, array)

    @property
    def n(self) -> int:
        return int(self.nu.size)

    def law(self, p: int) -> BiPoLaw:
        if not 1 <= p <= self.n:
            raise DomainError(f"tick {p} is outside the grid 1..{self.n}")
        a = self.state.a
        if p < a:
            return BiPoLaw.point(0)
        if p == a:
            return BiPoLaw.point(self.state.q)
        return BiPoLaw(int(self.nu[p - 1]), float(self.varpi[p - 1]),
                       float(self.eps[p - 1] + self.iota[p - 1]))

    def working_arrays(self):
        return (self.nu.copy(), self.varpi.copy(), self.eps.copy(),
                self.iota.copy(), self.reset_at.copy())


def initial_posterior(state: L1State, n: int, iota=None) -> TickPosterior:
    """Session-start laws: Po(iota_p) above the ask, iota = 0 unless given."""
    state.validate(n)
    iota_vec = np.zeros(n)
    if iota is not None:
        values = np.asarray(iota, dtype=float)[:n]
        iota_vec[: values.size] = values
    return TickPosterior(
        state=state,
        nu=np.zeros(n, dtype=np.int64),
        varpi=np.ones(n),
        eps=np.zeros(n),
        iota=iota_vec,
        reset_at=np.full(n, -1, dtype=np.int64),
    )


def _rates_for(params: ModelParams, n: int):
    return distance_rates(params, max(n, 1))


def decay_posterior(post: TickPosterior, dt: float, params: ModelParams) -> TickPosterior:
    """Laws just before the next jump, dt seconds after post."""
    if not dt > 0 or not math.isfinite(dt):
        raise DomainError(f"dt must be positive and finite, got {dt}")
    nu, varpi, eps, iota, reset_at = post.working_arrays()
    kappa_d, rho_d = _rates_for(params, post.n)
    decay_arrays(varpi, eps, iota, post.state.a, dt, kappa_d, rho_d)
    return TickPosterior(post.state, nu, varpi, eps, iota, reset_at, post.jumps)


def apply_jump(post: TickPosterior, event: EventCode | None, new_state: L1State,
               eta: float | None = None) -> TickPosterior:
    """Condition the (already decayed) laws on the jump to new_state."""
    new_state.validate(post.n)
    nu, varpi, eps, iota, reset_at = post.working_arrays()
    old = post.state
    if new_state.a < old.a:
        q_left, survival = old.q, 1.0 if eta is None else eta
        if event is not None and event.kind is EventKind.SAL:
            # a shift leaves the rest of the old quote in place, nothing is thinned
            q_left, survival = old.q - event.z, 1.0
        reset_arrays(nu, varpi, eps, iota, old.a, new_state.a, q_left, survival)
        reset_at[new_state.a: min(old.a, post.n)] = post.jumps
    return TickPosterior(new_state, nu, varpi, eps, iota, reset_at, post.jumps + 1)


def advance_posterior(post: TickPosterior, dt: float, event: EventCode | None, new_state: L1State,
                      params: ModelParams, eta: float | None = None) -> TickPosterior:
    """Decay through dt, then absorb the jump to new_state. eta defaults to params.eta."""
    if eta is None:
        eta = params.eta
    return apply_jump(decay_posterior(post, dt, params), event, new_state, eta)
