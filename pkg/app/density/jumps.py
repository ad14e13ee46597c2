"""Conditional law of the new ask after an L1 jump.

In the ZI book a jump of the ask is one of: a limit order inside the spread
(or on the quote), a quote decrement, or a depletion of the quote when its
last order leaves. Only the depletion is random given the history: the new
ask is the first occupied tick above the old one, so

    g(a, q) = prod_{a_prev < p < a} P[A^p = 0] * omega(a, q)

with omega the landing-tick law, or 1[q = 0] when the whole sell side is
gone (a = n + 1).

In the GZI book a buy market order of volume z eats s = z - q_prev orders
beyond the quote. With M_a the orders strictly between a_prev and a,

    g(a, q) = sum_{j <= s} P[M_a = j] P[A^a = s + q - j],   a <= n
    g(n + 1, 0) = P[M_{n+1} <= s]

A ZI depletion is the case s = 0, and both paths agree exactly there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from app.config import DENSITY_TAIL_TOL, MEAN_TAIL_TOL
from app.density.bipo import convolve_truncated, log_zero_probability, poisson_binomial_sum_pmf
from app.density.posterior import TickPosterior
from app.errors import InconsistentContextError
from app.models.domain import EventCode, EventKind, L1State


@dataclass(frozen=True)
class JumpContext:
    """The event that moved the book and the sell-book laws just before it."""

    event: EventCode
    posterior: TickPosterior
    prior: L1State | None = None

    def __post_init__(self):
        if self.prior is None:
            object.__setattr__(self, "prior", self.posterior.state)
        elif self.prior != self.posterior.state:
            raise InconsistentContextError(
                f"prior state {self.prior} does not match the posterior's state {self.posterior.state}"
            )

    @property
    def n(self) -> int:
        return self.posterior.n


@dataclass(frozen=True)
class JumpLaw:
    """Law of the ask jump magnitude m = a_new - a_prev; the last entry may be the empty-book jump."""

    magnitudes: np.ndarray
    probs: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.probs.sum())

    def mean(self) -> float:
        return float(np.dot(self.magnitudes, self.probs))

    def moment(self, k: float) -> float:
        return float(np.dot(self.magnitudes.astype(float) ** k, self.probs))


def _indicator(a_new: int, q_new: int, a: int, q: int) -> float:
    return 1.0 if (a_new, q_new) == (a, q) else 0.0


def _log_all_empty(post: TickPosterior, first: int, last: int) -> float:
    """log P[no orders on ticks first..last] (0 when the range is empty)."""
    if last < first:
        return 0.0
    sl = slice(first - 1, last)
    return float(log_zero_probability(post.nu[sl], post.varpi[sl], post.eps[sl] + post.iota[sl]).sum())


def depletion_log_density(a_new: int, q_new: int, post: TickPosterior) -> float:
    """log g(a_new, q_new) for a quote that vanished with nothing eaten beyond it.

    Also used on recorded data where a quote of several orders vanished at once.
    """
    a_prev, n = post.state.a, post.n
    if a_new <= a_prev or a_new > n + 1:
        return -math.inf
    log_gap = _log_all_empty(post, a_prev + 1, a_new - 1)
    if a_new == n + 1:
        return log_gap if q_new == 0 else -math.inf
    if q_new < 1:
        return -math.inf
    return log_gap + post.law(a_new).logpmf(q_new)


def depletion_density(a_new: int, q_new: int, post: TickPosterior) -> float:
    return math.exp(depletion_log_density(a_new, q_new, post))


def _check_context(context: JumpContext) -> None:
    prior = context.prior
    try:
        prior.validate(context.n)
    except ValueError as exc:
        raise InconsistentContextError(str(exc)) from exc


def jump_density_zi(a_new: int, q_new: int, context: JumpContext) -> float:
    """g(a_new, q_new) after a ZI event; bid-side events leave the ask where it was."""
    _check_context(context)
    event, prior, n = context.event, context.prior, context.n
    a, b, q = prior.a, prior.b, prior.q
    kind = event.kind

    if kind is EventKind.SLO:
        if event.p <= b:
            raise InconsistentContextError(f"SLO({event.p}) at or below the bid {b}")
        if event.p <= min(a, n):
            return _indicator(a_new, q_new, event.p, (q if event.p == a else 0) + 1)
        return _indicator(a_new, q_new, a, q)

    if kind in (EventKind.BMO, EventKind.CA):
        if kind is EventKind.CA:
            if event.p < a or event.p > n:
                raise InconsistentContextError(f"CA({event.p}) with no sell order there (ask {a})")
            if event.p > a:
                return _indicator(a_new, q_new, a, q)
        elif a > n:
            return _indicator(a_new, q_new, a, q)
        if q > 1:
            return _indicator(a_new, q_new, a, q - 1)
        return depletion_density(a_new, q_new, context.posterior)

    if kind in (EventKind.SMO, EventKind.BLO, EventKind.CB):
        return _indicator(a_new, q_new, a, q)
    raise InconsistentContextError(f"{kind.value} is not a ZI event")


def s_value(event: EventCode, q_prev: int) -> int:
    """Orders the event would like to remove beyond the quote."""
    if event.kind is EventKind.BMO:
        if event.z < q_prev:
            raise InconsistentContextError(f"BMO(z={event.z}) does not deplete a quote of {q_prev}")
        return event.z - q_prev
    if event.kind is EventKind.SAR:
        return -event.z
    if event.kind is EventKind.CA:
        return 0
    raise InconsistentContextError(f"{event.kind.value} does not deplete the ask")


def _between_pmf(post: TickPosterior, a_prev: int, a_new: int, kmax: int) -> np.ndarray:
    """P[M = j], j = 0..kmax, M the orders on ticks strictly between a_prev and a_new."""
    sl = slice(a_prev, max(a_new - 1, a_prev))
    mu = float((post.eps[sl] + post.iota[sl]).sum())
    return poisson_binomial_sum_pmf(post.nu[sl], post.varpi[sl], mu, kmax)


def gzi_log_density(a_new: int, q_new: int, post: TickPosterior, s: int) -> float:
    if s < 0:
        return -math.inf
    a_prev, n = post.state.a, post.n
    if a_new <= a_prev or a_new > n + 1:
        return -math.inf
    m_pmf = _between_pmf(post, a_prev, a_new, s)
    if a_new == n + 1:
        total = float(m_pmf.sum()) if q_new == 0 else 0.0
    elif q_new < 1:
        total = 0.0
    else:
        landing = post.law(a_new).pmf_vector(s + q_new)
        j = np.arange(s + 1)
        total = float(np.dot(m_pmf, landing[s + q_new - j]))
    return math.log(total) if total > 0 else -math.inf


def jump_density_gzi(a_new: int, q_new: int, context: JumpContext, s: int | None = None) -> float:
    """g~(a_new, q_new) after a depleting GZI event; s defaults to s_value(event, q_prev)."""
    _check_context(context)
    if s is None:
        s = s_value(context.event, context.prior.q)
    return math.exp(gzi_log_density(a_new, q_new, context.posterior, s))


def _zi_jump_law(post: TickPosterior, tol: float) -> JumpLaw:
    a_prev, n = post.state.a, post.n
    sl = slice(a_prev, n)
    log_empty = log_zero_probability(post.nu[sl], post.varpi[sl], post.eps[sl] + post.iota[sl])
    log_gap = np.concatenate(([0.0], np.cumsum(log_empty)))
    # P[first occupied tick is a_prev + m] for m = 1..n - a_prev, then the empty-side mass
    probs = np.exp(log_gap[:-1]) * -np.expm1(log_empty)
    probs = np.append(probs, math.exp(log_gap[-1]))
    magnitudes = np.arange(1, n - a_prev + 2)
    cutoff = np.searchsorted(np.cumsum(probs), 1.0 - tol, side="left")
    keep = min(int(cutoff) + 1, probs.size)
    return JumpLaw(magnitudes[:keep], probs[:keep])


def _gzi_jump_law(post: TickPosterior, s: int, tol: float) -> JumpLaw:
    a_prev, n = post.state.a, post.n
    m_pmf = np.zeros(s + 1)
    m_pmf[0] = 1.0
    probs, cumulative = [], 0.0
    for a in range(a_prev + 1, n + 1):
        landing = post.law(a).pmf_vector(s)
        exceeds = np.clip(1.0 - np.cumsum(landing), 0.0, 1.0)
        p = float(np.dot(m_pmf, exceeds[::-1]))
        probs.append(p)
        cumulative += p
        if cumulative >= 1.0 - tol:
            break
        m_pmf = convolve_truncated(m_pmf, landing, s)
    else:
        probs.append(float(m_pmf.sum()))
    probs = np.asarray(probs)
    return JumpLaw(np.arange(1, probs.size + 1), probs)


def jump_law(context: JumpContext, tol: float = DENSITY_TAIL_TOL) -> JumpLaw:
    """Law of the jump magnitude after the depleting event of the context."""
    _check_context(context)
    post = context.posterior
    if post.state.a > context.n:
        raise InconsistentContextError("the sell side is already empty")
    s = s_value(context.event, context.prior.q)
    if s < 0:
        raise InconsistentContextError("a shift of the quote has no market impact law")
    return _zi_jump_law(post, tol) if s == 0 else _gzi_jump_law(post, s, tol)


def price_impact(z: int, context: JumpContext, tol: float = DENSITY_TAIL_TOL) -> JumpLaw:
    """Jump law after a buy market order of volume z; no jump unless z reaches the quote depth."""
    q_prev = context.prior.q
    if z < q_prev:
        return JumpLaw(np.array([0]), np.array([1.0]))
    order = EventCode(EventKind.BMO, z=z)
    return jump_law(JumpContext(order, context.posterior, context.prior), tol)


def conditional_mean_jump(context: JumpContext, tol: float = MEAN_TAIL_TOL) -> float:
    """E[a_new - a_prev | history] for a depleting event."""
    return jump_law(context, tol).mean()
