"""Unit tests for the holding-time and event-type law of the next L1 jump."""

import math

import pytest
from scipy.integrate import quad

from app.density.rates import event_time_density, rate_summary
from app.errors import AbsorbedChainError, DomainError
from app.models.domain import EventCode, EventKind, L1State
from app.models.params import ModelParams
from app.presets.book_presets import smith
from app.utils.rng import make_rng


def _summary(state=None, theta=1.0, kappa=0.5, rho=0.2, n=5):
    state = state or L1State(a=3, b=1, q=2, r=1)
    return rate_summary(state, smith(theta_s=theta, kappa_s=kappa, rho_s=rho), n)


class TestRateSummary:
    def test_hand_summed_gamma(self):
        # 1 + 1 + 2 * 0.2 + 1 * 0.2 + 2 * 0.5 + 2 * 0.5
        assert _summary().gamma == pytest.approx(4.6)

    def test_cancellation_scales_with_quote_volume(self):
        summary = _summary()
        assert summary.probability(EventCode(EventKind.CA, p=3)) == pytest.approx(0.4 / 4.6)
        assert summary.probability(EventCode(EventKind.CB, p=1)) == pytest.approx(0.2 / 4.6)

    def test_events_that_leave_l1_alone_have_no_mass(self):
        assert _summary().probability(EventCode(EventKind.SLO, p=5)) == 0.0

    def test_uniform_when_everything_is_equal(self):
        summary = _summary(L1State(a=2, b=1, q=1, r=1), theta=0.5, kappa=0.5, rho=0.5)
        assert len(set(round(p, 12) for p in summary.pi.values())) == 1

    def test_probabilities_sum_to_one(self):
        rng = make_rng(9)
        n = 8
        for _ in range(200):
            b = int(rng.integers(0, n))
            a = int(rng.integers(b + 1, n + 2))
            state = L1State(a=a, b=b, q=int(rng.integers(1, 5)) if a <= n else 0,
                            r=int(rng.integers(1, 5)) if b >= 1 else 0)
            summary = rate_summary(state, ModelParams.basic(0.3, 0.8), n)
            assert sum(summary.pi.values()) == pytest.approx(1.0)

    def test_frozen_book_is_absorbed(self):
        with pytest.raises(AbsorbedChainError):
            _summary(theta=0.0, kappa=0.0, rho=0.0)

    def test_without_volume_multipliers(self):
        summary = rate_summary(L1State(a=3, b=1, q=2, r=1), smith(theta_s=1.0, kappa_s=0.5, rho_s=0.2), 5,
                               include_volume=False)
        assert summary.gamma == pytest.approx(4.4)


class TestEventTimeDensity:
    def test_value_at_origin(self):
        summary = _summary()
        event = EventCode(EventKind.BMO)
        assert event_time_density(0.0, event, summary) == pytest.approx(1.0)

    def test_integrates_to_one(self):
        summary = _summary()
        total = sum(quad(lambda t, e=e: event_time_density(t, e, summary), 0, math.inf)[0] for e in summary.pi)
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            event_time_density(-0.1, EventCode(EventKind.BMO), _summary())
