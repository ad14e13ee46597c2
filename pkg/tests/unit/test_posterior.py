"""Unit tests for the per-tick posterior recursion."""

import math

import numpy as np
import pytest

from app.errors import DomainError
from app.models.domain import EventCode, EventKind, L1State
from app.models.params import ModelParams
from app.density.posterior import advance_posterior, apply_jump, decay_posterior, initial_posterior


def _params(eta=None) -> ModelParams:
    return ModelParams.basic(1.0, 1.0, eta=eta)


def _walk(eta=None):
    """Ask 2 -> 3 -> 1 on four ticks, then ln 2 seconds with the ask at 1."""
    post = initial_posterior(L1State(a=2, b=0, q=1, r=0), 4)
    post = advance_posterior(post, 0.3, EventCode(EventKind.CA, p=2), L1State(a=3, b=0, q=2, r=0), _params(eta))
    post = advance_posterior(post, 0.2, EventCode(EventKind.SLO, p=1), L1State(a=1, b=0, q=3, r=0), _params(eta))
    return decay_posterior(post, math.log(2), _params(eta))


def _assert_law(law, nu, varpi, mu):
    assert law.nu == nu
    assert law.varpi == pytest.approx(varpi)
    assert law.mu == pytest.approx(mu)


class TestWorkedScenario:
    def test_new_ask_is_a_point_mass(self):
        _assert_law(_walk().law(1), 3, 1.0, 0.0)

    def test_tick_below_the_old_ask_restarts_empty(self):
        _assert_law(_walk().law(2), 0, 0.5, 0.5)

    def test_old_ask_keeps_its_orders_thinned(self):
        _assert_law(_walk().law(3), 2, 0.5, 0.5)

    def test_untouched_tick_is_an_immigration_queue(self):
        # 0.5 seconds at distance >= 1 from the earlier asks, then ln 2 more
        _assert_law(_walk().law(4), 0, 0.5, 1 - 0.5 * math.exp(-0.5))

    def test_reset_marks_the_jump(self):
        np.testing.assert_array_equal(_walk().reset_at, [-1, 1, 1, -1])


class TestEta:
    def test_displaced_quote_survives_with_eta(self):
        _assert_law(_walk(eta=0.6).law(3), 2, 0.3, 0.5)

    def test_shift_into_the_spread_keeps_the_rest(self):
        post = initial_posterior(L1State(a=3, b=0, q=4, r=0), 4)
        post = apply_jump(post, EventCode(EventKind.SAL, z=1, shift=1, p=3), L1State(a=2, b=0, q=1, r=0), eta=0.5)
        _assert_law(post.law(3), 3, 1.0, 0.0)


class TestRecursion:
    def test_dt_must_be_positive(self):
        post = initial_posterior(L1State(a=2, b=0, q=1, r=0), 4)
        with pytest.raises(DomainError):
            decay_posterior(post, 0.0, _params())

    def test_ask_move_up_changes_no_statistics(self):
        post = initial_posterior(L1State(a=2, b=0, q=1, r=0), 4)
        after = apply_jump(post, None, L1State(a=4, b=0, q=1, r=0))
        np.testing.assert_array_equal(after.nu, post.nu)
        assert after.jumps == 1

    def test_decay_matches_immigration_death_mean(self):
        post = initial_posterior(L1State(a=1, b=0, q=1, r=0), 3, iota=[0.0, 2.0, 0.0])
        decayed = decay_posterior(post, 0.7, ModelParams.basic(0.5, 2.0))
        survival = math.exp(-2.0 * 0.7)
        assert decayed.law(2).mu == pytest.approx(2.0 * survival + 0.25 * (1 - survival))

    def test_snapshot_is_read_only(self):
        post = initial_posterior(L1State(a=2, b=0, q=1, r=0), 4)
        with pytest.raises(ValueError):
            post.eps[0] = 1.0

    def test_tick_outside_grid(self):
        with pytest.raises(DomainError):
            initial_posterior(L1State(a=2, b=0, q=1, r=0), 4).law(5)
