"""Unit tests for P_m and the moment-cap filter."""

import math

import pytest

from app.density.jumps import JumpContext, conditional_mean_jump
from app.density.posterior import apply_jump, decay_posterior, initial_posterior
from app.errors import DomainError, InsufficientDataError
from app.estimation.prediction import moment_cap_filter, prediction_power, prediction_power_from
from app.estimation.sample import AskEpoch, Mode, Observation, Sample, SessionSkeleton
from app.models.domain import EventCode, EventKind, L1State
from app.models.params import ModelParams

_PARAMS = ModelParams.basic(0.8, 1.2)


def _sample(n_out: int = 1) -> Sample:
    # Ask at 2 for 0.5s, up to 4 for 1s, up to 5.
    skeleton = SessionSkeleton("s0", [AskEpoch(2, 0.5, 1), AskEpoch(4, 1.0, 1), AskEpoch(5, 0.3, 1)])
    observations = [
        Observation(0, 0, L1State(a=2, b=1, q=1, r=1), a_new=4, q_new=1),
        Observation(0, 1, L1State(a=4, b=1, q=1, r=1), a_new=5, q_new=1),
    ]
    return Sample(n=8, mode=Mode.ZI, sessions=(skeleton,), observations=observations, n_in=1, n_out=n_out)


class TestPredictionPowerFrom:
    def test_half_the_naive_error(self):
        p_m, naive, model = prediction_power_from([1, 3], [1.5, 2.5], 2.0)
        assert (p_m, naive, model) == (0.5, 2.0, 1.0)

    def test_perfect_benchmark_is_degenerate(self):
        p_m, naive, _ = prediction_power_from([1, 1, 1], [1.2, 1.1, 1.0], 1.0)
        assert p_m == -math.inf
        assert naive == 0.0

    def test_worse_than_naive_is_negative(self):
        assert prediction_power_from([1, 3], [3, 1], 2.0)[0] == -1.0


class TestPredictionPower:
    def test_uses_the_conditional_mean(self):
        sample = _sample()
        report = prediction_power(sample, _PARAMS, threads=1)
        # the out-of-sample jump: ask at 4 after 1.5s with the ask first at 2 then 4
        post = decay_posterior(initial_posterior(L1State(a=2, b=1, q=1, r=1), 8), 0.5, _PARAMS)
        post = decay_posterior(apply_jump(post, None, L1State(a=4, b=1, q=1, r=1)), 1.0, _PARAMS)
        predicted = conditional_mean_jump(JumpContext(EventCode(EventKind.CA, p=4), post))
        assert report.benchmark_mean == 2.0
        assert report.model_mae == pytest.approx(abs(1 - predicted))
        assert report.p_m == pytest.approx(1 - abs(1 - predicted))
        assert report.n_out == 1

    def test_full_sample_benchmark(self):
        report = prediction_power(_sample(), _PARAMS, full_sample_mean=True, threads=1)
        assert report.benchmark_mean == 1.5

    def test_needs_out_of_sample_jumps(self):
        with pytest.raises(InsufficientDataError):
            prediction_power(_sample(n_out=0), _PARAMS)


class TestMomentCap:
    def test_order_must_exceed_two(self):
        with pytest.raises(DomainError):
            moment_cap_filter(_sample(), 2, 10.0, _PARAMS)

    def test_infinite_cap_keeps_everything(self):
        sample = _sample()
        assert moment_cap_filter(sample, 3, math.inf, _PARAMS) is sample

    def test_tiny_cap_drops_everything(self):
        filtered = moment_cap_filter(_sample(), 3, 0.5, _PARAMS)
        assert filtered.observations == ()
        assert filtered.dropped == 2
        assert (filtered.n_in, filtered.n_out) == (0, 0)
