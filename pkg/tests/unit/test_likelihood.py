"""Unit tests for the session sweep against the posterior recursion step by step."""

import math

import numpy as np
import pytest

from app.density.jumps import depletion_log_density, gzi_log_density
from app.density.posterior import apply_jump, decay_posterior, initial_posterior
from app.estimation.likelihood import log_likelihood, observation_contexts, observation_log_densities
from app.estimation.sample import AskEpoch, EventClass, Mode, Observation, Sample, SessionSkeleton
from app.models.domain import EventKind, L1State
from app.models.params import ModelParams, Variant

# Ask path on five ticks: 2 for 0.3s, up to 4 for 0.4s, down to 1 for 0.5s, up to 3.
_EPOCHS = [AskEpoch(2, 0.3, 1), AskEpoch(4, 0.4, 2), AskEpoch(1, 0.5, 1), AskEpoch(3, 0.2, 2)]


def _params(eta=None) -> ModelParams:
    return ModelParams(Variant.T2, (0.4, 0.3), (1.0, 0.8), alpha_kappa=-0.5, alpha_rho=-1.0, eta=eta)


def _sample(mode=Mode.ZI, s=(0, 0)) -> Sample:
    observations = [
        Observation(0, 0, L1State(a=2, b=0, q=1, r=0), a_new=4, q_new=1, s=s[0]),
        Observation(0, 1, L1State(a=4, b=0, q=2, r=0), a_new=1, q_new=1, event_class=EventClass.INSERTION),
        Observation(0, 2, L1State(a=1, b=0, q=1, r=0), a_new=3, q_new=2, s=s[1]),
    ]
    return Sample(n=5, mode=mode, sessions=(SessionSkeleton("s0", _EPOCHS),), observations=observations,
                  n_in=3, n_out=0)


def _direct(params, eta=None):
    """Posterior just before each depletion, built with the public recursion."""
    first = decay_posterior(initial_posterior(L1State(a=2, b=0, q=1, r=0), 5), 0.3, params)
    post = apply_jump(first, None, L1State(a=4, b=0, q=2, r=0), eta)
    post = decay_posterior(post, 0.4, params)
    post = apply_jump(post, None, L1State(a=1, b=0, q=1, r=0), eta)
    second = decay_posterior(post, 0.5, params)
    return first, second


class TestSweep:
    def test_zi_matches_recursion(self):
        params = _params()
        first, second = _direct(params)
        logs = observation_log_densities(_sample(), params, threads=1)
        assert logs[0] == pytest.approx(depletion_log_density(4, 1, first))
        assert logs[1] == 0.0
        assert logs[2] == pytest.approx(depletion_log_density(3, 2, second))

    def test_gzi_matches_recursion(self):
        params = _params(eta=0.7)
        first, second = _direct(params, eta=0.7)
        logs = observation_log_densities(_sample(Mode.GZI, s=(0, 2)), params, threads=1)
        assert logs[0] == pytest.approx(depletion_log_density(4, 1, first))
        assert logs[2] == pytest.approx(gzi_log_density(3, 2, second, 2))

    def test_log_likelihood_is_the_sum(self):
        logs = observation_log_densities(_sample(), _params())
        assert log_likelihood(_sample(), _params()) == pytest.approx(float(logs.sum()))

    def test_impossible_observation(self):
        sample = _sample()
        bad = Observation(0, 2, L1State(a=1, b=0, q=1, r=0), a_new=3, q_new=0)
        sample = Sample(n=5, mode=Mode.ZI, sessions=sample.sessions, observations=[bad], n_in=1, n_out=0)
        assert log_likelihood(sample, _params()) == -math.inf

    def test_gzi_needs_eta(self):
        with pytest.raises(ValueError):
            observation_log_densities(_sample(Mode.GZI), _params())

    def test_contexts_carry_the_trade(self):
        sample = _sample(Mode.GZI, s=(0, 2))
        contexts = observation_contexts(sample, _params(eta=0.7), [sample.observations[2]])
        assert contexts[0].event.kind is EventKind.BMO
        assert contexts[0].event.z == 3
        assert contexts[0].prior == L1State(a=1, b=0, q=1, r=0)

    def test_gzi_without_shifts_reduces_to_zi(self):
        zi = log_likelihood(_sample(), _params())
        assert log_likelihood(_sample(Mode.GZI), _params(eta=1.0)) == pytest.approx(zi, abs=1e-12)


class TestSmoothness:
    def _loglik(self, theta) -> float:
        return log_likelihood(_sample(), ModelParams.from_natural(Variant.T2, np.asarray(theta), gzi=False))

    def test_two_stencils_agree(self):
        theta = _params().natural_vector()
        for i in range(theta.size):
            h = 1e-4 * max(1.0, abs(theta[i]))
            e = np.zeros_like(theta)
            e[i] = h
            central = (self._loglik(theta + e) - self._loglik(theta - e)) / (2 * h)
            five_point = (-self._loglik(theta + 2 * e) + 8 * self._loglik(theta + e)
                          - 8 * self._loglik(theta - e) + self._loglik(theta - 2 * e)) / (12 * h)
            assert central == pytest.approx(five_point, rel=1e-4, abs=1e-8)
