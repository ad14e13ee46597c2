"""Unit tests for likelihood-ratio tests and the selection ladder."""

import math
import warnings

import numpy as np
import pytest

import app.estimation.selection as selection
from app.data_io.sample_builder import build_sample, sessions_from_history
from app.errors import BudgetExhaustedError, NonNestedModelsError
from app.estimation.fitting import FitResult, OptBudget
from app.estimation.sample import Mode, Observation, Sample
from app.estimation.selection import StopReason, lr_test, select_model
from app.models.domain import L1State, TickGrid
from app.models.intensity import SpreadRates, intensity_from_params
from app.models.params import ModelParams, Variant
from app.simulator.engine import SimConfig, simulate


def _fit(variant: Variant, log_lik: float, pvalue: float = 0.001, mode: Mode = Mode.ZI) -> FitResult:
    params = ModelParams.basic(0.5, 1.0)
    if variant is not Variant.S:
        params = params.extended_to(variant)
    k = params.n_params
    return FitResult(
        variant=variant, mode=mode, params=params, log_lik=log_lik,
        std_errors=np.full(k, 0.1), param_pvalues=np.full(k, pvalue),
        converged=True, iterations=5, wall_time=0.1,
    )


def _sample(count: int = 50) -> Sample:
    prior = L1State(a=2, b=1, q=1, r=1)
    obs = [Observation(0, i, prior, 3, 1) for i in range(count)]
    return Sample.from_observations(6, Mode.ZI, [], obs)


def _scripted(log_liks: dict, pvalues: dict | None = None, calls: list | None = None):
    pvalues = pvalues or {}

    def fake_fit(sample, variant, mode=None, init=None, budget=None, fix_eta=False, threads=1, **_):
        if calls is not None:
            calls.append((variant, sample.n_in))
        if variant not in log_liks:
            raise BudgetExhaustedError("no time left")
        return _fit(variant, log_liks[variant], pvalues.get(variant, 0.001))

    return fake_fit


class TestLikelihoodRatio:
    def test_chi_square_tail(self):
        p = lr_test(_fit(Variant.S, -100.0), _fit(Variant.T1, -100.0 + 5.991464547 / 2))
        assert p == pytest.approx(0.05, rel=1e-6)

    def test_explicit_degrees_of_freedom(self):
        p = lr_test(_fit(Variant.S, -10.0), _fit(Variant.T2, -9.0), df=1)
        assert p == pytest.approx(0.1572992, rel=1e-5)

    def test_order_matters(self):
        with pytest.raises(NonNestedModelsError):
            lr_test(_fit(Variant.T1, -10.0), _fit(Variant.S, -9.0))

    def test_modes_must_agree(self):
        with pytest.raises(NonNestedModelsError):
            lr_test(_fit(Variant.S, -10.0), _fit(Variant.T1, -9.0, mode=Mode.GZI))

    def test_negative_statistic_is_clipped(self):
        with pytest.warns(UserWarning, match="Negative likelihood-ratio"):
            assert lr_test(_fit(Variant.S, -10.0), _fit(Variant.T1, -10.5)) == 1.0

    def test_equal_fits(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert lr_test(_fit(Variant.S, -10.0), _fit(Variant.T1, -10.0)) == 1.0


class TestLadder:
    def test_stops_when_the_next_variant_adds_nothing(self, monkeypatch):
        monkeypatch.setattr(selection, "fit", _scripted({Variant.S: -100.0, Variant.T1: -99.5}))
        outcome = select_model(_sample(), budget=OptBudget(seconds=60.0))
        assert outcome.chosen is Variant.S
        assert outcome.stopped_reason is StopReason.LR_INSIGNIFICANT
        assert [e.variant for e in outcome.ladder] == [Variant.S, Variant.T1]
        assert outcome.ladder[0].lr_pvalue == pytest.approx(math.exp(-0.5))

    def test_climbs_to_the_top(self, monkeypatch):
        log_liks = {Variant.S: -100.0, Variant.T1: -80.0, Variant.T2: -60.0, Variant.T3: -40.0}
        monkeypatch.setattr(selection, "fit", _scripted(log_liks))
        outcome = select_model(_sample(), budget=OptBudget(seconds=60.0))
        assert outcome.chosen is Variant.T3
        assert outcome.stopped_reason is StopReason.ALL_TRIED

    def test_insignificant_parameter_keeps_climbing(self, monkeypatch):
        log_liks = {Variant.S: -100.0, Variant.T1: -99.9, Variant.T2: -80.0, Variant.T3: -79.9}
        fake = _scripted(log_liks, pvalues={Variant.S: 0.2})
        monkeypatch.setattr(selection, "fit", fake)
        outcome = select_model(_sample(), budget=OptBudget(seconds=60.0))
        assert outcome.chosen is Variant.T2
        assert outcome.fit_for(Variant.T3) is not None

    def test_timeout_retries_on_reduced_sample(self, monkeypatch):
        calls = []
        monkeypatch.setattr(selection, "fit", _scripted({}, calls=calls))
        outcome = select_model(_sample(1500), budget=OptBudget(seconds=60.0))
        assert outcome.chosen is None
        assert outcome.stopped_reason is StopReason.TIMEOUT
        assert outcome.reduced
        assert [n for _, n in calls] == [1363, 1000]

    def test_no_retry_on_small_samples(self, monkeypatch):
        monkeypatch.setattr(selection, "fit", _scripted({}))
        outcome = select_model(_sample(), budget=OptBudget(seconds=60.0))
        assert not outcome.reduced
        assert outcome.ladder == []

    def test_timeout_keeps_the_last_accepted_variant(self, monkeypatch):
        monkeypatch.setattr(selection, "fit", _scripted({Variant.S: -100.0, Variant.T1: -80.0}))
        outcome = select_model(_sample(), budget=OptBudget(seconds=60.0))
        assert outcome.chosen is Variant.T1
        assert outcome.stopped_reason is StopReason.TIMEOUT
        assert not outcome.reduced

    def test_timeout_right_after_a_significant_basic_model(self, monkeypatch):
        monkeypatch.setattr(selection, "fit", _scripted({Variant.S: -100.0}))
        outcome = select_model(_sample(), budget=OptBudget(seconds=60.0))
        assert outcome.chosen is Variant.S
        assert outcome.stopped_reason is StopReason.TIMEOUT

    def test_timeout_after_an_insignificant_basic_model(self, monkeypatch):
        monkeypatch.setattr(selection, "fit", _scripted({Variant.S: -100.0}, pvalues={Variant.S: 0.2}))
        outcome = select_model(_sample(), budget=OptBudget(seconds=60.0))
        assert outcome.chosen is None
        assert outcome.stopped_reason is StopReason.TIMEOUT


class TestSelectionSize:
    @pytest.mark.slow
    def test_basic_model_kept_on_basic_data(self):
        # S is kept unless T1 wins a 5% test or S loses significance
        true = ModelParams.basic(0.5, 1.0)
        grid = TickGrid(n=12)
        spec = intensity_from_params(true, SpreadRates(theta=1.0, kappa_spread=0.5, rho_quote=1.0))
        kept = 0
        for seed in range(20):
            result = simulate(SimConfig(spec=spec, grid=grid, max_events=15_000, seed=100 + seed, keep_books=False))
            sample, _ = build_sample(sessions_from_history(result.history, grid), grid, Mode.ZI, threads=1)
            outcome = select_model(sample, budget=OptBudget(seconds=600.0), threads=1)
            kept += outcome.chosen is Variant.S
        assert kept >= 15
