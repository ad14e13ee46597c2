"""Unit tests for the S/T1/T2/T3 parameter families and their reparameterisation."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from app.errors import DomainError
from app.models.params import (
    VARIANT_LADDER,
    ModelParams,
    ParameterMap,
    Variant,
    distance_intensity,
    distance_rates,
    from_unconstrained,
    to_unconstrained,
    unconstrained_jacobian,
)


def _t2(eta=None) -> ModelParams:
    return ModelParams(Variant.T2, (0.4, 0.3), (1.0, 0.8), alpha_kappa=-0.5, alpha_rho=-1.0, eta=eta)


class TestVariant:
    def test_parameter_counts(self):
        assert [v.n_params for v in VARIANT_LADDER] == [2, 4, 6, 8]

    def test_levels(self):
        assert Variant.S.levels == 1
        assert Variant.T3.levels == 3
        assert not Variant.S.has_tail and Variant.T1.has_tail


class TestModelParams:
    def test_basic_names(self):
        assert ModelParams.basic(0.5, 1.0).names() == ["kappa_0", "rho_0"]

    def test_gzi_adds_eta(self):
        params = ModelParams.basic(0.5, 1.0, eta=0.8)
        assert params.is_gzi
        assert params.n_params == 3
        assert params.names()[-1] == "eta"

    def test_tail_names(self):
        assert _t2().names() == ["kappa_0", "kappa_1", "rho_0", "rho_1", "alpha_kappa", "alpha_rho"]

    def test_rejects_nonpositive_levels(self):
        with pytest.raises(DomainError):
            ModelParams.basic(0.0, 1.0)

    def test_rejects_eta_outside_unit_interval(self):
        with pytest.raises(DomainError):
            ModelParams.basic(0.5, 1.0, eta=1.5)

    def test_basic_model_has_no_tail(self):
        with pytest.raises(DomainError):
            ModelParams(Variant.S, (0.5,), (1.0,), alpha_kappa=-1.0, alpha_rho=-1.0)

    def test_natural_round_trip(self):
        params = _t2(eta=0.7)
        again = ModelParams.from_natural(Variant.T2, params.natural_vector(), gzi=True)
        assert again == params

    def test_extended_to_keeps_levels(self):
        bigger = ModelParams.basic(0.5, 1.0).extended_to(Variant.T2)
        assert bigger.kappa_levels == (0.5, 0.5)
        assert bigger.rho_levels == (1.0, 1.0)
        assert bigger.alpha_kappa == -1.0


class TestDistanceRates:
    def test_basic_is_flat(self):
        kappa, rho = distance_rates(ModelParams.basic(0.5, 2.0), 5)
        assert np.isnan(kappa[0]) and np.isnan(rho[0])
        np.testing.assert_allclose(kappa[1:], 0.5)
        np.testing.assert_allclose(rho[1:], 2.0)

    def test_power_tail_beyond_levels(self):
        kappa, rho = distance_rates(_t2(), 5)
        np.testing.assert_allclose(kappa[1:3], [0.4, 0.3])
        # distance 4 is two ticks into the tail: 0.3 * 2 ** -0.5
        assert kappa[4] == pytest.approx(0.3 * 2 ** -0.5)
        assert rho[5] == pytest.approx(0.8 / 3)

    def test_distance_intensity(self):
        assert distance_intensity(_t2(), 1) == pytest.approx((0.4, 1.0))

    def test_distance_must_be_positive(self):
        with pytest.raises(DomainError):
            distance_intensity(_t2(), 0)


class TestUnconstrained:
    @settings(max_examples=50, deadline=None)
    @given(
        kappa=st.floats(1e-3, 1e3),
        rho=st.floats(1e-3, 1e3),
        eta=st.floats(0.01, 0.99),
        mapping=st.sampled_from(list(ParameterMap)),
    )
    def test_round_trip(self, kappa, rho, eta, mapping):
        params = ModelParams.basic(kappa, rho, eta=eta)
        back = from_unconstrained(Variant.S, to_unconstrained(params, mapping), gzi=True, param_map=mapping)
        np.testing.assert_allclose(back.natural_vector(), params.natural_vector(), rtol=1e-9)

    def test_exponents_pass_through(self):
        u = to_unconstrained(_t2())
        assert u[4] == -0.5 and u[5] == -1.0

    def test_jacobian_matches_finite_difference(self):
        params = ModelParams.basic(0.5, 2.0, eta=0.6)
        u = to_unconstrained(params)
        h = 1e-6
        numeric = []
        for i in range(u.size):
            e = np.zeros_like(u)
            e[i] = h
            up = from_unconstrained(Variant.S, u + e, gzi=True).natural_vector()[i]
            down = from_unconstrained(Variant.S, u - e, gzi=True).natural_vector()[i]
            numeric.append((up - down) / (2 * h))
        np.testing.assert_allclose(unconstrained_jacobian(params), numeric, rtol=1e-5)
