"""Simulated books against the closed-form laws of the density layer."""

from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import ks_2samp

from app.data_io.sample_builder import build_sample, sessions_from_history
from app.density.bipo import immigration_death_pmf
from app.density.jumps import JumpContext, jump_law, price_impact
from app.density.posterior import decay_posterior, initial_posterior
from app.estimation.likelihood import log_likelihood, observation_contexts
from app.estimation.sample import EventClass, Mode
from app.models.domain import BookState, EventCode, EventKind, L1State, TickGrid
from app.models.intensity import IntensitySpec
from app.models.params import ModelParams
from app.presets.book_presets import smith
from app.simulator.engine import SimConfig, sample_initial_book, simulate, simulate_many, step
from app.simulator.events import DiscreteLaw, GziConfig, best_ask, execute_market_order
from app.utils.rng import make_rng


def _frozen_ask_spec(kappa: float, rho: float, a: int, iota=()) -> IntensitySpec:
    # no market orders and nothing at or below tick a: the ask never moves
    def above(rate):
        return lambda _a, _b, p: rate if p > a else 0.0

    def none(_a, _b, _p):
        return 0.0

    return IntensitySpec(
        theta=lambda _a, _b: 0.0,
        vartheta=lambda _a, _b: 0.0,
        kappa=above(kappa),
        lam=none,
        rho=above(rho),
        sigma=none,
        iota=tuple(iota),
        name="frozen-ask",
    )


def _evolve(book: BookState, spec: IntensitySpec, grid: TickGrid, t: float, rng) -> BookState:
    clock = 0.0
    while True:
        dt, _, following = step(book, spec, grid, rng)
        clock += dt
        if clock > t:
            return book
        book = following


def _histogram(values, size: int) -> np.ndarray:
    counts = np.bincount(np.asarray(values, dtype=int), minlength=size).astype(float)
    return counts / counts.sum()


def _tv(left: np.ndarray, right: np.ndarray) -> float:
    size = max(left.size, right.size)
    return 0.5 * float(np.abs(np.pad(left, (0, size - left.size)) - np.pad(right, (0, size - right.size))).sum())


def _law_array(law, size: int) -> np.ndarray:
    out = np.zeros(size)
    out[law.magnitudes] += law.probs
    return out


def _smith_sample(events: int, seed: int, gzi: GziConfig | None = None, n: int = 10):
    grid = TickGrid(n=n)
    spec = smith(theta_s=1.0, kappa_s=0.5, rho_s=0.3)
    result = simulate(SimConfig(spec=spec, grid=grid, gzi=gzi, max_events=events, seed=seed, keep_books=False))
    mode = Mode.ZI if gzi is None else Mode.GZI
    sample, _ = build_sample(sessions_from_history(result.history, grid), grid, mode, threads=1)
    return sample


def _magnitude_distance(sample, params: ModelParams) -> tuple[float, int]:
    depletions = [obs for obs in sample.observations if obs.event_class is EventClass.DEPLETION]
    contexts = observation_contexts(sample, params, depletions, threads=1)
    size = sample.n + 2
    predicted = np.mean([_law_array(jump_law(ctx), size) for ctx in contexts], axis=0)
    observed = _histogram([obs.magnitude for obs in depletions], size)
    return _tv(observed, predicted), len(depletions)


class TestFrozenAsk:
    KAPPA, RHO = 1.0, 0.7

    def _start(self) -> tuple[BookState, TickGrid]:
        # a = 3 (q = 1), two orders one tick behind it, b = 2
        return BookState(np.array([0, 0, 1, 2, 0, 0]), np.array([0, 1, 0, 0, 0, 0])), TickGrid(n=6)

    def _depth_laws_hold(self, t: float, paths: int, bound: float):
        book, grid = self._start()
        spec = _frozen_ask_spec(self.KAPPA, self.RHO, a=3)
        rng = make_rng(31)
        finals = np.array([_evolve(book, spec, grid, t, rng).asks for _ in range(paths)])
        assert (finals[:, 2] == 1).all()
        for tick, initial in ((4, 2), (5, 0)):
            law = immigration_death_pmf(self.KAPPA, self.RHO, initial, t, 20)
            assert _tv(_histogram(finals[:, tick - 1], law.size), law) < bound

    def test_queue_behind_the_ask(self):
        self._depth_laws_hold(1.0, 3000, 0.05)

    @pytest.mark.slow
    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_queue_behind_the_ask_full_replication(self, t):
        self._depth_laws_hold(t, 50_000, 0.015)


class TestPriceImpact:
    KAPPA, RHO, IOTA, T, N = 0.6, 0.5, 0.4, 0.8, 8

    def _impact_matches(self, paths: int, bound: float):
        grid = TickGrid(n=self.N)
        spec = _frozen_ask_spec(self.KAPPA, self.RHO, a=3, iota=(self.IOTA,) * self.N)
        rng = make_rng(43)
        books = [_evolve(sample_initial_book(spec, grid, 3, 2, rng), spec, grid, self.T, rng) for _ in range(paths)]
        post = decay_posterior(initial_posterior(L1State(3, 2, 1, 1), self.N, spec.iota_vector(self.N)),
                               self.T, ModelParams.basic(self.KAPPA, self.RHO))
        for z in (1, 3):
            magnitudes = []
            for book in books:
                asks = book.asks.copy()
                execute_market_order(asks, z, from_low=True)
                magnitudes.append(best_ask(asks) - 3)
            law = price_impact(z, JumpContext(EventCode(EventKind.BMO, z=z), post))
            size = self.N + 2
            assert _tv(_histogram(magnitudes, size), _law_array(law, size)) < bound

    def test_market_order_impact(self):
        self._impact_matches(3000, 0.05)

    @pytest.mark.slow
    def test_market_order_impact_full_replication(self):
        self._impact_matches(40_000, 0.015)


class TestJumpMagnitudes:
    def test_zi_jumps_follow_the_conditional_law(self):
        tv, count = _magnitude_distance(_smith_sample(20_000, seed=5), ModelParams.basic(0.5, 0.3))
        assert count > 500
        assert tv < 0.07

    @pytest.mark.slow
    def test_zi_jumps_follow_the_conditional_law_long_run(self):
        tv, count = _magnitude_distance(_smith_sample(100_000, seed=5), ModelParams.basic(0.5, 0.3))
        assert count > 4000
        assert tv < 0.03

    @pytest.mark.slow
    def test_gzi_jumps_follow_the_conditional_law(self):
        gzi = GziConfig(eta=0.6, mo_volume_law=DiscreteLaw((1, 2), (0.5, 0.5)))
        sample = _smith_sample(100_000, seed=5, gzi=gzi)
        tv, count = _magnitude_distance(sample, ModelParams.basic(0.5, 0.3, eta=0.6))
        assert count > 4000
        assert tv < 0.03
        lls = {eta: log_likelihood(sample, ModelParams.basic(0.5, 0.3, eta=eta), Mode.GZI, threads=1)
               for eta in (0.4, 0.6, 0.8, 1.0)}
        assert max(lls, key=lls.get) == 0.6


class TestUnitVolumeGzi:
    def test_matches_the_zi_engine(self):
        base = SimConfig(spec=smith(theta_s=1.0, kappa_s=0.5, rho_s=0.3), grid=TickGrid(n=10),
                         max_events=150, keep_books=False)
        zi = simulate_many(replace(base, seed=101), paths=300, threads=1)
        gzi = simulate_many(replace(base, seed=202, gzi=GziConfig()), paths=300, threads=1)
        assert ks_2samp([r.elapsed for r in zi], [r.elapsed for r in gzi]).pvalue > 1e-3
        assert ks_2samp([best_ask(r.final_book.asks) for r in zi],
                        [best_ask(r.final_book.asks) for r in gzi]).pvalue > 1e-3
