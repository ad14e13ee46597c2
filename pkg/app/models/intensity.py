"""Intensity specification of a ZI book.

An IntensitySpec bundles the six intensity functions of the event table
(theta, vartheta for market orders; kappa, lambda for limit orders; rho,
sigma per-order cancellation rates) plus the Poisson means iota of the
initial book beyond the quotes. Rates are per second.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from app.errors import IntensityValidationError
from app.models.domain import TickGrid
from app.models.params import ModelParams, distance_intensity

logger = logging.getLogger(__name__)

MarketRate = Callable[[int, int], float]
LimitRate = Callable[[int, int, int], float]


@dataclass(frozen=True)
class RateTable:
    """All intensities evaluated at one (a, b); vectors are indexed by tick p-1."""

    theta: float
    vartheta: float
    kappa: np.ndarray
    lam: np.ndarray
    rho: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class ErgodicityBounds:
    """Constants of the dominating birth-death chain on the total number of orders."""

    arrival_rate: float
    min_market_rate: float
    min_cancel_rate: float

    @property
    def holds(self) -> bool:
        return self.min_market_rate > 0 and self.min_cancel_rate > 0

    def death_rate(self, i: int) -> float:
        return self.min_market_rate + i * self.min_cancel_rate


@dataclass(frozen=True)
class IntensitySpec:
    theta: MarketRate
    vartheta: MarketRate
    kappa: LimitRate
    lam: LimitRate
    rho: LimitRate
    sigma: LimitRate
    iota: tuple[float, ...] = field(default_factory=tuple)
    iota_bid: tuple[float, ...] = field(default_factory=tuple)
    name: str = "custom"

    def iota_vector(self, n: int) -> np.ndarray:
        return _padded(self.iota, n)

    def iota_bid_vector(self, n: int) -> np.ndarray:
        return _padded(self.iota_bid, n)

    def rate_table(self, a: int, b: int, n: int) -> RateTable:
        ticks = range(1, n + 1)
        return RateTable(
            theta=float(self.theta(a, b)),
            vartheta=float(self.vartheta(a, b)),
            kappa=np.array([self.kappa(a, b, p) for p in ticks], dtype=float),
            lam=np.array([self.lam(a, b, p) for p in ticks], dtype=float),
            rho=np.array([self.rho(a, b, p) for p in ticks], dtype=float),
            sigma=np.array([self.sigma(a, b, p) for p in ticks], dtype=float),
        )

    def quote_pairs(self, grid: TickGrid):
        """Every (a, b) the book can show: b < a, either side possibly empty."""
        n = grid.n
        for a in range(1, n + 2):
            for b in range(0, min(a, n + 1)):
                yield a, b

    def validate(self, grid: TickGrid) -> "ErgodicityBounds":
        """Exhaustive check that every rate is finite and nonnegative on the grid.

        Returns the domination constants; a warning is issued when the
        ergodicity preconditions (all market and cancellation rates
        positive) fail.
        """
        bounds = self.ergodicity_bounds(grid)
        if not bounds.holds:
            message = (
                f"{self.name}: ergodicity preconditions fail "
                f"(min market={bounds.min_market_rate:g}, min cancel={bounds.min_cancel_rate:g})"
            )
            logger.warning(message)
            warnings.warn(message, UserWarning, stacklevel=2)
        return bounds

    def ergodicity_bounds(self, grid: TickGrid) -> "ErgodicityBounds":
        """Constants of the birth-death chain dominating the total order count."""
        n = grid.n
        iota = self.iota_vector(n)
        iota_bid = self.iota_bid_vector(n)
        for label, vec in (("iota", iota), ("iota_bid", iota_bid)):
            if not np.all(np.isfinite(vec)) or (vec < 0).any():
                raise IntensityValidationError(f"{self.name}: {label} must be finite and nonnegative")

        max_kappa = np.zeros(n)
        max_lam = np.zeros(n)
        min_theta = min_vartheta = min_cancel = np.inf
        for a, b in self.quote_pairs(grid):
            table = self.rate_table(a, b, n)
            for label, value in (
                ("theta", table.theta),
                ("vartheta", table.vartheta),
                ("kappa", table.kappa),
                ("lambda", table.lam),
                ("rho", table.rho),
                ("sigma", table.sigma),
            ):
                value = np.asarray(value)
                if not np.all(np.isfinite(value)) or (value < 0).any():
                    raise IntensityValidationError(
                        f"{self.name}: {label} is negative or non-finite at a={a}, b={b}"
                    )
            max_kappa = np.maximum(max_kappa, table.kappa)
            max_lam = np.maximum(max_lam, table.lam)
            min_theta = min(min_theta, table.theta)
            min_vartheta = min(min_vartheta, table.vartheta)
            min_cancel = min(min_cancel, float(table.rho.min()), float(table.sigma.min()))

        return ErgodicityBounds(
            arrival_rate=float(max_kappa.sum() + max_lam.sum()),
            min_market_rate=float(min_theta + min_vartheta) if min(min_theta, min_vartheta) > 0 else 0.0,
            min_cancel_rate=float(min_cancel),
        )


def _padded(values: tuple[float, ...], n: int) -> np.ndarray:
    out = np.zeros(n, dtype=float)
    values = np.asarray(values, dtype=float)
    out[: min(n, values.size)] = values[:n]
    return out


@dataclass(frozen=True)
class SpreadRates:
    """Intensities that the inside-the-book parameters leave open.

    theta is the market-order rate on each side, kappa_spread the rate of
    limit orders placed at or inside the quotes (per tick) and rho_quote
    the per-order cancellation rate at the quote itself.
    """

    theta: float = 1.0
    kappa_spread: float = 0.5
    rho_quote: float = 1.0


def intensity_from_params(params: ModelParams, spread: SpreadRates | None = None) -> IntensitySpec:
    """Distance-to-own-quote book driven by the inside-the-book parameters.

    Sell side: kappa(a, b, p) = kappa(p - a) for p > a, kappa_spread for
    b < p <= a; rho(a, b, p) = rho(p - a) for p > a, rho_quote at the ask.
    The buy side mirrors it around the bid.
    """
    spread = spread or SpreadRates()

    def kappa(a, b, p):
        if p > a:
            return distance_intensity(params, p - a)[0]
        return spread.kappa_spread if p > b else 0.0

    def rho(a, b, p):
        if p > a:
            return distance_intensity(params, p - a)[1]
        return spread.rho_quote

    def lam(a, b, p):
        if p < b:
            return distance_intensity(params, b - p)[0]
        return spread.kappa_spread if p < a else 0.0

    def sigma(a, b, p):
        if p < b:
            return distance_intensity(params, b - p)[1]
        return spread.rho_quote

    return IntensitySpec(
        theta=lambda a, b: spread.theta,
        vartheta=lambda a, b: spread.theta,
        kappa=kappa,
        lam=lam,
        rho=rho,
        sigma=sigma,
        name=f"params-{params.variant.value}",
    )
