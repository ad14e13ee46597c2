"""The Bi o Po family: a binomial thinning of nu orders plus an independent Poisson count.

A tick's depth is always of this form given the L1 history, so every jump
density is assembled from the helpers here. Point evaluations work in log
space; pmf vectors are built by truncated convolution, which is exact on
the indices it returns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binom, poisson

from app.config import DENSITY_TAIL_TOL
from app.errors import DomainError


def _check(nu: int, varpi: float, mu: float) -> None:
    if nu < 0 or int(nu) != nu:
        raise DomainError(f"nu must be a nonnegative integer, got {nu}")
    if not 0.0 <= varpi <= 1.0:
        raise DomainError(f"varpi must lie in [0, 1], got {varpi}")
    if not mu >= 0.0 or not math.isfinite(mu):
        raise DomainError(f"mu must be finite and nonnegative, got {mu}")


def bipo_logpmf(nu: int, varpi: float, mu: float, q: int) -> float:
    """log P[Bi(nu, varpi) + Po(mu) = q]."""
    _check(nu, varpi, mu)
    if q < 0:
        return -np.inf
    if mu == 0.0:
        return float(binom.logpmf(q, nu, varpi)) if q <= nu else -np.inf
    j = np.arange(0, min(int(nu), int(q)) + 1)
    terms = binom.logpmf(j, nu, varpi) + poisson.logpmf(q - j, mu)
    return float(logsumexp(terms))


def bipo_pmf(nu: int, varpi: float, mu: float, q: int) -> float:
    return math.exp(bipo_logpmf(nu, varpi, mu, q))


def log_zero_probability(nu, varpi, mu):
    """log P[Bi(nu, varpi) + Po(mu) = 0], vectorised over ticks."""
    nu = np.asarray(nu, dtype=float)
    varpi = np.asarray(varpi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        binomial_part = np.where(nu > 0, nu * np.log1p(-varpi), 0.0)
    return binomial_part - mu


def poisson_pmf_vector(mu: float, kmax: int) -> np.ndarray:
    if mu == 0.0:
        out = np.zeros(kmax + 1)
        out[0] = 1.0
        return out
    return poisson.pmf(np.arange(kmax + 1), mu)


def binomial_pmf_vector(nu: int, varpi: float, kmax: int) -> np.ndarray:
    out = np.zeros(kmax + 1)
    upper = min(int(nu), kmax)
    out[: upper + 1] = binom.pmf(np.arange(upper + 1), nu, varpi)
    return out


def convolve_truncated(left: np.ndarray, right: np.ndarray, kmax: int) -> np.ndarray:
    """Law of the sum of two independent counts, kept on 0..kmax."""
    return np.convolve(left[: kmax + 1], right[: kmax + 1])[: kmax + 1]


def bipo_pmf_vector(nu: int, varpi: float, mu: float, kmax: int) -> np.ndarray:
    """P[Bi(nu, varpi) + Po(mu) = k] for k = 0..kmax."""
    _check(nu, varpi, mu)
    return convolve_truncated(binomial_pmf_vector(nu, varpi, kmax), poisson_pmf_vector(mu, kmax), kmax)


def poisson_binomial_sum_pmf(nus, varpis, mu: float, kmax: int) -> np.ndarray:
    """Law on 0..kmax of sum_k Bi(nus[k], varpis[k]) + Po(mu), all terms independent."""
    pmf = poisson_pmf_vector(float(mu), kmax)
    for nu, varpi in zip(nus, varpis):
        if nu > 0 and varpi > 0:
            pmf = convolve_truncated(pmf, binomial_pmf_vector(int(nu), float(varpi), kmax), kmax)
    return pmf


def support_bound(nu: int, mu: float, tol: float = DENSITY_TAIL_TOL) -> int:
    """Count k with P[Bi(nu, .) + Po(mu) > k] < tol for every thinning probability."""
    tail = int(poisson.isf(tol, mu)) if mu > 0 else 0
    return int(nu) + tail + 1


def immigration_death_pmf(kappa: float, rho: float, initial: int, t: float, kmax: int) -> np.ndarray:
    """Depth law at time t of a tick with arrival rate kappa and per-order death rate rho.

    Po((kappa/rho)(1 - e^{-rho t})) o Bi(initial, e^{-rho t}); rho = 0 gives Po(kappa t) + initial.
    """
    if t < 0 or kappa < 0 or rho < 0:
        raise DomainError("kappa, rho and t must be nonnegative")
    if rho == 0.0:
        return bipo_pmf_vector(initial, 1.0, kappa * t, kmax)
    survival = math.exp(-rho * t)
    return bipo_pmf_vector(initial, survival, (kappa / rho) * -math.expm1(-rho * t), kmax)


@dataclass(frozen=True)
class BiPoLaw:
    """Bi(nu, varpi) o Po(mu); a point mass at q is BiPoLaw(q, 1, 0)."""

    nu: int
    varpi: float
    mu: float

    def __post_init__(self):
        _check(self.nu, self.varpi, self.mu)

    @classmethod
    def point(cls, q: int) -> "BiPoLaw":
        return cls(int(q), 1.0, 0.0)

    @property
    def is_point(self) -> bool:
        return self.mu == 0.0 and (self.varpi == 1.0 or self.nu == 0)

    def pmf(self, q: int) -> float:
        return bipo_pmf(self.nu, self.varpi, self.mu, q)

    def logpmf(self, q: int) -> float:
        return bipo_logpmf(self.nu, self.varpi, self.mu, q)

    def pmf_vector(self, kmax: int | None = None) -> np.ndarray:
        if kmax is None:
            kmax = support_bound(self.nu, self.mu)
        return bipo_pmf_vector(self.nu, self.varpi, self.mu, kmax)

    def mean(self) -> float:
        return self.nu * self.varpi + self.mu


def compose_thinning(law: BiPoLaw, zeta: float, delta: float) -> BiPoLaw:
    """Law of A when B ~ law and A | B ~ Po(zeta) o Bi(B, delta).

    Thinning commutes with the composition: A ~ Po(zeta + delta mu) o Bi(nu, delta varpi).
    """
    if not 0.0 <= delta <= 1.0 or zeta < 0:
        raise DomainError("delta must lie in [0, 1] and zeta must be nonnegative")
    return BiPoLaw(law.nu, law.varpi * delta, zeta + delta * law.mu)
