"""Parameter families for the inside-the-book intensities.

Intensities depend only on the distance i = p - a >= 1 of a tick from the
ask. The basic model S has constant levels; the power-tail models T_n keep
n free levels and continue with a power tail beyond them:

    kappa(i) = kappa_{i-1}                          for i <= n
    kappa(i) = kappa_{n-1} * (i - n) ** alpha_kappa for i > n

and the same for rho. A GZI fit adds the survival probability eta.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit, logit

from app.errors import DomainError


class Variant(str, Enum):
    S = "S"
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"

    @property
    def levels(self) -> int:
        """Number of free kappa (and rho) levels."""
        return 1 if self is Variant.S else int(self.value[1])

    @property
    def has_tail(self) -> bool:
        return self is not Variant.S

    @property
    def n_params(self) -> int:
        return 2 if self is Variant.S else 2 * self.levels + 2


# Order in which the selection ladder fits the variants.
VARIANT_LADDER: tuple[Variant, ...] = (Variant.S, Variant.T1, Variant.T2, Variant.T3)


class ParameterMap(str, Enum):
    """How positive levels are mapped to the unconstrained optimizer space."""

    LOG = "log"
    SOFTPLUS = "softplus"


@dataclass(frozen=True)
class ModelParams:
    variant: Variant
    kappa_levels: tuple[float, ...]
    rho_levels: tuple[float, ...]
    alpha_kappa: float | None = None
    alpha_rho: float | None = None
    eta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "kappa_levels", tuple(float(k) for k in self.kappa_levels))
        object.__setattr__(self, "rho_levels", tuple(float(r) for r in self.rho_levels))
        levels = self.variant.levels
        if len(self.kappa_levels) != levels or len(self.rho_levels) != levels:
            raise DomainError(f"{self.variant.value} needs {levels} kappa and rho levels")
        if min(self.kappa_levels + self.rho_levels) <= 0:
            raise DomainError("intensity levels must be positive")
        if self.variant.has_tail:
            if self.alpha_kappa is None or self.alpha_rho is None:
                raise DomainError(f"{self.variant.value} needs both tail exponents")
        elif self.alpha_kappa is not None or self.alpha_rho is not None:
            raise DomainError("the basic model S has no tail exponents")
        if self.eta is not None and not 0.0 < self.eta <= 1.0:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")

    @classmethod
    def basic(cls, kappa_0: float, rho_0: float, eta: float | None = None) -> "ModelParams":
        return cls(Variant.S, (kappa_0,), (rho_0,), eta=eta)

    @property
    def is_gzi(self) -> bool:
        return self.eta is not None

    @property
    def n_params(self) -> int:
        return self.variant.n_params + (1 if self.is_gzi else 0)

    def names(self) -> list[str]:
        levels = self.variant.levels
        names = [f"kappa_{j}" for j in range(levels)] + [f"rho_{j}" for j in range(levels)]
        if self.variant.has_tail:
            names += ["alpha_kappa", "alpha_rho"]
        if self.is_gzi:
            names.append("eta")
        return names

    def natural_vector(self) -> np.ndarray:
        values = list(self.kappa_levels) + list(self.rho_levels)
        if self.variant.has_tail:
            values += [self.alpha_kappa, self.alpha_rho]
        if self.is_gzi:
            values.append(self.eta)
        return np.array(values, dtype=float)

    @classmethod
    def from_natural(cls, variant: Variant, values, gzi: bool = False) -> "ModelParams":
        variant = Variant(variant)
        levels = variant.levels
        values = [float(v) for v in values]
        expected = variant.n_params + (1 if gzi else 0)
        if len(values) != expected:
            raise DomainError(f"{variant.value} expects {expected} values, got {len(values)}")
        alpha_kappa = alpha_rho = None
        if variant.has_tail:
            alpha_kappa, alpha_rho = values[2 * levels], values[2 * levels + 1]
        return cls(
            variant=variant,
            kappa_levels=tuple(values[:levels]),
            rho_levels=tuple(values[levels:2 * levels]),
            alpha_kappa=alpha_kappa,
            alpha_rho=alpha_rho,
            eta=values[-1] if gzi else None,
        )

    def extended_to(self, variant: Variant) -> "ModelParams":
        """Start values for a bigger variant: levels carried over, tails at -1."""
        variant = Variant(variant)
        levels = variant.levels
        kappa = list(self.kappa_levels) + [self.kappa_levels[-1]] * levels
        rho = list(self.rho_levels) + [self.rho_levels[-1]] * levels
        tail = variant.has_tail
        return ModelParams(
            variant=variant,
            kappa_levels=tuple(kappa[:levels]),
            rho_levels=tuple(rho[:levels]),
            alpha_kappa=(self.alpha_kappa if self.alpha_kappa is not None else -1.0) if tail else None,
            alpha_rho=(self.alpha_rho if self.alpha_rho is not None else -1.0) if tail else None,
            eta=self.eta,
        )


def _piecewise(levels: tuple[float, ...], alpha: float | None, distances: np.ndarray) -> np.ndarray:
    n_levels = len(levels)
    out = np.empty(distances.shape, dtype=float)
    inside = distances <= n_levels
    out[inside] = np.asarray(levels)[distances[inside] - 1]
    if alpha is None:
        out[~inside] = levels[0]
    else:
        out[~inside] = levels[-1] * (distances[~inside] - n_levels).astype(float) ** alpha
    return out


def distance_intensity(params: ModelParams, i: int) -> tuple[float, float]:
    """(kappa(i), rho(i)) at distance i >= 1 above the ask."""
    if i <= 0:
        raise DomainError(f"distance from the ask must be >= 1, got {i}")
    kappa, rho = distance_rates(params, i)
    return float(kappa[i]), float(rho[i])


def distance_rates(params: ModelParams, max_distance: int) -> tuple[np.ndarray, np.ndarray]:
    """kappa(i), rho(i) for i = 0..max_distance; index 0 is unused and set to nan."""
    distances = np.arange(1, max_distance + 1)
    kappa = np.full(max_distance + 1, np.nan)
    rho = np.full(max_distance + 1, np.nan)
    kappa[1:] = _piecewise(params.kappa_levels, params.alpha_kappa, distances)
    rho[1:] = _piecewise(params.rho_levels, params.alpha_rho, distances)
    return kappa, rho


def _softplus(u: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, u)


def _softplus_inverse(x: np.ndarray) -> np.ndarray:
    # log(exp(x) - 1), written to stay accurate for large x
    return x + np.log(-np.expm1(-x))


def to_unconstrained(params: ModelParams, param_map: ParameterMap = ParameterMap.LOG) -> np.ndarray:
    """Levels to log (or softplus^-1) space, exponents unchanged, eta through logit."""
    natural = params.natural_vector()
    n_levels = 2 * params.variant.levels
    out = natural.copy()
    if ParameterMap(param_map) is ParameterMap.LOG:
        out[:n_levels] = np.log(natural[:n_levels])
    else:
        out[:n_levels] = _softplus_inverse(natural[:n_levels])
    if params.is_gzi:
        out[-1] = logit(min(natural[-1], 1.0 - 1e-15))
    return out


def from_unconstrained(
    variant: Variant,
    vector,
    gzi: bool = False,
    param_map: ParameterMap = ParameterMap.LOG,
) -> ModelParams:
    vector = np.asarray(vector, dtype=float)
    n_levels = 2 * Variant(variant).levels
    natural = vector.copy()
    if ParameterMap(param_map) is ParameterMap.LOG:
        natural[:n_levels] = np.exp(vector[:n_levels])
    else:
        natural[:n_levels] = _softplus(vector[:n_levels])
    if gzi:
        natural[-1] = expit(vector[-1])
    return ModelParams.from_natural(variant, natural, gzi=gzi)


def unconstrained_jacobian(params: ModelParams, param_map: ParameterMap = ParameterMap.LOG) -> np.ndarray:
    """Diagonal of d(natural)/d(unconstrained) at params."""
    natural = params.natural_vector()
    n_levels = 2 * params.variant.levels
    jac = np.ones_like(natural)
    if ParameterMap(param_map) is ParameterMap.LOG:
        jac[:n_levels] = natural[:n_levels]
    else:
        jac[:n_levels] = -np.expm1(-natural[:n_levels])
    if params.is_gzi:
        eta = natural[-1]
        jac[-1] = eta * (1.0 - eta)
    return jac
