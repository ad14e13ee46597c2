"""Published ZI models expressed as IntensitySpec builders.

Each builder takes the constants of one row of the model table and
returns the matching specification:

    model     theta        vartheta       kappa         rho        lambda        sigma
    Luckock   K(b)         1 - L(a - 1)   K(p)-K(p-1)   0          L(p)-L(p-1)   0
    Smith     theta_s      theta_s        kappa_s       rho_s      kappa_s       rho_s
    Cont      theta_c      theta_c        kappa_c(p-b)  rho_c(p-b) kappa_c(a-p)  rho_c(a-p)

Stigler is Luckock with K(x) = L(x) = x, scaled here to the n-tick grid.
"""

from collections.abc import Callable, Sequence
from dataclasses import replace

import numpy as np

from app.errors import IntensityValidationError
from app.models.intensity import IntensitySpec


def _require(name: str, **values) -> None:
    missing = [key for key, value in values.items() if value is None]
    if missing:
        raise IntensityValidationError(f"{name} preset is missing: {', '.join(missing)}")


def _as_distance_fn(values, label: str) -> Callable[[int], float]:
    """Accept a callable of the distance, a constant, or a sequence indexed from distance 1."""
    if callable(values):
        return values
    if np.isscalar(values):
        return lambda d: float(values)
    table = [float(v) for v in values]
    if not table:
        raise IntensityValidationError(f"cont preset: {label} table is empty")

    def lookup(d: int) -> float:
        # Distances beyond the table reuse its last entry.
        return table[min(max(d, 1), len(table)) - 1]

    return lookup


def smith(theta_s: float | None = None, kappa_s: float | None = None, rho_s: float | None = None,
          iota: Sequence[float] = ()) -> IntensitySpec:
    _require("smith", theta_s=theta_s, kappa_s=kappa_s, rho_s=rho_s)
    return IntensitySpec(
        theta=lambda a, b: theta_s,
        vartheta=lambda a, b: theta_s,
        kappa=lambda a, b, p: kappa_s,
        lam=lambda a, b, p: kappa_s,
        rho=lambda a, b, p: rho_s,
        sigma=lambda a, b, p: rho_s,
        iota=tuple(iota),
        iota_bid=tuple(iota[::-1]) if iota else (),
        name="smith",
    )


def cont(theta_c: float | None = None, kappa_c=None, rho_c=None,
         iota: Sequence[float] = ()) -> IntensitySpec:
    _require("cont", theta_c=theta_c, kappa_c=kappa_c, rho_c=rho_c)
    kappa_fn = _as_distance_fn(kappa_c, "kappa_c")
    rho_fn = _as_distance_fn(rho_c, "rho_c")
    return IntensitySpec(
        theta=lambda a, b: theta_c,
        vartheta=lambda a, b: theta_c,
        kappa=lambda a, b, p: kappa_fn(p - b),
        lam=lambda a, b, p: kappa_fn(a - p),
        rho=lambda a, b, p: rho_fn(p - b),
        sigma=lambda a, b, p: rho_fn(a - p),
        iota=tuple(iota),
        iota_bid=tuple(iota[::-1]) if iota else (),
        name="cont",
    )


def _cdf_values(cdf, n: int, label: str) -> np.ndarray:
    """cdf evaluated on 0..n; a sequence is taken as those values directly."""
    if callable(cdf):
        values = np.array([float(cdf(x)) for x in range(n + 1)])
    else:
        values = np.asarray(cdf, dtype=float)
        if values.size != n + 1:
            raise IntensityValidationError(f"luckock preset: {label} needs {n + 1} values on 0..n")
    if np.any(np.diff(values) < 0):
        raise IntensityValidationError(f"luckock preset: {label} is not monotone on the grid")
    if values[0] < 0 or values[-1] > 1 + 1e-12:
        raise IntensityValidationError(f"luckock preset: {label} leaves [0, 1]")
    return values


def luckock(K=None, L=None, n: int | None = None, iota: Sequence[float] = ()) -> IntensitySpec:
    _require("luckock", K=K, L=L, n=n)
    k_values = _cdf_values(K, n, "K")
    l_values = _cdf_values(L, n, "L")
    kappa_l = np.diff(k_values)
    lambda_l = np.diff(l_values)

    def theta(a, b):
        return float(k_values[b])

    def vartheta(a, b):
        return float(1.0 - l_values[min(a - 1, n)])

    return IntensitySpec(
        theta=theta,
        vartheta=vartheta,
        kappa=lambda a, b, p: float(kappa_l[p - 1]),
        lam=lambda a, b, p: float(lambda_l[p - 1]),
        rho=lambda a, b, p: 0.0,
        sigma=lambda a, b, p: 0.0,
        iota=tuple(iota),
        name="luckock",
    )


def stigler(n: int | None = None, iota: Sequence[float] = ()) -> IntensitySpec:
    _require("stigler", n=n)
    spec = luckock(K=lambda x: x / n, L=lambda x: x / n, n=n, iota=iota)
    return replace(spec, name="stigler")
