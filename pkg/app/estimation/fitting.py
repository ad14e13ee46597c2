"""Maximum-likelihood fits of the inside-the-book parameters.

The optimizer works on the unconstrained vector (log or softplus^-1 of the
levels, the tail exponents as they are, logit of eta) and minimizes the
negative mean log-likelihood with BFGS, fed with central-difference
gradients. When BFGS stops without meeting its tolerance, Nelder-Mead
restarts from the best point seen. Every objective call checks the
wall-clock deadline; on timeout the best point so far is returned with
timed_out set.

Standard errors come from the observed information (the negated Hessian of
the log-likelihood in natural coordinates, by central second differences)
and, for comparison, from the outer product of per-observation scores.
"""

from __future__ import annotations

import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.stats import norm

from app.config import DEFAULT_THREADS, GLOBAL_BUDGET_SECONDS, SIGNIFICANCE_LEVEL
from app.errors import BudgetExhaustedError, DomainError, InsufficientDataError
from app.estimation.likelihood import log_likelihood, observation_log_densities
from app.estimation.sample import Mode, Sample
from app.models.params import (
    ModelParams,
    ParameterMap,
    Variant,
    from_unconstrained,
    to_unconstrained,
)

logger = logging.getLogger(__name__)

# Objective value used where the likelihood is zero, so line searches back off.
_PENALTY = 1e10
# Unconstrained coordinates beyond this are reported as boundary estimates.
_BOUNDARY = 15.0


@dataclass(frozen=True)
class OptBudget:
    seconds: float = GLOBAL_BUDGET_SECONDS
    max_iterations: int = 200
    gtol: float = 1e-5

    def deadline(self, started: float | None = None) -> float:
        return (time.monotonic() if started is None else started) + max(0.0, self.seconds)


@dataclass
class FitResult:
    variant: Variant
    mode: Mode
    params: ModelParams
    log_lik: float
    std_errors: np.ndarray
    param_pvalues: np.ndarray
    converged: bool
    iterations: int
    wall_time: float
    init_log_lik: float = -math.inf
    opg_std_errors: np.ndarray | None = None
    information_pd: bool = False
    timed_out: bool = False
    evaluations: int = 0
    n_obs: int = 0
    fixed_eta: bool = False
    boundary: list[str] = field(default_factory=list)
    message: str = ""

    @property
    def n_params(self) -> int:
        """Free parameters; a fixed eta does not count."""
        return self.params.n_params - (1 if self.fixed_eta else 0)

    def all_significant(self, alpha: float = SIGNIFICANCE_LEVEL) -> bool:
        pvalues = self.free_pvalues()
        return bool(pvalues.size) and bool(np.all(np.nan_to_num(pvalues, nan=1.0) < alpha))

    def free_pvalues(self) -> np.ndarray:
        return self.param_pvalues[:-1] if self.fixed_eta else self.param_pvalues


def initial_params(sample: Sample, variant: Variant, mode: Mode | str | None = None) -> ModelParams:
    """Moment start: the mean jump fixes kappa/rho, the mean ask lifetime fixes rho."""
    mode = Mode(mode or sample.mode)
    jumps = [o.magnitude for o in sample.in_sample()]
    mean_jump = max(float(np.mean(jumps)) if jumps else 2.0, 1.001)
    ratio = -math.log(1.0 - 1.0 / mean_jump)
    durations = [e.duration for s in sample.sessions for e in s.epochs if e.duration > 0]
    rho0 = float(np.clip(1.0 / np.mean(durations), 1e-3, 1e3)) if durations else 1.0
    eta = 0.9 if mode is Mode.GZI else None
    basic = ModelParams.basic(ratio * rho0, rho0, eta=eta)
    return basic if Variant(variant) is Variant.S else basic.extended_to(variant)


class _Objective:
    """Negative mean log-likelihood in unconstrained space, with best-point tracking and a deadline."""

    def __init__(self, decode: Callable[[np.ndarray], ModelParams], sample: Sample, mode: Mode,
                 deadline: float, threads: int):
        self.decode = decode
        self.sample = sample
        self.mode = mode
        self.deadline = deadline
        self.threads = threads
        self.scale = max(sample.n_in, 1)
        self.best_u: np.ndarray | None = None
        self.best_value = math.inf
        self.evaluations = 0
        self._lock = threading.Lock()

    def value(self, u: np.ndarray, threads: int | None = None) -> float:
        if time.monotonic() >= self.deadline:
            raise BudgetExhaustedError("optimization budget exhausted")
        try:
            ll = log_likelihood(self.sample, self.decode(u), self.mode, threads=threads or self.threads)
        except DomainError:
            ll = -math.inf
        value = -ll / self.scale if math.isfinite(ll) else _PENALTY
        with self._lock:
            self.evaluations += 1
            if value < self.best_value:
                self.best_value = value
                self.best_u = np.array(u, dtype=float)
        return value

    __call__ = value

    def gradient(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        steps = np.maximum(1e-5, 1e-7 * np.abs(u))
        probes = []
        for i, h in enumerate(steps):
            e = np.zeros_like(u)
            e[i] = h
            probes += [u + e, u - e]
        with ThreadPoolExecutor(max_workers=max(1, self.threads)) as executor:
            values = list(executor.map(lambda x: self.value(x, threads=1), probes))
        values = np.asarray(values).reshape(-1, 2)
        return (values[:, 0] - values[:, 1]) / (2 * steps)


def _natural_steps(params: ModelParams) -> np.ndarray:
    theta = params.natural_vector()
    n_levels = 2 * params.variant.levels
    steps = 1e-4 * np.maximum(1.0, np.abs(theta))
    steps[:n_levels] = 1e-4 * theta[:n_levels]
    if params.is_gzi:
        eta = theta[-1]
        steps[-1] = min(1e-4, eta / 2, max((1.0 - eta) / 2, 0.0))
    return steps


def numerical_hessian(fn: Callable[[np.ndarray], float], x: np.ndarray, steps: np.ndarray,
                      indices=None, threads: int = DEFAULT_THREADS) -> np.ndarray:
    """Central second differences of fn on the given coordinates."""
    x = np.asarray(x, dtype=float)
    indices = list(range(x.size)) if indices is None else list(indices)
    k = len(indices)

    def shifted(*moves):
        y = x.copy()
        for i, sign in moves:
            y[indices[i]] += sign * steps[indices[i]]
        return y

    points = [x]
    for i in range(k):
        points += [shifted((i, 1)), shifted((i, -1))]
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    for i, j in pairs:
        points += [shifted((i, 1), (j, 1)), shifted((i, 1), (j, -1)),
                   shifted((i, -1), (j, 1)), shifted((i, -1), (j, -1))]
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        values = np.asarray(list(executor.map(fn, points)), dtype=float)

    f0 = values[0]
    hessian = np.zeros((k, k))
    h = np.asarray([steps[idx] for idx in indices])
    for i in range(k):
        hessian[i, i] = (values[1 + 2 * i] - 2 * f0 + values[2 + 2 * i]) / h[i] ** 2
    offset = 1 + 2 * k
    for n_pair, (i, j) in enumerate(pairs):
        pp, pm, mp, mm = values[offset + 4 * n_pair: offset + 4 * n_pair + 4]
        hessian[i, j] = hessian[j, i] = (pp - pm - mp + mm) / (4 * h[i] * h[j])
    return hessian


def _free_indices(params: ModelParams, fixed_eta: bool) -> list[int]:
    count = params.n_params
    if params.is_gzi and (fixed_eta or _natural_steps(params)[-1] <= 0):
        count -= 1
    return list(range(count))


def observed_information(sample: Sample | None, params: ModelParams, mode: Mode | str | None = None,
                         loglik: Callable[[np.ndarray], float] | None = None, free=None,
                         threads: int = DEFAULT_THREADS) -> np.ndarray:
    """-Hessian of the log-likelihood at params, in natural coordinates, symmetrized.

    loglik maps a natural parameter vector to a log-likelihood; by default it
    is log_likelihood on sample.
    """
    if loglik is None:
        mode = Mode(mode or sample.mode)

        def loglik(vector):
            candidate = ModelParams.from_natural(params.variant, vector, gzi=params.is_gzi)
            return log_likelihood(sample, candidate, mode, threads=1)

    theta = params.natural_vector()
    free = _free_indices(params, fixed_eta=False) if free is None else list(free)
    hessian = numerical_hessian(loglik, theta, _natural_steps(params), free, threads)
    information = -hessian
    return (information + information.T) / 2


def outer_product_information(sample: Sample, params: ModelParams, mode: Mode | str | None = None,
                              free=None, threads: int = DEFAULT_THREADS) -> np.ndarray:
    """Sum over observations of the outer product of the per-observation scores."""
    mode = Mode(mode or sample.mode)
    theta = params.natural_vector()
    free = _free_indices(params, fixed_eta=False) if free is None else list(free)
    steps = _natural_steps(params)
    scores = np.zeros((sample.n_in, len(free)))
    for col, idx in enumerate(free):
        up, down = theta.copy(), theta.copy()
        up[idx] += steps[idx]
        down[idx] -= steps[idx]
        plus = observation_log_densities(
            sample, ModelParams.from_natural(params.variant, up, gzi=params.is_gzi), mode, threads=threads)
        minus = observation_log_densities(
            sample, ModelParams.from_natural(params.variant, down, gzi=params.is_gzi), mode, threads=threads)
        scores[:, col] = (plus - minus) / (2 * steps[idx])
    return scores.T @ scores


def standard_errors(information: np.ndarray) -> tuple[np.ndarray, bool]:
    """sqrt(diag(information^-1)) when information is positive definite, else nan."""
    k = information.shape[0]
    try:
        np.linalg.cholesky(information)
    except np.linalg.LinAlgError:
        return np.full(k, np.nan), False
    covariance = np.linalg.inv(information)
    return np.sqrt(np.clip(np.diag(covariance), 0.0, None)), True


def wald_pvalues(estimates: np.ndarray, std_errors: np.ndarray) -> np.ndarray:
    """Two-sided p-values of H0: parameter = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(estimates / std_errors)
    return np.where(np.isfinite(z), 2 * norm.sf(z), np.nan)


def _padded(values: np.ndarray, size: int) -> np.ndarray:
    out = np.full(size, np.nan)
    out[: values.size] = values
    return out


def fit(sample: Sample, variant: Variant | str, mode: Mode | str | None = None,
        init: ModelParams | None = None, budget: OptBudget | None = None,
        param_map: ParameterMap = ParameterMap.LOG, fix_eta: bool = False,
        threads: int = DEFAULT_THREADS) -> FitResult:
    """Maximize the log-likelihood of sample over one variant.

    Raises BudgetExhaustedError when the budget ends before a single
    likelihood evaluation; any later timeout yields a partial FitResult.
    """
    variant = Variant(variant)
    mode = Mode(mode or sample.mode)
    budget = budget or OptBudget()
    if sample.n_in == 0:
        raise InsufficientDataError("cannot fit an empty sample")

    started = time.monotonic()
    if init is None:
        init = initial_params(sample, variant, mode)
        if fix_eta and mode is Mode.GZI:
            init = replace(init, eta=1.0)
    if Variant(init.variant) is not variant:
        raise DomainError(f"init is a {init.variant.value} point, not {variant.value}")
    if mode is Mode.GZI and not init.is_gzi:
        init = replace(init, eta=1.0 if fix_eta else 0.9)
    if mode is Mode.ZI and init.is_gzi:
        init = replace(init, eta=None)
    fixed_eta = fix_eta and mode is Mode.GZI
    optimize_eta = mode is Mode.GZI and not fixed_eta

    def decode(u):
        candidate = from_unconstrained(variant, u, gzi=optimize_eta, param_map=param_map)
        return replace(candidate, eta=init.eta) if fixed_eta else candidate

    u0 = to_unconstrained(init, param_map)
    if fixed_eta:
        u0 = u0[:-1]
    objective = _Objective(decode, sample, mode, budget.deadline(started), threads)

    timed_out = False
    converged = False
    iterations = 0
    message = ""
    init_value = objective(u0)
    try:
        result = minimize(objective, u0, jac=objective.gradient, method="BFGS",
                          options={"maxiter": budget.max_iterations, "gtol": budget.gtol})
        iterations, converged, message = int(result.nit), bool(result.success), str(result.message)
        if not converged:
            logger.info("BFGS stopped for %s (%s); restarting with Nelder-Mead", variant.value, message)
            fallback = minimize(objective, objective.best_u, method="Nelder-Mead",
                                options={"maxiter": budget.max_iterations * len(u0), "xatol": 1e-6, "fatol": 1e-9})
            iterations += int(fallback.nit)
            converged, message = bool(fallback.success), str(fallback.message)
    except BudgetExhaustedError:
        timed_out = True
        message = "budget exhausted"
        logger.warning("Fit of %s timed out after %d evaluations", variant.value, objective.evaluations)

    best_u = objective.best_u
    params = decode(best_u)
    scale = objective.scale
    log_lik = -objective.best_value * scale if objective.best_value < _PENALTY else -math.inf
    init_log_lik = -init_value * scale if init_value < _PENALTY else -math.inf

    theta = params.natural_vector()
    free = _free_indices(params, fixed_eta)
    std_errors = np.full(theta.size, np.nan)
    opg_errors = np.full(theta.size, np.nan)
    information_pd = False
    if math.isfinite(log_lik):
        info = observed_information(sample, params, mode, free=free, threads=threads)
        se, information_pd = standard_errors(info)
        std_errors = _padded(se, theta.size)
        opg, _ = standard_errors(outer_product_information(sample, params, mode, free=free, threads=threads))
        opg_errors = _padded(opg, theta.size)

    names = params.names()
    boundary = [names[i] for i, value in enumerate(best_u) if abs(value) > _BOUNDARY]
    if boundary:
        logger.warning("Boundary estimates for %s: %s", variant.value, ", ".join(boundary))

    wall_time = time.monotonic() - started
    logger.info("Fitted %s/%s on %d observations: log_lik=%.4f converged=%s (%.1fs)",
                variant.value, mode.value, sample.n_in, log_lik, converged and not timed_out, wall_time)
    return FitResult(
        variant=variant,
        mode=mode,
        params=params,
        log_lik=log_lik,
        std_errors=std_errors,
        param_pvalues=wald_pvalues(theta, std_errors),
        converged=converged and not timed_out,
        iterations=iterations,
        wall_time=wall_time,
        init_log_lik=init_log_lik,
        opg_std_errors=opg_errors,
        information_pd=information_pd,
        timed_out=timed_out,
        evaluations=objective.evaluations,
        n_obs=sample.n_in,
        fixed_eta=fixed_eta,
        boundary=boundary,
        message=message,
    )
