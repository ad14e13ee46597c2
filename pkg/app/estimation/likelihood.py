"""Log-likelihood of a sample under a parameter vector.

Each session is swept once through its ask epochs with the in-place
posterior kernels; at every observation the jump density is read off the
current tick laws. Sessions are independent, so they are swept in a thread
pool and their per-observation log densities concatenated in order.
"""

from __future__ import annotations

import logging
import time
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from app.config import DEFAULT_THREADS
from app.density.jumps import JumpContext, depletion_log_density, gzi_log_density
from app.density.posterior import TickPosterior, decay_arrays, reset_arrays
from app.errors import DomainError
from app.estimation.sample import EventClass, Mode, Observation, Sample, SessionSkeleton
from app.models.domain import EventCode, EventKind
from app.models.params import ModelParams, distance_rates

logger = logging.getLogger(__name__)


def _survival(params: ModelParams, mode: Mode) -> float:
    if Mode(mode) is Mode.ZI:
        return 1.0
    if params.eta is None:
        raise DomainError("GZI likelihood needs params with eta")
    return params.eta


def _by_session(observations) -> dict[int, list[tuple[int, Observation]]]:
    grouped: dict[int, list[tuple[int, Observation]]] = defaultdict(list)
    for idx, obs in enumerate(observations):
        grouped[obs.session].append((idx, obs))
    return grouped


def _sweep(skeleton: SessionSkeleton, targets: list[tuple[int, Observation]], n: int,
           kappa_d: np.ndarray, rho_d: np.ndarray, survival: float, visit) -> None:
    """Run the posterior recursion through one session, calling visit(idx, obs, posterior) at each target."""
    if not targets:
        return
    targets = sorted(targets, key=lambda item: item[1].epoch)
    nu = np.zeros(n, dtype=np.int64)
    varpi = np.ones(n)
    eps = np.zeros(n)
    iota = np.zeros(n)
    reset_at = np.full(n, -1, dtype=np.int64)
    last_epoch = targets[-1][1].epoch
    cursor = 0
    epochs = skeleton.epochs
    for k in range(last_epoch + 1):
        epoch = epochs[k]
        decay_arrays(varpi, eps, iota, epoch.a, epoch.duration, kappa_d, rho_d)
        while cursor < len(targets) and targets[cursor][1].epoch == k:
            idx, obs = targets[cursor]
            visit(idx, obs, TickPosterior(obs.prior, nu, varpi, eps, iota, reset_at, k))
            cursor += 1
        if k + 1 < len(epochs) and epochs[k + 1].a < epoch.a:
            reset_arrays(nu, varpi, eps, iota, epoch.a, epochs[k + 1].a, epoch.q_end, survival)


def _log_density(obs: Observation, post: TickPosterior, mode: Mode) -> float:
    if obs.event_class is EventClass.INSERTION:
        return 0.0
    if mode is Mode.GZI:
        return gzi_log_density(obs.a_new, obs.q_new, post, obs.s)
    return depletion_log_density(obs.a_new, obs.q_new, post)


def observation_log_densities(sample: Sample, params: ModelParams, mode: Mode | str | None = None,
                              observations=None, threads: int = DEFAULT_THREADS) -> np.ndarray:
    """log g_i for each observation (default: the in-sample segment), in order."""
    mode = Mode(mode or sample.mode)
    observations = sample.in_sample() if observations is None else tuple(observations)
    out = np.zeros(len(observations))
    if not observations:
        return out
    survival = _survival(params, mode)
    kappa_d, rho_d = distance_rates(params, sample.n)

    def visit(idx, obs, post):
        out[idx] = _log_density(obs, post, mode)

    grouped = _by_session(observations)
    started = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = [
            executor.submit(_sweep, sample.sessions[s], targets, sample.n, kappa_d, rho_d, survival, visit)
            for s, targets in grouped.items()
        ]
        for future in futures:
            future.result()
    logger.debug("Swept %d sessions for %d observations in %.3fs",
                 len(grouped), len(observations), time.perf_counter() - started)
    return out


def log_likelihood(sample: Sample, params: ModelParams, mode: Mode | str | None = None,
                   threads: int = DEFAULT_THREADS) -> float:
    """Sum of in-sample log densities; -inf as soon as one observation is impossible."""
    logs = observation_log_densities(sample, params, mode, threads=threads)
    if logs.size == 0:
        return 0.0
    if np.isneginf(logs).any():
        return -np.inf
    return float(logs.sum())


def _context_event(obs: Observation, mode: Mode) -> EventCode:
    if mode is Mode.GZI and obs.s > 0:
        return EventCode(EventKind.BMO, z=obs.s + obs.prior.q)
    return EventCode(EventKind.CA, p=obs.prior.a)


def observation_contexts(sample: Sample, params: ModelParams, observations,
                         mode: Mode | str | None = None, threads: int = DEFAULT_THREADS) -> list[JumpContext]:
    """Frozen jump contexts at the given observations under params."""
    mode = Mode(mode or sample.mode)
    observations = tuple(observations)
    contexts: list[JumpContext | None] = [None] * len(observations)
    survival = _survival(params, mode)
    kappa_d, rho_d = distance_rates(params, sample.n)

    def visit(idx, obs, post):
        contexts[idx] = JumpContext(_context_event(obs, mode), post)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        futures = [
            executor.submit(_sweep, sample.sessions[s], targets, sample.n, kappa_d, rho_d, survival, visit)
            for s, targets in _by_session(observations).items()
        ]
        for future in futures:
            future.result()
    return contexts
