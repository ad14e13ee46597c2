"""Out-of-sample prediction power of a fitted model, and the moment-cap filter.

P_m = 1 - sum |a+ - E(a+ | history)| / sum |a+ - mean a+|

over the out-of-sample jumps, where the benchmark mean is taken over the
in-sample jumps (or over the whole sample when asked). A benchmark that
predicts every jump exactly leaves P_m at minus infinity.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from app.config import DEFAULT_THREADS, MAX_IN_SAMPLE, MEAN_TAIL_TOL
from app.density.jumps import conditional_mean_jump, jump_law
from app.errors import DomainError, InsufficientDataError
from app.estimation.fitting import FitResult
from app.estimation.likelihood import observation_contexts
from app.estimation.sample import Mode, Sample, split_sizes
from app.models.params import ModelParams

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictionReport:
    p_m: float
    naive_mae: float
    model_mae: float
    n_out: int
    benchmark_mean: float
    full_sample_mean: bool = False
    degenerate: bool = False


def prediction_power_from(actual, predicted, benchmark: float) -> tuple[float, float, float]:
    """(P_m, naive error, model error) for jumps `actual` with model predictions `predicted`."""
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    model_mae = float(np.abs(actual - predicted).sum())
    naive_mae = float(np.abs(actual - benchmark).sum())
    if naive_mae == 0.0:
        return -math.inf, naive_mae, model_mae
    return 1.0 - model_mae / naive_mae, naive_mae, model_mae


def prediction_power(sample: Sample, fitted: FitResult | ModelParams, mode: Mode | str | None = None,
                     full_sample_mean: bool = False, threads: int = DEFAULT_THREADS) -> PredictionReport:
    mode = Mode(mode or sample.mode)
    params = fitted.params if isinstance(fitted, FitResult) else fitted
    outside = sample.out_of_sample()
    if not outside:
        raise InsufficientDataError("no out-of-sample observations to predict")

    reference = sample.observations[: sample.n_in + sample.n_out] if full_sample_mean else sample.in_sample()
    benchmark = float(np.mean([o.magnitude for o in reference]))
    contexts = observation_contexts(sample, params, outside, mode, threads=threads)
    predicted = [conditional_mean_jump(ctx) for ctx in contexts]
    actual = [o.magnitude for o in outside]
    p_m, naive_mae, model_mae = prediction_power_from(actual, predicted, benchmark)
    if math.isinf(p_m):
        logger.warning("Every out-of-sample jump equals the benchmark mean %.3g; P_m is -inf", benchmark)
    logger.info("P_m=%.4f on %d out-of-sample jumps", p_m, len(outside))
    return PredictionReport(
        p_m=p_m,
        naive_mae=naive_mae,
        model_mae=model_mae,
        n_out=len(outside),
        benchmark_mean=benchmark,
        full_sample_mean=full_sample_mean,
        degenerate=math.isinf(p_m),
    )


def moment_cap_filter(sample: Sample, k: float, cap: float, params: ModelParams,
                      mode: Mode | str | None = None, threads: int = DEFAULT_THREADS) -> Sample:
    """Drop observations whose conditional k-th jump moment exceeds cap, then resplit."""
    if k <= 2:
        raise DomainError(f"the moment order must exceed 2, got {k}")
    if math.isinf(cap):
        return sample
    mode = Mode(mode or sample.mode)
    observations = sample.observations
    contexts = observation_contexts(sample, params, observations, mode, threads=threads)
    kept = [obs for obs, ctx in zip(observations, contexts)
            if jump_law(ctx, MEAN_TAIL_TOL).moment(k) <= cap]
    dropped = len(observations) - len(kept)
    logger.info("Moment cap E[m^%g] <= %g dropped %d of %d observations", k, cap, dropped, len(observations))
    n_in, n_out = split_sizes(len(kept), max(sample.n_in, 0) or MAX_IN_SAMPLE)
    return replace(sample, observations=tuple(kept), n_in=n_in, n_out=n_out, dropped=sample.dropped + dropped)
