"""Likelihood-ratio tests and the S -> T1 -> T2 -> T3 selection ladder.

The ladder fits the variants in order, each one started from the previous
fit. A variant is chosen when all its parameters are significant and the
likelihood ratio against the next variant is not; T3 is chosen when it is
reached with all parameters significant. One run shares a single
wall-clock budget. When it runs out part way, the last variant that was all
significant and beat its predecessor is kept; if no variant finishes at
all, the ladder is run once more on a reduced in-sample segment.
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

from scipy.stats import chi2

from app.config import DEFAULT_THREADS, REDUCED_SAMPLE, SIGNIFICANCE_LEVEL
from app.errors import BudgetExhaustedError, NonNestedModelsError
from app.estimation.fitting import FitResult, OptBudget, fit
from app.estimation.sample import Mode, Sample
from app.models.params import VARIANT_LADDER, Variant

logger = logging.getLogger(__name__)


class StopReason(str, Enum):
    LR_INSIGNIFICANT = "lr_insignificant"
    TIMEOUT = "timeout"
    ALL_TRIED = "all_tried"


@dataclass
class LadderEntry:
    variant: Variant
    fit: FitResult
    lr_pvalue: float | None = None  # against the next variant, once it is fitted


@dataclass
class SelectionOutcome:
    chosen: Variant | None
    ladder: list[LadderEntry] = field(default_factory=list)
    stopped_reason: StopReason = StopReason.ALL_TRIED
    reduced: bool = False
    wall_time: float = 0.0

    def fit_for(self, variant: Variant) -> FitResult | None:
        for entry in self.ladder:
            if entry.variant is Variant(variant):
                return entry.fit
        return None


def lr_test(fit_small: FitResult, fit_big: FitResult, df: int | None = None) -> float:
    """p-value of 2 (l_big - l_small) against chi2(df); df defaults to the parameter-count difference."""
    small, big = Variant(fit_small.variant), Variant(fit_big.variant)
    if VARIANT_LADDER.index(small) >= VARIANT_LADDER.index(big) or fit_small.mode is not fit_big.mode:
        raise NonNestedModelsError(
            f"{small.value}/{fit_small.mode.value} is not nested in {big.value}/{fit_big.mode.value}"
        )
    if df is None:
        df = fit_big.n_params - fit_small.n_params
    if df < 1:
        raise NonNestedModelsError(f"degrees of freedom must be positive, got {df}")

    statistic = 2.0 * (fit_big.log_lik - fit_small.log_lik)
    if statistic < 0:
        message = (
            f"Negative likelihood-ratio statistic {statistic:.6g} for {small.value} vs {big.value}; "
            "clipped to 0. Check optimizer convergence."
        )
        logger.warning(message)
        warnings.warn(message, UserWarning, stacklevel=2)
        statistic = 0.0
    if statistic == 0.0:
        return 1.0
    return float(chi2.sf(statistic, df))


def _run_ladder(sample: Sample, mode: Mode, budget: OptBudget, alpha: float, fix_eta: bool,
                threads: int) -> SelectionOutcome:
    started = time.monotonic()
    deadline = budget.deadline(started)
    outcome = SelectionOutcome(chosen=None)
    previous: LadderEntry | None = None
    accepted: Variant | None = None  # last finished variant that earned its place

    for variant in VARIANT_LADDER:
        remaining = deadline - time.monotonic()
        init = previous.fit.params.extended_to(variant) if previous else None
        try:
            result = fit(sample, variant, mode, init=init, budget=replace(budget, seconds=remaining),
                         fix_eta=fix_eta, threads=threads)
        except BudgetExhaustedError:
            logger.info("No time left to fit %s", variant.value)
            outcome.chosen = accepted
            outcome.stopped_reason = StopReason.TIMEOUT
            break

        entry = LadderEntry(variant, result)
        if result.timed_out:
            outcome.ladder.append(entry)
            outcome.chosen = accepted
            outcome.stopped_reason = StopReason.TIMEOUT
            break

        if previous is not None:
            previous.lr_pvalue = lr_test(previous.fit, result)
            logger.info("LR %s vs %s: p=%.4g", previous.variant.value, variant.value, previous.lr_pvalue)
            if previous.fit.all_significant(alpha) and previous.lr_pvalue > alpha:
                outcome.ladder.append(entry)
                outcome.chosen = previous.variant
                outcome.stopped_reason = StopReason.LR_INSIGNIFICANT
                break
        if result.all_significant(alpha) and (previous is None or previous.lr_pvalue <= alpha):
            accepted = variant
        outcome.ladder.append(entry)
        previous = entry
    else:
        outcome.stopped_reason = StopReason.ALL_TRIED
        if previous is not None and previous.fit.all_significant(alpha):
            outcome.chosen = previous.variant

    outcome.wall_time = time.monotonic() - started
    return outcome


def select_model(sample: Sample, mode: Mode | str | None = None, budget: OptBudget | None = None,
                 alpha: float = SIGNIFICANCE_LEVEL, fix_eta: bool = False,
                 threads: int = DEFAULT_THREADS) -> SelectionOutcome:
    mode = Mode(mode or sample.mode)
    budget = budget or OptBudget()
    outcome = _run_ladder(sample, mode, budget, alpha, fix_eta, threads)
    finished = [e for e in outcome.ladder if not e.fit.timed_out]
    if (outcome.stopped_reason is StopReason.TIMEOUT and not finished and budget.seconds > 0
            and sample.n_in > REDUCED_SAMPLE):
        logger.info("No variant finished in %.0fs; retrying on %d observations", budget.seconds, REDUCED_SAMPLE)
        outcome = _run_ladder(sample.with_cap(REDUCED_SAMPLE), mode, budget, alpha, fix_eta, threads)
        outcome.reduced = True
    logger.info("Selection stopped (%s); chosen=%s", outcome.stopped_reason.value,
                outcome.chosen.value if outcome.chosen else None)
    return outcome
