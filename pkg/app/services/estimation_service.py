"""Estimation service: from data files to fit, selection and prediction reports.

For each command the pipeline:
  1. Loads the quote and trade files and splits them into sessions
  2. Resolves the tick grid (given in the config, or inferred from the data)
  3. Builds the sample (all ask up-jumps in ZI mode, matched ones in GZI mode);
     a ZI fit on the GZI sample is the trade-matched baseline for GZI
  4. Fits one variant, runs the selection ladder, or predicts out of sample
"""

from __future__ import annotations

import logging
import time
from decimal import Decimal
from pathlib import Path

from app.config import DEFAULT_GRID_MARGIN, REDUCED_SAMPLE
from app.data_io.csv_io import load_quotes, load_trades
from app.data_io.sample_builder import build_sample, infer_grid
from app.data_io.sessions import Session, SessionCalendar, split_sessions
from app.errors import BudgetExhaustedError, InputFormatError, InsufficientDataError
from app.estimation.fitting import OptBudget, fit
from app.estimation.prediction import moment_cap_filter, prediction_power
from app.estimation.sample import Sample
from app.estimation.selection import select_model
from app.models.domain import TickGrid
from app.models.params import ModelParams, Variant
from app.models.schemas import EstimateReport, FitReport, PredictionReportModel, RunConfig, SampleManifest
from app.services.report_service import fit_report, ladder_steps, read_report

logger = logging.getLogger(__name__)


def report_label(config: RunConfig) -> str:
    if config.label:
        return config.label
    return Path(config.quotes).stem if config.quotes else "sample"


def load_sessions(config: RunConfig) -> list[Session]:
    if not config.quotes or not config.trades:
        raise InputFormatError("both quotes and trades files are required")
    quotes = load_quotes(config.quotes)
    trades = load_trades(config.trades)
    start, end = config.session_window()
    sessions = split_sessions(quotes, trades, start, end, SessionCalendar(timezone=config.timezone),
                              apply_window=config.apply_window)
    logger.info("Loaded %d sessions from %s", len(sessions), config.quotes)
    return sessions


def resolve_grid(config: RunConfig, sessions: list[Session]) -> TickGrid:
    if config.n is not None:
        return TickGrid(n=config.n, tick_size=Decimal(config.tick_size), price_offset=Decimal(config.price_offset))
    return infer_grid(sessions, Decimal(config.tick_size), DEFAULT_GRID_MARGIN)


def load_sample(config: RunConfig) -> Sample:
    sessions = load_sessions(config)
    if not sessions:
        raise InsufficientDataError("no session holds any quote inside the trading window")
    grid = resolve_grid(config, sessions)
    sample, _ = build_sample(sessions, grid, config.resolved_sample_mode(), config.window_ns, config.max_in_sample,
                             threads=config.threads)
    if sample.insufficient:
        raise InsufficientDataError(f"only {sample.n_in} in-sample observations (at least 20 needed)")
    return sample


def _budget(config: RunConfig) -> OptBudget:
    return OptBudget(seconds=config.budget_seconds)


def estimate(config: RunConfig, sample: Sample | None = None) -> EstimateReport:
    """Fit config.variant; a zero budget raises BudgetExhaustedError."""
    started = time.monotonic()
    sample = sample or load_sample(config)
    result = fit(sample, config.variant, config.mode, budget=_budget(config), fix_eta=config.fix_eta,
                 threads=config.threads)
    return EstimateReport(
        config=config,
        label=report_label(config),
        sample=SampleManifest(**sample.manifest()),
        fits=[fit_report(result)],
        chosen=result.variant.value if result.converged else None,
        wall_time=time.monotonic() - started,
    )


def select(config: RunConfig, sample: Sample | None = None) -> EstimateReport:
    started = time.monotonic()
    sample = sample or load_sample(config)
    outcome = select_model(sample, config.mode, budget=_budget(config), alpha=config.alpha,
                           fix_eta=config.fix_eta, threads=config.threads)
    if not outcome.ladder:
        raise BudgetExhaustedError("the budget ran out before the first variant was fitted")
    steps = ladder_steps(outcome)
    manifest = (sample.with_cap(REDUCED_SAMPLE) if outcome.reduced else sample).manifest()
    return EstimateReport(
        config=config,
        label=report_label(config),
        sample=SampleManifest(**manifest),
        fits=[step.fit for step in steps],
        ladder=steps,
        chosen=outcome.chosen.value if outcome.chosen else None,
        stopped_reason=outcome.stopped_reason.value,
        reduced=outcome.reduced,
        wall_time=time.monotonic() - started,
    )


def params_from_fit(fit_entry: FitReport) -> ModelParams:
    values = [p.value for p in fit_entry.parameters]
    return ModelParams.from_natural(Variant(fit_entry.variant), values, gzi=fit_entry.mode == "gzi")


def predict(config: RunConfig, sample: Sample | None = None) -> PredictionReportModel:
    """P_m of config.variant, taken from config.fit_report when given, else fitted here."""
    sample = sample or load_sample(config)
    if config.fit_report:
        previous = read_report(config.fit_report, EstimateReport)
        variant = previous.chosen or config.variant
        entry = previous.fit_for(variant)
        if entry is None:
            raise InputFormatError(f"{config.fit_report} holds no fit of {variant}")
        params = params_from_fit(entry)
    else:
        variant = config.variant
        params = fit(sample, variant, config.mode, budget=_budget(config), fix_eta=config.fix_eta,
                     threads=config.threads).params
    capped = 0
    if config.moment_cap is not None:
        filtered = moment_cap_filter(sample, config.moment_order, config.moment_cap, params, config.mode,
                                     threads=config.threads)
        capped = filtered.dropped - sample.dropped
        sample = filtered
    report = prediction_power(sample, params, config.mode, full_sample_mean=config.full_sample_mean,
                              threads=config.threads)
    return PredictionReportModel(
        config=config,
        label=report_label(config),
        variant=str(variant),
        mode=config.mode,
        p_m=report.p_m,
        naive_mae=report.naive_mae,
        model_mae=report.model_mae,
        n_out=report.n_out,
        benchmark_mean=report.benchmark_mean,
        full_sample_mean=report.full_sample_mean,
        degenerate=report.degenerate,
        capped=capped,
    )
