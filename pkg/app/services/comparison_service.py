"""Comparison service: Wilcoxon test over paired prediction reports.

The x and y reports are paired by their label (the stock or sample
name); every label must appear exactly once on each side.
"""

from __future__ import annotations

import logging

from app.errors import PairingError
from app.estimation.wilcoxon import wilcoxon_summary
from app.models.schemas import ComparisonPair, PredictionReportModel, RunConfig, WilcoxonReportModel
from app.services.report_service import read_report

logger = logging.getLogger(__name__)


def _by_label(paths: list[str]) -> dict[str, float]:
    scores: dict[str, float] = {}
    for path in paths:
        report = read_report(path, PredictionReportModel)
        if report.label in scores:
            raise PairingError([f"{report.label} (duplicate)"])
        scores[report.label] = report.p_m
    return scores


def pair_reports(x_paths: list[str], y_paths: list[str]) -> list[ComparisonPair]:
    x, y = _by_label(x_paths), _by_label(y_paths)
    unmatched = sorted(set(x) ^ set(y))
    if unmatched:
        raise PairingError(unmatched)
    return [ComparisonPair(key=key, x=x[key], y=y[key]) for key in sorted(x)]


def compare(config: RunConfig) -> WilcoxonReportModel:
    pairs = pair_reports(config.compare_x, config.compare_y)
    result = wilcoxon_summary([(p.x, p.y) for p in pairs])
    logger.info("Wilcoxon over %d pairs: p=%.4g (x favoured %d, y favoured %d, ties %d)",
                result.n_pairs, result.p_value, result.favour_x, result.favour_y, result.ties)
    return WilcoxonReportModel(
        config=config,
        p_value=result.p_value,
        statistic=result.statistic,
        n_pairs=result.n_pairs,
        n_nonzero=result.n_nonzero,
        median_x=result.median_x,
        median_y=result.median_y,
        favour_x=result.favour_x,
        favour_y=result.favour_y,
        ties=result.ties,
        dropped_nonfinite=result.dropped_nonfinite,
        method=result.method,
        pairs=pairs,
    )
