"""Report service: JSON report files and the text fit table.

Reports are written with Python's JSON constants for non-finite floats
(-Infinity for a degenerate P_m), read back the same way and validated
against their schema.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import TypeVar

import numpy as np
from pydantic import BaseModel

from app.config import templates
from app.estimation.fitting import FitResult
from app.estimation.selection import SelectionOutcome
from app.models.schemas import FitReport, LadderStep, ParameterEstimate

ReportT = TypeVar("ReportT", bound=BaseModel)

# Significance levels and their stars, strictest first.
STAR_LEVELS = ((0.001, "***"), (0.01, "**"), (0.05, "*"))


def stars(p_value: float | None) -> str:
    if p_value is None or not math.isfinite(p_value):
        return ""
    for level, mark in STAR_LEVELS:
        if p_value < level:
            return mark
    return ""


def _number(value) -> float | None:
    value = float(value)
    return None if math.isnan(value) else value


def fit_report(result: FitResult) -> FitReport:
    names = result.params.names()
    values = result.params.natural_vector()
    opg = result.opg_std_errors if result.opg_std_errors is not None else np.full(values.size, np.nan)
    parameters = [
        ParameterEstimate(
            name=name,
            value=float(value),
            std_error=_number(se),
            opg_std_error=_number(opg_se),
            p_value=_number(p),
            stars=stars(_number(p)),
        )
        for name, value, se, opg_se, p in zip(names, values, result.std_errors, opg, result.param_pvalues)
    ]
    return FitReport(
        variant=result.variant.value,
        mode=result.mode.value,
        log_lik=result.log_lik,
        init_log_lik=result.init_log_lik,
        converged=result.converged,
        timed_out=result.timed_out,
        iterations=result.iterations,
        evaluations=result.evaluations,
        n_obs=result.n_obs,
        information_pd=result.information_pd,
        fixed_eta=result.fixed_eta,
        boundary=list(result.boundary),
        parameters=parameters,
        message=result.message,
        wall_time=result.wall_time,
    )


def ladder_steps(outcome: SelectionOutcome) -> list[LadderStep]:
    return [LadderStep(variant=e.variant.value, fit=fit_report(e.fit), lr_pvalue=e.lr_pvalue)
            for e in outcome.ladder]


def write_report(path: str | Path, report: BaseModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report.model_dump(), indent=2) + "\n", encoding="utf-8")
    return path


def read_report(path: str | Path, model: type[ReportT]) -> ReportT:
    return model.model_validate(json.loads(Path(path).read_text(encoding="utf-8")))


def _cell(estimate: ParameterEstimate) -> str:
    se = f"({estimate.std_error:.4g})" if estimate.std_error is not None else "(n/a)"
    return f"{estimate.value:.4g}{estimate.stars} {se}"


def render_table(report) -> str:
    """Text table of every fit in an EstimateReport, one row per parameter."""
    fits = report.fits
    names: list[str] = []
    for fit in fits:
        for p in fit.parameters:
            if p.name not in names:
                names.append(p.name)
    rows = []
    for name in names:
        cells = []
        for fit in fits:
            match = next((p for p in fit.parameters if p.name == name), None)
            cells.append(_cell(match) if match else "")
        rows.append({"name": name, "cells": cells})
    template = templates.get_template("fit_table.txt.j2")
    return template.render(report=report, fits=fits, rows=rows)
