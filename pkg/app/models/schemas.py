"""Run configuration and the JSON report schemas written by the CLI.

Every report carries the schema version and the fully resolved RunConfig
it was produced from, so a run can be repeated from its own report.
Floats may be infinite (P_m of a degenerate benchmark is -inf); reports
are therefore written with the JSON constants Infinity / NaN.
"""

from __future__ import annotations

from datetime import time
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.config import (
    DEFAULT_MATCH_WINDOW_NS,
    DEFAULT_THREADS,
    DEFAULT_TIMEZONE,
    GLOBAL_BUDGET_SECONDS,
    MAX_IN_SAMPLE,
    SCHEMA_VERSION,
    SIGNIFICANCE_LEVEL,
)
from app.errors import InputFormatError

_LIST_FIELDS = ("mo_volumes", "mo_volume_probs", "compare_x", "compare_y")


class RunConfig(BaseModel):
    """Resolved settings of one command.

    The plain-text form is one `key = value` per line, keys being the field
    names below; `#` starts a comment. List values are comma-separated.
    """

    model_config = ConfigDict(extra="forbid", validate_assignment=True)

    command: str = ""

    # model and grid
    preset: str = "smith"
    theta: float = 1.0
    kappa: float = 0.5
    rho: float = 0.3
    n: Optional[int] = None  # inferred from the data when not given
    tick_size: str = "0.01"
    price_offset: str = "10.00"

    # simulation
    events: int = Field(default=10_000, ge=0)
    burn_in: int = Field(default=0, ge=0)
    seed: int = 0
    eta: float = Field(default=1.0, gt=0.0, le=1.0)
    mo_volumes: list[int] = Field(default_factory=lambda: [1])
    mo_volume_probs: list[float] = Field(default_factory=lambda: [1.0])

    # data files
    quotes: Optional[str] = None
    trades: Optional[str] = None
    out_dir: str = "."
    label: Optional[str] = None  # pairing key in comparisons; the quotes file stem by default

    # sessions and matching
    session_start: str = "09:40"
    session_end: str = "15:30"
    timezone: str = DEFAULT_TIMEZONE
    apply_window: bool = True
    window_ns: int = Field(default=DEFAULT_MATCH_WINDOW_NS, ge=0)
    side: Literal["ask", "bid"] = "ask"

    # estimation
    mode: Literal["zi", "gzi"] = "zi"
    sample_mode: Optional[Literal["zi", "gzi"]] = None  # observations to build; the fit mode by default
    variant: Literal["S", "T1", "T2", "T3"] = "S"
    budget_seconds: float = Field(default=GLOBAL_BUDGET_SECONDS, ge=0.0)
    max_in_sample: int = Field(default=MAX_IN_SAMPLE, ge=1)
    alpha: float = Field(default=SIGNIFICANCE_LEVEL, gt=0.0, lt=1.0)
    fix_eta: bool = False
    fit_report: Optional[str] = None  # predict: take parameters from this report
    full_sample_mean: bool = False
    moment_order: float = Field(default=4.0, gt=2.0)
    moment_cap: Optional[float] = Field(default=None, gt=0.0)  # predict: drop jumps with E[m^k] above this

    # comparison
    compare_x: list[str] = Field(default_factory=list)
    compare_y: list[str] = Field(default_factory=list)

    threads: int = Field(default=DEFAULT_THREADS, ge=1)

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def _split_commas(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    @field_validator("session_start", "session_end")
    @classmethod
    def _clock(cls, value: str) -> str:
        time.fromisoformat(value)
        return value

    def resolved_sample_mode(self) -> str:
        return self.sample_mode or self.mode

    def session_window(self) -> tuple[time, time]:
        return time.fromisoformat(self.session_start), time.fromisoformat(self.session_end)

    @classmethod
    def load(cls, path: str | Path, **overrides) -> "RunConfig":
        values: dict[str, str] = {}
        for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InputFormatError(f"expected 'key = value', got {raw!r}", line_number)
            values[key.strip()] = value.strip()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.model_validate(values)

    def dump(self, path: str | Path) -> None:
        lines = []
        for key, value in self.model_dump().items():
            if value is None:
                continue
            if isinstance(value, list):
                value = ",".join(str(v) for v in value)
            elif isinstance(value, bool):
                value = str(value).lower()
            lines.append(f"{key} = {value}")
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class Report(BaseModel):
    """Fields shared by every JSON report."""

    schema_version: str = SCHEMA_VERSION
    config: RunConfig


class GridInfo(BaseModel):
    n: int
    tick_size: str
    price_offset: str


class SimulationManifest(Report):
    grid: GridInfo
    event_counts: dict[str, int]
    total_events: int
    l1_jumps: int
    trades: int
    book_time: float  # seconds of simulated time
    absorbed: bool = False


class SampleManifest(BaseModel):
    mode: str
    grid_n: int
    sessions: int
    qualifying: int
    n_in: int
    n_out: int
    dropped: int = 0
    reduced: bool = False
    insufficient: bool = False
    mean_jump: Optional[float] = None
    mean_mo_volume: Optional[float] = None
    all_unit_jumps: bool = False


class ParameterEstimate(BaseModel):
    name: str
    value: float
    std_error: Optional[float] = None
    opg_std_error: Optional[float] = None  # from the outer product of scores
    p_value: Optional[float] = None
    stars: str = ""


class FitReport(BaseModel):
    variant: str
    mode: str
    log_lik: float
    init_log_lik: float
    converged: bool
    timed_out: bool
    iterations: int
    evaluations: int
    n_obs: int
    information_pd: bool
    fixed_eta: bool = False
    boundary: list[str] = Field(default_factory=list)
    parameters: list[ParameterEstimate]
    message: str = ""
    wall_time: float = 0.0


class LadderStep(BaseModel):
    variant: str
    fit: FitReport
    lr_pvalue: Optional[float] = None  # against the next variant on the ladder


class EstimateReport(Report):
    label: str
    sample: SampleManifest
    fits: list[FitReport] = Field(default_factory=list)
    ladder: list[LadderStep] = Field(default_factory=list)
    chosen: Optional[str] = None
    stopped_reason: Optional[str] = None
    reduced: bool = False
    wall_time: float = 0.0

    def fit_for(self, variant: str) -> FitReport | None:
        for fit in self.fits:
            if fit.variant == variant:
                return fit
        return None


class PredictionReportModel(Report):
    label: str
    variant: str
    mode: str
    p_m: float
    naive_mae: float
    model_mae: float
    n_out: int
    benchmark_mean: float
    full_sample_mean: bool = False
    degenerate: bool = False
    capped: int = 0  # observations removed by the moment cap


class MatchEntry(BaseModel):
    session: str
    trade_index: int
    quote_index: int
    side: str
    s: Optional[int] = None


class SessionMatch(BaseModel):
    session: str
    matched: int
    unmatched: int
    match_rate: float


class MatchReportModel(Report):
    label: str
    side: str
    matched_count: int
    unmatched_count: int
    match_rate: float
    sessions: list[SessionMatch] = Field(default_factory=list)
    matched: list[MatchEntry] = Field(default_factory=list)


class ComparisonPair(BaseModel):
    key: str
    x: float
    y: float


class WilcoxonReportModel(Report):
    p_value: float
    statistic: float
    n_pairs: int
    n_nonzero: int
    median_x: float
    median_y: float
    favour_x: int
    favour_y: int
    ties: int
    dropped_nonfinite: int = 0
    method: str
    pairs: list[ComparisonPair] = Field(default_factory=list)
