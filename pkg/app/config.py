import os
from datetime import datetime, time
from zoneinfo import ZoneInfo

from jinja2 import Environment, FileSystemLoader, StrictUndefined

# Resolve paths relative to the project root (one level up from app/).
# This ensures templates are found regardless of where the CLI is invoked.
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
TEMPLATES_DIR = os.path.join(BASE_DIR, "templates")

# Shared Jinja2 environment used by the report service to render text tables.
# Trailing newlines are kept so the rendered table ends cleanly in a terminal.
templates = Environment(
    loader=FileSystemLoader(TEMPLATES_DIR),
    undefined=StrictUndefined,
    keep_trailing_newline=True,
    trim_blocks=True,
    lstrip_blocks=True,
)

# Version of every JSON report written by the CLI. Bump on any field change.
SCHEMA_VERSION = "1.0"

# Grid size inferred from data is (max observed ask tick) + this margin.
DEFAULT_GRID_MARGIN = 64

# Trading-session window. Records before 09:40 are the ten-minute warm-up
# after the 09:30 open; the window is closed on the left, open on the right.
DEFAULT_SESSION_START = time(9, 40)
DEFAULT_SESSION_END = time(15, 30)
DEFAULT_TIMEZONE = "America/New_York"

# Simulated histories are stamped from this instant (a Monday, 09:40 New York).
SIM_START_NS = int(datetime(2009, 3, 2, 9, 40, tzinfo=ZoneInfo(DEFAULT_TIMEZONE)).timestamp()) * 1_000_000_000

# Trades are matched against quote changes at most this far away in time.
DEFAULT_MATCH_WINDOW_NS = 1_000_000_000

# Sample sizes for the estimation procedure
MAX_IN_SAMPLE = 5000
REDUCED_SAMPLE = 1000
MIN_OBSERVATIONS = 20
OUT_OF_SAMPLE_FRACTION = 0.1

# Significance level for both the Wald tests and the likelihood-ratio ladder
SIGNIFICANCE_LEVEL = 0.05

# Wall-clock budget for one whole selection run (seconds)
GLOBAL_BUDGET_SECONDS = 2500.0

# Truncation tolerances for infinite sums: densities vs conditional means
DENSITY_TAIL_TOL = 1e-12
MEAN_TAIL_TOL = 1e-10

# Worker threads for per-session sweeps and finite-difference probes
DEFAULT_THREADS = 4

# Wilcoxon: exact null distribution up to this many non-zero pairs
WILCOXON_EXACT_MAX = 25
WILCOXON_MIN_PAIRS = 6
