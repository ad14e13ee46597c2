"""Simulation service: run a preset book and write its quote/trade files and manifest."""

from __future__ import annotations

import logging
from decimal import Decimal
from pathlib import Path

from app.data_io.csv_io import history_to_records, write_quotes, write_trades
from app.models.domain import TickGrid
from app.models.intensity import IntensitySpec
from app.models.schemas import GridInfo, RunConfig, SimulationManifest
from app.presets.preset_registry import preset
from app.services.report_service import write_report
from app.simulator.engine import SimConfig, SimulationResult, simulate
from app.simulator.events import DiscreteLaw, GziConfig

logger = logging.getLogger(__name__)

DEFAULT_SIM_TICKS = 20


def grid_from_config(config: RunConfig, n: int | None = None) -> TickGrid:
    return TickGrid(n=n or config.n or DEFAULT_SIM_TICKS, tick_size=Decimal(config.tick_size),
                    price_offset=Decimal(config.price_offset))


def intensity_from_config(config: RunConfig, grid: TickGrid) -> IntensitySpec:
    name = config.preset.lower()
    if name == "smith":
        spec = preset(name, theta_s=config.theta, kappa_s=config.kappa, rho_s=config.rho)
    elif name == "cont":
        spec = preset(name, theta_c=config.theta, kappa_c=config.kappa, rho_c=config.rho)
    else:
        spec = preset(name, n=grid.n)
    spec.validate(grid)
    return spec


def gzi_from_config(config: RunConfig) -> GziConfig | None:
    law = DiscreteLaw(tuple(config.mo_volumes), tuple(config.mo_volume_probs))
    gzi = GziConfig(eta=config.eta, mo_volume_law=law)
    return None if config.mode == "zi" and gzi.reduces_to_zi else gzi


def run_simulation(config: RunConfig) -> tuple[SimulationResult, TickGrid]:
    grid = grid_from_config(config)
    sim = SimConfig(
        spec=intensity_from_config(config, grid),
        grid=grid,
        gzi=gzi_from_config(config),
        max_events=config.events,
        burn_in_events=config.burn_in,
        seed=config.seed,
        keep_books=False,
    )
    logger.info("Simulating %d events of the %s book (n=%d, seed=%d)",
                config.events, config.preset, grid.n, config.seed)
    return simulate(sim), grid


def simulate_to_files(config: RunConfig) -> SimulationManifest:
    """Write quotes.csv, trades.csv and manifest.json into config.out_dir."""
    result, grid = run_simulation(config)
    quotes, trades = history_to_records(result.history, grid)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_quotes(out_dir / "quotes.csv", quotes)
    write_trades(out_dir / "trades.csv", trades)

    manifest = SimulationManifest(
        config=config.model_copy(update={"n": grid.n}),
        grid=GridInfo(n=grid.n, tick_size=str(grid.tick_size), price_offset=str(grid.price_offset)),
        event_counts=dict(sorted(result.event_counts.items())),
        total_events=result.total_events,
        l1_jumps=max(len(result.history) - 1, 0),
        trades=len(trades),
        book_time=result.elapsed,
        absorbed=result.absorbed,
    )
    write_report(out_dir / "manifest.json", manifest)
    logger.info("Wrote %d quotes and %d trades to %s", len(quotes), len(trades), out_dir)
    return manifest
