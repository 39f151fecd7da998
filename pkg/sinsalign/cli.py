"""
``align`` command line.

    align bench --config <path> [--seed N] [--out DIR] [--methods oba,oba_kf,fgo] [--runs N]
    align simulate --config <path> --out DIR [--seed N]

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

import logging
import os
from pathlib import Path
from typing import Optional

import typer
from dotenv import load_dotenv
from rich.console import Console

from sinsalign.bench.config import ConfigError, RunConfig, apply_overrides, load_config
from sinsalign.bench.output import write_imu_csv, write_truth_csv
from sinsalign.bench.runner import run_benchmark
from sinsalign.bench.view import MetricsTablePrinter
from sinsalign.core.log.alignLogger import logger
from sinsalign.core.log.loggiz import Loggiz
from sinsalign.nav.domain import AlignError
from sinsalign.nav.simulator import simulate as simulate_stream

EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ERROR = 3
LOG_DIR_ENV = "SINSALIGN_LOG_DIR"

app = typer.Typer(help="Self-alignment toolkit for strapdown inertial navigation.", no_args_is_help=True, add_completion=False)
err_console = Console(stderr=True)


@app.callback()
def setup(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log at DEBUG level.")):
    load_dotenv()
    log_dir = os.getenv(LOG_DIR_ENV, "")
    log_path = Loggiz.setup(
        app_name="align",
        setup_console=True,
        setup_file=bool(log_dir),
        console_level=logging.DEBUG if verbose else logging.INFO,
        file_log_base_path=log_dir,
    )
    if log_path:
        logger.debug(f"Logging to {log_path}")


def _load(config: Path, **overrides) -> RunConfig:
    return apply_overrides(load_config(config), **overrides)


def _fail(code: int, message: str):
    err_console.print(f"[red]{message}[/red]")
    raise typer.Exit(code)


@app.command()
def bench(
    config: Path = typer.Option(..., "--config", help="TOML benchmark configuration."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Base seed of the Monte Carlo runs."),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory."),
    methods: Optional[str] = typer.Option(None, "--methods", help="Comma separated subset of oba,oba_kf,fgo."),
    runs: Optional[int] = typer.Option(None, "--runs", help="Number of Monte Carlo runs."),
):
    """Run the Monte Carlo benchmark and write metrics, plot data and a summary."""
    try:
        cfg = _load(
            config,
            seed=seed,
            output_dir=str(out) if out is not None else None,
            methods=[m.strip() for m in methods.split(",") if m.strip()] if methods is not None else None,
            runs=runs,
        )
        result = run_benchmark(cfg)
    except ConfigError as exc:
        _fail(EXIT_CONFIG_ERROR, str(exc))
    except (AlignError, OSError) as exc:
        logger.error(f"Benchmark failed: {exc}")
        _fail(EXIT_RUNTIME_ERROR, str(exc))
    MetricsTablePrinter(result).print_metrics()


@app.command()
def simulate(
    config: Path = typer.Option(..., "--config", help="TOML configuration; only [scenario] is used."),
    out: Path = typer.Option(..., "--out", help="Output directory for imu.csv and truth.csv."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the scenario seed."),
):
    """Simulate the configured scenario and dump the raw samples and the ground truth."""
    try:
        cfg = _load(config, seed=seed)
        stream, truth = simulate_stream(cfg.scenario.to_scenario())
        write_imu_csv(stream, out / "imu.csv")
        write_truth_csv(truth, out / "truth.csv")
    except ConfigError as exc:
        _fail(EXIT_CONFIG_ERROR, str(exc))
    except (AlignError, OSError) as exc:
        logger.error(f"Simulation failed: {exc}")
        _fail(EXIT_RUNTIME_ERROR, str(exc))
    logger.info(f"Simulated stream checksum {stream.checksum()}")


def main():
    app()


if __name__ == "__main__":
    main()
