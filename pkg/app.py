"""
Command-line entry point: survival curves, spread-option prices and preset reproduction.

Architecture Strategy: thin CLI over core.runner.ExperimentRunner
- Configuration: one JSON document, flags override its fields
- Output: CSV for curves/matrices, JSON for scalar summaries
- Exit codes: 0 success, 1 unexpected failure, 2 configuration error, 3 internal consistency error
"""

import logging
import sys
from pathlib import Path
from typing import Callable, List, Optional

import typer

from core.errors import ConfigurationError, ConsistencyError, DomainError

app = typer.Typer(
    add_completion=False,
    help="Coupled Brownian motions: copulas, spread survival and spread-option pricing."
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CONSISTENCY = 3


def setup_logging(level: str = "INFO"):
    """Console logging configuration (stderr: stdout carries CSV/JSON output)"""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True
    )

    # Suppress noisy libraries
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
    logging.getLogger("numexpr").setLevel(logging.WARNING)


def _execute(action: Callable[[], None]) -> None:
    """Runs a command body and maps exceptions to exit codes."""
    logger = logging.getLogger(__name__)
    try:
        action()
    except (ConfigurationError, DomainError) as e:
        logger.error(f"Configuration error: {e}")
        typer.echo(f"error: {e}", err=True)
        raise typer.Exit(code=EXIT_CONFIG)
    except ConsistencyError as e:
        logger.error(f"Internal consistency error: {e}")
        typer.echo(f"internal error: {e}", err=True)
        raise typer.Exit(code=EXIT_CONSISTENCY)
    except KeyboardInterrupt:
        logger.info("Interrupted, shutting down gracefully...")
        raise typer.Exit(code=EXIT_FAILURE)
    except typer.Exit:
        raise
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        raise typer.Exit(code=EXIT_FAILURE)


def _load(config_path: Path, seed, paths, dt, threads, level):
    from utils.file_handlers import ConfigFileHandler

    experiment = ConfigFileHandler.load_experiment(config_path)
    return experiment.with_overrides(seed=seed, n_paths=paths, dt=dt, threads=threads, level=level)


def _emit(out: Optional[Path], name: str, data: bytes) -> None:
    """Writes data to out/name, or to stdout when out is not given."""
    if out is None:
        sys.stdout.write(data.decode("utf-8"))
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_bytes(data)
    logging.getLogger(__name__).info(f"Wrote {out / name}")


@app.callback()
def main(
    log_level: str = typer.Option("INFO", "--log-level", help="DEBUG, INFO, WARNING or ERROR")
):
    """Coupled Brownian motion toolkit."""
    setup_logging(log_level)


@app.command()
def survival(
    config_path: Path = typer.Option(..., "--config", help="JSON experiment configuration"),
    seed: Optional[int] = typer.Option(None, "--seed", help="64-bit seed"),
    paths: Optional[int] = typer.Option(None, "--paths", help="Number of Monte Carlo paths"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step in years"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker thread cap"),
    level: Optional[float] = typer.Option(None, "--level", help="Confidence level"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory (stdout if omitted)")
):
    """Survival curve of the spread: analytic (when available) and empirical with bands."""
    def action():
        from core.runner import ExperimentRunner
        from utils.file_exporters import ExportFormat, generate_filename

        experiment = _load(config_path, seed, paths, dt, threads, level)
        runner = ExperimentRunner()
        for table in runner.run_survival(experiment):
            name = generate_filename(f"{table.label}_survival", ExportFormat.CSV)
            _emit(out, name, runner.exporter.export_survival_csv(table.rows()))

    _execute(action)


@app.command()
def price(
    config_path: Path = typer.Option(..., "--config", help="JSON commodity configuration"),
    seed: Optional[int] = typer.Option(None, "--seed", help="64-bit seed"),
    paths: Optional[int] = typer.Option(None, "--paths", help="Number of Monte Carlo paths"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step in years"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker thread cap"),
    level: Optional[float] = typer.Option(None, "--level", help="Confidence level"),
    out: Optional[Path] = typer.Option(None, "--out", help="Output directory (stdout if omitted)")
):
    """Monte Carlo price of the spread option for every configured product."""
    def action():
        from core.runner import ExperimentRunner
        from utils.file_exporters import ExportFormat, generate_filename

        experiment = _load(config_path, seed, paths, dt, threads, level)
        runner = ExperimentRunner()
        rows = runner.run_price(experiment)
        payload = {row.product: row.to_dict() for row in rows}
        _emit(out, generate_filename("price", ExportFormat.JSON), runner.exporter.export_json(payload))

    _execute(action)


@app.command()
def reproduce(
    preset: str = typer.Option(..., "--preset", help="Preset name (see 'presets')"),
    seed: Optional[int] = typer.Option(None, "--seed", help="64-bit seed"),
    paths: Optional[int] = typer.Option(None, "--paths", help="Number of Monte Carlo paths"),
    dt: Optional[float] = typer.Option(None, "--dt", help="Time step in years"),
    threads: Optional[int] = typer.Option(None, "--threads", help="Worker thread cap"),
    level: Optional[float] = typer.Option(None, "--level", help="Confidence level"),
    out: Path = typer.Option(Path("results"), "--out", help="Output directory")
):
    """Runs a named preset and writes its CSV files plus summary.json."""
    def action():
        from core.runner import ExperimentRunner

        summary = ExperimentRunner().run_reproduce(
            preset, out, seed=seed, n_paths=paths, dt=dt, threads=threads, level=level
        )
        typer.echo(f"{summary.preset}: {len(summary.files)} file(s) in {out / summary.preset}")

    _execute(action)


@app.command()
def presets():
    """Lists available presets."""
    def action():
        from core.presets import get_preset, get_preset_names

        lines: List[str] = []
        for name in get_preset_names():
            lines.append(f"{name:28s} {get_preset(name).description}")
        typer.echo("\n".join(lines))

    _execute(action)


if __name__ == "__main__":
    app()
