import logging
from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from config import configure_logging
from experiments.coordination import EXIT_CONFIG_ERROR, run_experiment
from experiments.experiment_config import list_presets, load_config, resolve_config_path
from experiments.system_builder import build_system

logger = logging.getLogger(__name__)

app = typer.Typer(help="Fourier analysis experiments on reduced twisted crossed products.", add_completion=False)
presets_app = typer.Typer(help="Shipped experiment presets.")
app.add_typer(presets_app, name="presets")


def _load(name: str):
    try:
        return load_config(name)
    except ValidationError as e:
        logger.error(f"Invalid config {name}:\n{e}")
    except (ValueError, OSError) as e:
        logger.error(f"Could not read config {name}: {e}")
    raise typer.Exit(EXIT_CONFIG_ERROR)


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, "--log-level", help="Override TWISTED_LOG_LEVEL.")):
    configure_logging(log_level.upper() if log_level else None)


@app.command()
def run(
    config: str = typer.Argument(..., help="Config path or preset name."),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the config seed."),
    output_dir: Optional[Path] = typer.Option(None, "--output-dir", help="Directory for the JSON/CSV report."),
):
    """Run one experiment and write its report."""
    experiment = _load(config)
    status, path = run_experiment(experiment, seed=seed, output_dir=output_dir, source=resolve_config_path(config))
    if path is not None:
        typer.echo(str(path))
    raise typer.Exit(status)


@app.command()
def validate(config: str = typer.Argument(..., help="Config path or preset name.")):
    """Parse a config and assemble its system without running the experiment."""
    experiment = _load(config)
    if experiment.system is not None:
        try:
            system = build_system(experiment.system)
        except ValueError as e:
            logger.error(f"Could not assemble the system: {e}")
            raise typer.Exit(EXIT_CONFIG_ERROR)
        typer.echo(f"{experiment.experiment}: {system.name} ({system.provenance})")
    else:
        typer.echo(f"{experiment.experiment}: built-in system")


@presets_app.command("list")
def presets_list():
    """List the shipped presets."""
    table = Table(title="Presets")
    table.add_column("name")
    table.add_column("experiment")
    table.add_column("description")
    for preset in list_presets():
        table.add_row(preset["name"], preset["experiment"], preset["description"])
    Console().print(table)


if __name__ == "__main__":
    app()
