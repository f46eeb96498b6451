"""Command-line interface for uavalloc.

Provides commands for writing a configuration, training the agents, running
sweeps and comparisons, solving small instances exactly and plotting results.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import click
from rich import print  # type: ignore
from rich.table import Table

from uavalloc.core.config import (
    CONFIG_FILENAME,
    Config,
    ExperimentConfig,
    parse_override,
)
from uavalloc.core.errors import (
    UavAllocError,
    console,
    display_warning,
    exit_with_error,
    safe_execution,
)
from uavalloc.experiments.harness import (
    median_by,
    run_comparison,
    run_eval,
    run_oracle,
    run_sweep,
    run_training,
)
from uavalloc.experiments.render import render_csv
from uavalloc.utils.templates import render_config


@dataclass
class CliState:
    """Configuration sources collected by the command group."""

    config_path: Optional[Path] = None
    overrides: dict[str, Any] = field(default_factory=dict)
    full_scale: Optional[bool] = None

    def provider(self) -> Config:
        return Config(self.config_path, self.overrides, self.full_scale)

    def experiment_config(self) -> ExperimentConfig:
        return self.provider().experiment_config()


pass_state = click.make_pass_decorator(CliState)


@click.group()
@click.option(
    "--config",
    "config_path",
    type=click.Path(dir_okay=False, path_type=Path),
    help=f"TOML configuration file (default: ./{CONFIG_FILENAME}).",
)
@click.option(
    "--set",
    "assignments",
    multiple=True,
    metavar="SECTION.KEY=VALUE",
    help="Override one configuration value; repeatable.",
)
@click.option("--seed", type=int, help="Run a single seed.")
@click.option("--out-dir", type=click.Path(file_okay=False), help="Output root.")
@click.option(
    "--full-scale/--desk-scale",
    default=None,
    help="50 users and 1000 blocks instead of the desk-scale defaults.",
)
@click.pass_context
def app(
    ctx: click.Context,
    config_path: Optional[Path],
    assignments: tuple[str, ...],
    seed: Optional[int],
    out_dir: Optional[str],
    full_scale: Optional[bool],
):
    """uavalloc – joint bandwidth and power allocation for a UAV downlink."""
    overrides: dict[str, Any] = {}
    for assignment in assignments:
        try:
            key, value = parse_override(assignment)
        except UavAllocError as e:
            exit_with_error(str(e))
        overrides[key] = value
    if seed is not None:
        overrides["experiment.seeds"] = [seed]
    if out_dir is not None:
        overrides["experiment.out_dir"] = out_dir
    ctx.obj = CliState(config_path, overrides, full_scale)


@app.command()
def init():
    """Write an annotated configuration file to the current directory."""
    path = Path(CONFIG_FILENAME)
    if path.exists():
        display_warning(f"{CONFIG_FILENAME} already exists")
        return
    path.write_text(render_config(), encoding="utf-8")
    print(f"[green]Created {CONFIG_FILENAME}[/]")
    print("Next steps:")
    print(f"1. Review and customize {CONFIG_FILENAME}")
    print("2. Train both agents: uavalloc train")
    print("3. Compare against the baselines: uavalloc compare")


def _flatten(mapping: dict[str, Any], prefix: str = "") -> list[tuple[str, Any]]:
    items: list[tuple[str, Any]] = []
    for key, value in mapping.items():
        name = f"{prefix}.{key}" if prefix else key
        if isinstance(value, dict):
            items.extend(_flatten(value, name))
        else:
            items.append((name, value))
    return items


@app.command()
@pass_state
@safe_execution("Invalid configuration", exit_on_error=True, error_type=UavAllocError)
def show_config(state: CliState):
    """Show the merged, validated configuration."""
    cfg = state.experiment_config()
    print("[green]Current configuration:[/]")
    for key, value in _flatten(cfg.to_mapping()):
        print(f"  {key}: {value}")
    print(f"  [dim]config hash: {cfg.config_hash()}[/]")


@app.command()
@pass_state
@safe_execution("Training failed", exit_on_error=True, error_type=UavAllocError)
def train(state: CliState):
    """Train the bandwidth and power agents for every configured seed."""
    cfg = state.experiment_config()
    for seed in cfg.experiment.seeds:
        directory = run_training(cfg, seed)
        print(f"[green]Seed {seed}: artifacts in {directory}[/]")


def _parse_values(raw: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        exit_with_error(f"--values must be comma-separated numbers: {raw!r}")
        raise


@app.command()
@click.option(
    "--axis",
    type=click.Choice(
        ["threshold", "total_bandwidth", "height", "total_power", "fading"]
    ),
    help="Sweep axis (default: experiment.sweep_axis).",
)
@click.option("--values", help="Comma-separated sweep values.")
@click.option(
    "--thresholds",
    help="Comma-separated rate thresholds crossed with the total_power axis.",
)
@pass_state
@safe_execution("Sweep failed", exit_on_error=True, error_type=UavAllocError)
def sweep(
    state: CliState,
    axis: Optional[str],
    values: Optional[str],
    thresholds: Optional[str],
):
    """Train and solve across one scenario parameter."""
    cfg = state.experiment_config()
    overrides: dict[str, Any] = {}
    if axis is not None:
        overrides["experiment.sweep_axis"] = axis
    if values is not None:
        overrides["experiment.sweep_values"] = _parse_values(values)
    if thresholds is not None:
        overrides["experiment.threshold_values"] = _parse_values(thresholds)
    if overrides:
        cfg = cfg.replace(overrides)
    report = run_sweep(cfg)

    table = Table(title=f"Sweep over {report.axis}")
    table.add_column(report.axis, justify="right")
    table.add_column("median best n_s", justify="right")
    table.add_column("median mean n_s", justify="right")
    means = median_by(report.rows, "value", "best_mean_n_s")
    for value, median in median_by(report.rows, "value").items():
        table.add_row(f"{value:g}", f"{median:g}", f"{means[value]:.2f}")
    console.print(table)
    print(f"[green]Sweep written to {report.path}[/]")


@app.command()
@pass_state
@safe_execution("Comparison failed", exit_on_error=True, error_type=UavAllocError)
def compare(state: CliState):
    """Compare the joint scheme with DQN-only, DDPG-only and equal allocation."""
    report = run_comparison(state.experiment_config())

    table = Table(title="Served users by scheme")
    table.add_column("scheme")
    table.add_column("median n_s", justify="right")
    for method, median in median_by(report.rows, "method", "n_s").items():
        table.add_row(method, f"{median:g}")
    console.print(table)

    ratios = Table(title="Joint gain over each baseline")
    ratios.add_column("baseline")
    ratios.add_column("measured", justify="right")
    ratios.add_column("published (full scale)", justify="right")
    for r in report.ratios:
        measured = "n/a" if r["ratio"] is None else f"{r['ratio']:.2f}"
        ratios.add_row(r["baseline"], measured, f"{r['published_ratio']:.2f}")
    console.print(ratios)
    print(f"[green]Comparison written to {report.directory}[/]")


@app.command()
@click.option("--power-grid", default=21, show_default=True, help="Power levels.")
@click.option("--fine-grid", is_flag=True, help="Allow more than 21 power levels.")
@pass_state
@safe_execution("Oracle failed", exit_on_error=True, error_type=UavAllocError)
def oracle(state: CliState, power_grid: int, fine_grid: bool):
    """Solve the configured scenario exactly on a power grid (at most 6 users)."""
    alloc, directory = run_oracle(
        state.experiment_config(), power_grid=power_grid, allow_fine_grid=fine_grid
    )
    print(
        f"[green]Oracle serves {alloc.n_s} users with {alloc.sum_power:.4f} W "
        f"and {alloc.sum_blocks} blocks[/]"
    )
    print(f"Allocation written to {directory}")


@app.command(name="eval")
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@safe_execution("Evaluation failed", exit_on_error=True, error_type=UavAllocError)
def evaluate(run_dir: str):
    """Re-solve a training run's scenario from its saved models."""
    alloc, path = run_eval(run_dir)
    print(
        f"[green]Joint solution serves {alloc.n_s} users "
        f"({alloc.sum_power:.4f} W, {alloc.sum_blocks} blocks)[/]"
    )
    print(f"Allocation written to {path}")


@app.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(dir_okay=False), help="Image path.")
@click.option("--window", default=20, show_default=True, help="Smoothing window.")
@safe_execution("Plotting failed", exit_on_error=True, error_type=UavAllocError)
def plot(csv_path: str, out: Optional[str], window: int):
    """Render a log, sweep or comparison CSV to an image."""
    path = render_csv(csv_path, out, window)
    print(f"[green]Figure written to {path}[/]")


if __name__ == "__main__":
    app()
