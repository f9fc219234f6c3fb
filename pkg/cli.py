"""Command-line front end: ``run``, ``diff``, ``propulsion`` and ``sweep``."""
from __future__ import annotations

import functools
from pathlib import Path
from typing import Optional, Sequence, Tuple

import click

from models.config import SimConfig
from services import analysis
from services import trajectory_io as tio
from services.runner import run as run_simulation
from utils.errors import FlagellaError
from utils.logs import configure_logging

EXIT_IO = 4


def _reports_errors(fn):
    """Map library errors onto exit codes (2 config, 3 solver, 4 I/O)."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FlagellaError as exc:
            click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
            raise SystemExit(exc.exit_code)
        except OSError as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(EXIT_IO)

    return wrapper


def _load(config_path: str, **overrides) -> SimConfig:
    return SimConfig.from_toml(config_path).with_overrides(**overrides)


@click.group()
@click.option("--log-level", default=None, help="Logging level (default: $FLAGELLA_LOG_LEVEL or INFO).")
def cli(log_level: Optional[str]) -> None:
    """Helical flagella simulations with implicit contact, friction and Stokeslet hydrodynamics."""
    configure_logging(log_level)


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--duration", type=float, default=None, help="Simulated duration [s].")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Output directory.")
@click.option("--stride", type=int, default=None, help="Steps per trajectory record.")
@click.option("--mu", type=float, default=None, help="Friction coefficient.")
@click.option("--num-flagella", type=int, default=None, help="Number of flagella M.")
@_reports_errors
def run(config: str, duration, out_dir, stride, mu, num_flagella) -> None:
    """Simulate CONFIG and write trajectory.csv, stats.csv, forces.csv and metrics.json."""
    cfg = _load(config, duration=duration, out_dir=out_dir, stride=stride, mu=mu, num_flagella=num_flagella)
    result = run_simulation(cfg)
    m = result.metrics
    click.echo(
        f"{'aborted' if m.aborted else 'finished'} at t={m.sim_end_s:g} s: {m.steps} steps, "
        f"AIPTS {m.aipts:.3f}, ATPTS {m.atpts_ms:.2f} ms -> {result.out_dir}"
    )


@cli.command()
@click.argument("traj_a", type=click.Path(dir_okay=False))
@click.argument("traj_b", type=click.Path(dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True, help="CSV of time,e_bar.")
@click.option("--radius", type=float, default=None, help="Rod radius h [m]; read from the run config when omitted.")
@_reports_errors
def diff(traj_a: str, traj_b: str, output: str, radius: Optional[float]) -> None:
    """Normalized average node distance between two trajectories."""
    h = radius if radius is not None else tio.read_run_config(Path(traj_a).parent).material.radius
    series = analysis.diff_files(traj_a, traj_b, h, out=output)
    click.echo(f"{len(series.times)} records, max e_bar {series.e_bar.max():.6g} -> {output}")


@cli.command()
@click.argument("run_dir", type=click.Path(file_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), required=True, help="CSV of time,fp_bar.")
@click.option("--window", type=(float, float), default=None, help="Averaging window START END [s].")
@_reports_errors
def propulsion(run_dir: str, output: str, window: Optional[Tuple[float, float]]) -> None:
    """Normalized propulsive force from a run's clamp reaction log."""
    material = tio.read_run_config(run_dir).material
    series = analysis.propulsion_of_run(run_dir, material, window=window, out=output)
    click.echo(f"mean normalized propulsive force {series.mean:.6g} over {len(series.times)} records -> {output}")


@cli.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--mu", "mus", type=float, multiple=True, required=True, help="Friction coefficient (repeatable).")
@click.option("--duration", type=float, default=None, help="Simulated duration [s].")
@click.option("--out-dir", type=click.Path(file_okay=False), default=None, help="Sweep directory.")
@click.option("--num-flagella", type=int, default=None, help="Number of flagella M.")
@_reports_errors
def sweep(config: str, mus: Sequence[float], duration, out_dir, num_flagella) -> None:
    """One run per friction coefficient; writes sweep.csv (mu,aipts,sim_end_s,mean_fp_bar)."""
    cfg = _load(config, duration=duration, num_flagella=num_flagella)
    target = Path(out_dir if out_dir is not None else cfg.run.out_dir)
    for p in analysis.sweep(cfg, mus, target):
        click.echo(f"mu={p.mu:g}: AIPTS {p.aipts:.3f}, sim end {p.sim_end_s:g} s, mean fp_bar {p.mean_fp_bar:.6g}")


if __name__ == "__main__":
    cli()
