"""Post-processing of finished runs: trajectory difference, propulsive force, friction sweeps."""
from __future__ import annotations

import logging
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from models.config import SimConfig
from models.params import MaterialParams
from services import trajectory_io as tio
from services.runner import run
from utils.errors import ShapeMismatch

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class DiffSeries(NamedTuple):
    times: np.ndarray
    e_bar: np.ndarray


class PropulsionSeries(NamedTuple):
    times: np.ndarray
    fp_bar: np.ndarray
    mean: float


class GapSeries(NamedTuple):
    times: np.ndarray
    gap: np.ndarray


class SweepPoint(NamedTuple):
    mu: float
    aipts: float
    sim_end_s: float
    mean_fp_bar: float


def diff(traj_a: tio.Trajectory, traj_b: tio.Trajectory, h: float) -> DiffSeries:
    """Normalized average node distance e(t) = sum |x_a - x_b| / (M N h) per record."""
    if traj_a.nodes.shape != traj_b.nodes.shape:
        raise ShapeMismatch(
            "trajectories have different layouts",
            {"a": list(traj_a.nodes.shape), "b": list(traj_b.nodes.shape)},
        )
    if not np.allclose(traj_a.times, traj_b.times, rtol=0.0, atol=1e-9):
        raise ShapeMismatch("trajectories are recorded on different time grids")
    _, M, N, _ = traj_a.nodes.shape
    dist = np.linalg.norm(traj_a.nodes - traj_b.nodes, axis=-1)
    return DiffSeries(traj_a.times.copy(), dist.sum(axis=(1, 2)) / (M * N * h))


def diff_files(path_a: PathLike, path_b: PathLike, h: float, out: Optional[PathLike] = None) -> DiffSeries:
    series = diff(tio.read_trajectory(path_a), tio.read_trajectory(path_b), h)
    if out is not None:
        tio.write_series(out, ["time", "e_bar"], [series.times, series.e_bar])
    return series


def distal_gap(traj: tio.Trajectory, h: float) -> GapSeries:
    """Mean inter-rod surface gap over the distal half of the rods, per record.

    Each distal node of a rod takes the distance to the nearest distal node of every
    other rod; the series is the mean of those distances minus 2h.
    """
    _, M, N, _ = traj.nodes.shape
    if M < 2:
        raise ShapeMismatch("the distal gap needs at least two rods", {"rods": M})
    others = ~np.eye(M, dtype=bool)
    gaps = np.empty(len(traj.times))
    for t, nodes in enumerate(traj.nodes[:, :, N // 2 :, :]):
        sep = np.linalg.norm(nodes[:, None, :, None, :] - nodes[None, :, None, :, :], axis=-1)
        nearest = sep.min(axis=-1)  # [a, b, node of a]
        gaps[t] = nearest[others].mean() - 2.0 * h
    return GapSeries(traj.times.copy(), gaps)


def normalized_force(force: np.ndarray, material: MaterialParams) -> np.ndarray:
    """F h^2 / (E I)."""
    return np.asarray(force) * material.radius**2 / material.EI


def propulsive_force(
    times: np.ndarray,
    clamp_forces: np.ndarray,
    material: MaterialParams,
    window: Optional[Tuple[float, float]] = None,
) -> PropulsionSeries:
    """Normalized thrust along +z from the clamp reactions, summed over rods.

    The clamps push the rods with R; the fluid pushes back on the clamps with -R,
    so the axial propulsive force is -sum R_z. ``window`` bounds the time average.
    """
    if len(times) == 0:
        return PropulsionSeries(np.zeros(0), np.zeros(0), 0.0)
    fp = -np.asarray(clamp_forces)[:, :, 2].sum(axis=1)
    fp_bar = normalized_force(fp, material)
    mask = np.ones(len(times), dtype=bool)
    if window is not None:
        mask = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    mean = float(fp_bar[mask].mean()) if mask.any() else 0.0
    return PropulsionSeries(np.asarray(times, dtype=float), fp_bar, mean)


def propulsion_of_run(
    run_dir: PathLike,
    material: MaterialParams,
    window: Optional[Tuple[float, float]] = None,
    out: Optional[PathLike] = None,
) -> PropulsionSeries:
    times, forces = tio.read_force_log(Path(run_dir) / tio.FORCES_FILE)
    series = propulsive_force(times, forces, material, window)
    if out is not None:
        tio.write_series(out, ["time", "fp_bar"], [series.times, series.fp_bar])
    return series


def sweep(config: SimConfig, mus: Sequence[float], out_dir: PathLike) -> List[SweepPoint]:
    """One run per friction coefficient; writes ``sweep.csv`` next to the run directories."""
    out_dir = Path(out_dir)
    points: List[SweepPoint] = []
    for mu in mus:
        cfg = config.with_overrides(mu=mu)
        cfg.run.log_forces = True
        result = run(cfg, out_dir / f"mu_{mu:g}")
        fp = propulsion_of_run(result.out_dir, cfg.material)
        points.append(SweepPoint(mu, result.metrics.aipts, result.metrics.sim_end_s, fp.mean))
        logger.info("mu=%g: AIPTS %.3f, sim end %.4f s, mean Fp %.4g", mu, *points[-1][1:])
    tio.write_series(
        out_dir / "sweep.csv",
        ["mu", "aipts", "sim_end_s", "mean_fp_bar"],
        [[p.mu for p in points], [p.aipts for p in points], [p.sim_end_s for p in points],
         [p.mean_fp_bar for p in points]],
    )
    return points
