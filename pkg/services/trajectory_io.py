"""On-disk formats of a run: trajectory, per-step stats, clamp forces and metrics."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import IO, List, Optional, Sequence, Union

import numpy as np

from framework.rod import RodState
from models.config import SimConfig
from models.trajectory import RunMetrics, StepStats, TrajectoryRecord
from utils.errors import MissingForceLog, TrajectoryFormatError

logger = logging.getLogger(__name__)

TRAJECTORY_HEADER = ["time", "rod", "node", "x", "y", "z", "theta"]
STATS_HEADER = [
    "step",
    "time",
    "newton_iters",
    "line_search_iters",
    "wall_ms",
    "contacts",
    "cumulative_iters",
    "cumulative_wall_s",
    "min_gap_m",
]
FORCES_HEADER = ["time", "rod", "fx", "fy", "fz"]

TRAJECTORY_FILE = "trajectory.csv"
STATS_FILE = "stats.csv"
FORCES_FILE = "forces.csv"
METRICS_FILE = "metrics.json"
CONFIG_FILE = "config.json"

PathLike = Union[str, Path]


def fmt(value: float) -> str:
    return format(float(value), ".17g")


class _CsvWriter:
    header: List[str] = []

    def __init__(self, path: PathLike):
        self.path = Path(path)
        self._fh: Optional[IO[str]] = None
        self._writer = None

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="")
        self._writer = csv.writer(self._fh, lineterminator="\n")
        self._writer.writerow(self.header)
        return self

    def __exit__(self, *exc) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def _rows(self, rows) -> None:
        self._writer.writerows(rows)
        self._fh.flush()


class TrajectoryWriter(_CsvWriter):
    header = TRAJECTORY_HEADER

    def write(self, time: float, rods: Sequence[RodState]) -> None:
        rows = []
        t = fmt(time)
        for r, rod in enumerate(rods):
            for i, x in enumerate(rod.nodes):
                theta = fmt(rod.twists[i]) if i < rod.num_edges else ""
                rows.append([t, r, i, fmt(x[0]), fmt(x[1]), fmt(x[2]), theta])
        self._rows(rows)


class StatsWriter(_CsvWriter):
    header = STATS_HEADER

    def __enter__(self):
        super().__enter__()
        self._iters = 0
        self._wall_s = 0.0
        return self

    def write(self, stats: StepStats) -> None:
        self._iters += stats.newton_iters
        self._wall_s += stats.wall_ms / 1e3
        gap = "" if stats.min_gap_m is None else fmt(stats.min_gap_m)
        self._rows(
            [[
                stats.step,
                fmt(stats.time),
                stats.newton_iters,
                stats.line_search_iters,
                fmt(stats.wall_ms),
                stats.contacts,
                self._iters,
                fmt(self._wall_s),
                gap,
            ]]
        )


class ForceLogWriter(_CsvWriter):
    header = FORCES_HEADER

    def write(self, time: float, clamp_forces: Sequence[Sequence[float]]) -> None:
        t = fmt(time)
        self._rows([[t, r, fmt(f[0]), fmt(f[1]), fmt(f[2])] for r, f in enumerate(clamp_forces)])


@dataclass
class Trajectory:
    times: np.ndarray
    nodes: np.ndarray
    twists: np.ndarray

    @property
    def num_rods(self) -> int:
        return self.nodes.shape[1]

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[2]

    def record(self, index: int) -> TrajectoryRecord:
        """Snapshot at record ``index`` (negative counts from the end)."""
        try:
            nodes = self.nodes[index]
        except IndexError as exc:
            raise TrajectoryFormatError(f"record {index} out of range (0..{len(self.times) - 1})") from exc
        return TrajectoryRecord(
            time=float(self.times[index]),
            nodes=nodes.tolist(),
            twists=self.twists[index].tolist(),
        )


def _read_table(path: Path, header: List[str]) -> List[List[str]]:
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError as exc:
        raise TrajectoryFormatError(f"file not found: {path}") from exc
    if not rows or rows[0] != header:
        raise TrajectoryFormatError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def read_trajectory(path: PathLike) -> Trajectory:
    path = Path(path)
    rows = _read_table(path, TRAJECTORY_HEADER)
    if not rows:
        raise TrajectoryFormatError(f"{path}: no records")
    try:
        times = np.array([float(r[0]) for r in rows])
        rod_ids = np.array([int(r[1]) for r in rows])
        node_ids = np.array([int(r[2]) for r in rows])
        xyz = np.array([[float(v) for v in r[3:6]] for r in rows])
        theta = np.array([float(r[6]) if r[6] != "" else np.nan for r in rows])
    except (ValueError, IndexError) as exc:
        raise TrajectoryFormatError(f"{path}: malformed row ({exc})") from exc

    n_rods = int(rod_ids.max()) + 1
    n_nodes = int(node_ids.max()) + 1
    per_record = n_rods * n_nodes
    if len(rows) % per_record:
        raise TrajectoryFormatError(f"{path}: row count is not a multiple of rods x nodes")
    n_rec = len(rows) // per_record
    nodes = xyz.reshape(n_rec, n_rods, n_nodes, 3)
    twists = theta.reshape(n_rec, n_rods, n_nodes)[:, :, :-1]
    rec_times = times.reshape(n_rec, per_record)
    if np.any(rec_times != rec_times[:, :1]):
        raise TrajectoryFormatError(f"{path}: mixed time stamps inside a record")
    return Trajectory(times=rec_times[:, 0].copy(), nodes=nodes, twists=twists)


def read_force_log(path: PathLike):
    """(times (T,), forces (T, M, 3)) from a clamp reaction log."""
    path = Path(path)
    if not path.exists():
        raise MissingForceLog(f"no clamp force log at {path}; rerun with run.log_forces = true")
    rows = _read_table(path, FORCES_HEADER)
    if not rows:
        return np.zeros(0), np.zeros((0, 0, 3))
    times = np.array([float(r[0]) for r in rows])
    rods = np.array([int(r[1]) for r in rows])
    forces = np.array([[float(v) for v in r[2:5]] for r in rows])
    m = int(rods.max()) + 1
    if len(rows) % m:
        raise TrajectoryFormatError(f"{path}: row count is not a multiple of the rod count")
    return times.reshape(-1, m)[:, 0].copy(), forces.reshape(-1, m, 3)


def write_metrics(path: PathLike, metrics: RunMetrics) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(metrics.model_dump(), indent=2) + "\n")


def read_metrics(path: PathLike) -> RunMetrics:
    try:
        return RunMetrics.model_validate_json(Path(path).read_text())
    except FileNotFoundError as exc:
        raise TrajectoryFormatError(f"file not found: {path}") from exc


def read_run_config(run_dir: PathLike) -> SimConfig:
    """Config a run was made with; defaults when the run directory holds none."""
    path = Path(run_dir) / CONFIG_FILE
    if not path.exists():
        logger.warning("no %s in %s; using default parameters", CONFIG_FILE, run_dir)
        return SimConfig()
    return SimConfig.from_mapping(json.loads(path.read_text()))


def write_series(path: PathLike, header: Sequence[str], columns: Sequence[Sequence[float]]) -> None:
    """Column-oriented CSV (all columns must share a length)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([fmt(v) for v in row])
