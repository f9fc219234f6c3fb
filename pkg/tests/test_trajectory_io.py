from __future__ import annotations

import numpy as np
import pytest

from models.config import SimConfig
from models.trajectory import RunMetrics, StepStats
from services import trajectory_io as tio
from tests.helpers import straight_rod, wavy_rod
from utils.errors import MissingForceLog, TrajectoryFormatError


def _rods(rng):
    return [wavy_rod(rng, num_nodes=5, edge=1.0 / 3.0), wavy_rod(rng, num_nodes=5, edge=0.1)]


class TestTrajectoryFile:
    def test_full_precision_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        rods = _rods(rng)
        path = tmp_path / "trajectory.csv"
        with tio.TrajectoryWriter(path) as writer:
            writer.write(0.0, rods)
            writer.write(0.1, rods)
        traj = tio.read_trajectory(path)
        assert traj.nodes.shape == (2, 2, 5, 3)
        assert traj.twists.shape == (2, 2, 4)
        np.testing.assert_array_equal(traj.times, [0.0, 0.1])
        np.testing.assert_array_equal(traj.nodes[1, 0], rods[0].nodes)
        np.testing.assert_array_equal(traj.nodes[1, 1], rods[1].nodes)

    def test_last_node_has_no_twist(self, tmp_path):
        path = tmp_path / "trajectory.csv"
        with tio.TrajectoryWriter(path) as writer:
            writer.write(0.0, [straight_rod([0, 0, 0], [1, 0, 0], 3)])
        lines = path.read_text().splitlines()
        assert lines[0] == "time,rod,node,x,y,z,theta"
        assert lines[1] == "0,0,0,0,0,0,0"
        assert lines[-1].endswith(",")

    def test_record_snapshot(self, tmp_path):
        rods = _rods(np.random.default_rng(1))
        path = tmp_path / "trajectory.csv"
        with tio.TrajectoryWriter(path) as writer:
            writer.write(0.0, rods)
            writer.write(0.5, rods)
        traj = tio.read_trajectory(path)
        last = traj.record(-1)
        assert last.time == 0.5
        assert len(last.nodes) == 2 and len(last.nodes[0]) == 5
        assert len(last.twists[0]) == 4
        with pytest.raises(TrajectoryFormatError):
            traj.record(5)

    def test_missing_file(self, tmp_path):
        with pytest.raises(TrajectoryFormatError, match="not found"):
            tio.read_trajectory(tmp_path / "nope.csv")

    def test_wrong_header(self, tmp_path):
        path = tmp_path / "trajectory.csv"
        path.write_text("t,x\n0,1\n")
        with pytest.raises(TrajectoryFormatError, match="header"):
            tio.read_trajectory(path)

    def test_malformed_value(self, tmp_path):
        path = tmp_path / "trajectory.csv"
        path.write_text("time,rod,node,x,y,z,theta\n0,0,0,abc,0,0,0\n0,0,1,1,0,0,\n")
        with pytest.raises(TrajectoryFormatError, match="malformed"):
            tio.read_trajectory(path)


class TestStatsFile:
    def test_cumulative_columns(self, tmp_path):
        path = tmp_path / "stats.csv"
        with tio.StatsWriter(path) as writer:
            writer.write(StepStats(step=1, time=0.001, newton_iters=3, wall_ms=10.0, min_gap_m=2e-4))
            writer.write(StepStats(step=2, time=0.002, newton_iters=4, wall_ms=5.0))
        header, first, second = [line.split(",") for line in path.read_text().splitlines()]
        assert header == tio.STATS_HEADER
        assert first[header.index("cumulative_iters")] == "3"
        assert second[header.index("cumulative_iters")] == "7"
        assert float(second[header.index("cumulative_wall_s")]) == pytest.approx(0.015)
        assert float(first[header.index("min_gap_m")]) == pytest.approx(2e-4)
        assert second[header.index("min_gap_m")] == ""


class TestForceLog:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "forces.csv"
        with tio.ForceLogWriter(path) as writer:
            writer.write(0.01, [[1.0, 2.0, 3.0], [-1.0, 0.5, 0.25]])
            writer.write(0.02, [[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]])
        times, forces = tio.read_force_log(path)
        np.testing.assert_array_equal(times, [0.01, 0.02])
        assert forces.shape == (2, 2, 3)
        np.testing.assert_array_equal(forces[0, 1], [-1.0, 0.5, 0.25])

    def test_missing(self, tmp_path):
        with pytest.raises(MissingForceLog):
            tio.read_force_log(tmp_path / "forces.csv")


class TestMetricsAndConfig:
    def test_metrics_round_trip(self, tmp_path):
        stats = [
            StepStats(step=1, time=0.001, newton_iters=2, wall_ms=4.0, contacts=0, min_gap_m=3e-4),
            StepStats(step=2, time=0.002, newton_iters=4, wall_ms=8.0, contacts=3, min_gap_m=-2e-5),
        ]
        metrics = RunMetrics.from_stats(stats, wall_time_s=0.02, sim_end_s=0.002, aborted=False)
        assert metrics.aipts == 3.0
        assert metrics.atpts_ms == 6.0
        assert metrics.aipts_contact == 4.0
        assert metrics.contact_steps == 1
        assert metrics.min_gap_m == -2e-5
        path = tmp_path / "metrics.json"
        tio.write_metrics(path, metrics)
        assert tio.read_metrics(path) == metrics

    def test_run_config_defaults_when_absent(self, tmp_path):
        assert tio.read_run_config(tmp_path) == SimConfig()

    def test_run_config_read_back(self, tmp_path):
        cfg = SimConfig.from_mapping({"material": {"radius": 2e-3}, "friction": {"mu": 0.3}})
        (tmp_path / tio.CONFIG_FILE).write_text(cfg.model_dump_json())
        assert tio.read_run_config(tmp_path) == cfg

    def test_series(self, tmp_path):
        path = tmp_path / "series.csv"
        tio.write_series(path, ["time", "e_bar"], [[0.0, 0.1], [0.0, 1.0 / 3.0]])
        lines = path.read_text().splitlines()
        assert lines == ["time,e_bar", "0,0", "0.10000000000000001,0.33333333333333331"]
