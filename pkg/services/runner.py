"""Time loop of one simulation: step, record, abort on tangling, summarize."""
from __future__ import annotations

import logging
import math
import time
from contextlib import ExitStack
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from framework.geometry import minimum_gap
from framework.solver import step
from models.config import SimConfig
from models.trajectory import RunMetrics, StepStats
from services import trajectory_io as tio
from services.scenario import build_system
from utils.errors import NonConvergence

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    metrics: RunMetrics
    paths: Dict[str, Path]
    stats: List[StepStats] = field(default_factory=list)

    @property
    def out_dir(self) -> Path:
        return self.paths["trajectory"].parent


def num_steps(duration: float, dt: float) -> int:
    return int(math.floor(duration / dt + 1e-9))


def run(config: SimConfig, out_dir: Optional[Union[str, Path]] = None) -> RunResult:
    """Simulate ``config.run.duration`` seconds and write trajectory, stats, forces and metrics."""
    out = Path(out_dir if out_dir is not None else config.run.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectory": out / tio.TRAJECTORY_FILE,
        "stats": out / tio.STATS_FILE,
        "metrics": out / tio.METRICS_FILE,
        "config": out / tio.CONFIG_FILE,
    }
    if config.run.log_forces:
        paths["forces"] = out / tio.FORCES_FILE

    paths["config"].write_text(config.model_dump_json(indent=2) + "\n")

    h = config.material.radius
    reach = config.contact.delta_hat_m(h)
    stride = config.run.stride
    total = num_steps(config.run.duration, config.solver.dt)

    state = build_system(config)
    stats: List[StepStats] = []
    failures = 0
    aborted = False
    started = time.perf_counter()
    logger.info("running %d steps of %.3g s into %s", total, config.solver.dt, out)

    with ExitStack() as files:
        traj = files.enter_context(tio.TrajectoryWriter(paths["trajectory"]))
        stats_out = files.enter_context(tio.StatsWriter(paths["stats"]))
        forces_out = files.enter_context(tio.ForceLogWriter(paths["forces"])) if "forces" in paths else None
        traj.write(state.time, state.rods)
        for n in range(1, total + 1):
            recorded = n % stride == 0
            try:
                state, st = step(state, config, record_clamp=recorded and forces_out is not None)
                failures = 0
            except NonConvergence as exc:
                failures += 1
                state, st = exc.partial
                if failures >= config.run.max_consecutive_failures:
                    logger.warning(
                        "tangling abort at t=%.4f s after %d consecutive non-converged steps",
                        state.time, failures,
                    )
                    aborted = True
            st.min_gap_m = _gap_or_none(minimum_gap(state.rods, h, reach))
            stats.append(st)
            stats_out.write(st)
            if recorded or aborted:
                traj.write(state.time, state.rods)
                if forces_out is not None and st.clamp_forces is not None:
                    forces_out.write(state.time, st.clamp_forces)
                logger.info(
                    "t=%.4f s step %d: %d iters, %d contacts, k=%.3e, min gap %s",
                    state.time, st.step, st.newton_iters, st.contacts, st.contact_stiffness,
                    "-" if st.min_gap_m is None else f"{st.min_gap_m:.3e} m",
                )
            if aborted:
                break

    metrics = RunMetrics.from_stats(
        stats,
        wall_time_s=time.perf_counter() - started,
        sim_end_s=round(state.time, 12),
        aborted=aborted,
    )
    tio.write_metrics(paths["metrics"], metrics)
    logger.info(
        "done: %d steps, AIPTS %.3f, ATPTS %.2f ms, sim end %.4f s%s",
        metrics.steps, metrics.aipts, metrics.atpts_ms, metrics.sim_end_s, " (aborted)" if aborted else "",
    )
    return RunResult(metrics=metrics, paths=paths, stats=stats)


def _gap_or_none(gap: float) -> Optional[float]:
    return None if math.isinf(gap) else gap
