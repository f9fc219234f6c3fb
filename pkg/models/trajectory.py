from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field


class StepStats(BaseModel):
    """Solver bookkeeping for one time step."""

    step: int = Field(0, ge=0, description="Step index (1-based once taken).")
    time: float = Field(..., description="Simulated time at the end of the step [s].")
    newton_iters: int = Field(0, ge=0, description="Newton iterations of the step.")
    line_search_iters: int = Field(0, ge=0, description="Line-search bisections summed over the step.")
    wall_ms: float = Field(0.0, ge=0, description="Wall-clock time of the step [ms].")
    contacts: int = Field(0, ge=0, description="Active contact pairs at the last iteration.")
    candidates: int = Field(0, ge=0, description="Candidate pairs built at the first iteration.")
    contact_stiffness: float = Field(0.0, ge=0, description="Contact stiffness k used in the step.")
    residual_norm: float = Field(0.0, ge=0, description="|F_free| at the last iteration [N].")
    converged: bool = Field(True, description="False when the Newton cap was hit.")
    min_gap_m: Optional[float] = Field(
        None, description="Smallest inter-rod surface gap Delta - 2h within reach [m]; None when no pair is within reach."
    )
    clamp_forces: Optional[List[List[float]]] = Field(
        None, description="Clamp reaction per rod [N], one [fx, fy, fz] row per rod."
    )

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "step": 12,
                    "time": 0.012,
                    "newton_iters": 3,
                    "line_search_iters": 0,
                    "wall_ms": 41.5,
                    "contacts": 2,
                    "candidates": 5,
                    "contact_stiffness": 3.1e4,
                    "residual_norm": 1.2e-9,
                    "converged": True,
                }
            ]
        }
    }


class TrajectoryRecord(BaseModel):
    """Snapshot of every rod at one recorded time."""

    time: float = Field(..., description="Simulated time [s].")
    nodes: List[List[List[float]]] = Field(..., description="nodes[rod][node] = [x, y, z] [m].")
    twists: List[List[float]] = Field(..., description="twists[rod][edge] = theta [rad].")


class RunMetrics(BaseModel):
    """Run summary in the shape of the convergence tables: iterations and wall time per step."""

    aipts: float = Field(0.0, ge=0, description="Average Newton iterations per time step.")
    atpts_ms: float = Field(0.0, ge=0, description="Average wall time per time step [ms].")
    aipts_contact: float = Field(0.0, ge=0, description="AIPTS over steps with at least one contact.")
    atpts_contact_ms: float = Field(0.0, ge=0, description="ATPTS over steps with at least one contact [ms].")
    total_iters: int = Field(0, ge=0, description="Newton iterations over the run.")
    wall_time_s: float = Field(0.0, ge=0, description="Wall-clock time of the run [s].")
    sim_end_s: float = Field(0.0, ge=0, description="Simulated time reached [s].")
    steps: int = Field(0, ge=0, description="Time steps taken.")
    contact_steps: int = Field(0, ge=0, description="Steps with at least one active contact.")
    min_gap_m: Optional[float] = Field(
        None, description="Smallest inter-rod surface gap over every step [m]; None when no pair came within reach."
    )
    aborted: bool = Field(False, description="True when the run ended on repeated non-convergence.")

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "aipts": 3.0,
                    "atpts_ms": 45.2,
                    "aipts_contact": 3.4,
                    "atpts_contact_ms": 51.0,
                    "total_iters": 3000,
                    "wall_time_s": 45.2,
                    "sim_end_s": 1.0,
                    "steps": 1000,
                    "contact_steps": 420,
                    "min_gap_m": 2.4e-4,
                    "aborted": False,
                }
            ]
        }
    }

    @classmethod
    def from_stats(cls, stats: List[StepStats], wall_time_s: float, sim_end_s: float, aborted: bool) -> "RunMetrics":
        steps = len(stats)
        total = sum(s.newton_iters for s in stats)
        wall_ms = sum(s.wall_ms for s in stats)
        contact = [s for s in stats if s.contacts > 0]
        gaps = [s.min_gap_m for s in stats if s.min_gap_m is not None]
        return cls(
            aipts=total / steps if steps else 0.0,
            atpts_ms=wall_ms / steps if steps else 0.0,
            aipts_contact=sum(s.newton_iters for s in contact) / len(contact) if contact else 0.0,
            atpts_contact_ms=sum(s.wall_ms for s in contact) / len(contact) if contact else 0.0,
            total_iters=total,
            wall_time_s=wall_time_s,
            sim_end_s=sim_end_s,
            steps=steps,
            contact_steps=len(contact),
            min_gap_m=min(gaps) if gaps else None,
            aborted=aborted,
        )
