from __future__ import annotations

from datetime import datetime, timezone
from typing import Any, Dict, List, Literal, Optional
from uuid import UUID, uuid4

from pydantic import BaseModel, Field

from models.trajectory import RunMetrics


class SimulationCreate(BaseModel):
    """A run request: a (partial) config mapping plus the usual command-line overrides."""

    config: Dict[str, Any] = Field(
        default_factory=dict,
        description="Partial SimConfig mapping, one key per section ([material], [contact], ...).",
        json_schema_extra={"example": {"friction": {"mu": 0.1}, "solver": {"dt": 1.0e-3}}},
    )
    duration: Optional[float] = Field(
        None, ge=0, description="Simulated duration [s].", json_schema_extra={"example": 0.05}
    )
    stride: Optional[int] = Field(None, ge=1, description="Steps per trajectory record.", json_schema_extra={"example": 10})
    mu: Optional[float] = Field(None, ge=0, description="Friction coefficient.", json_schema_extra={"example": 0.1})
    num_flagella: Optional[int] = Field(
        None, ge=1, description="Number of flagella M.", json_schema_extra={"example": 2}
    )

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "examples": [
                {
                    "config": {"friction": {"mu": 0.0}},
                    "duration": 0.05,
                    "stride": 10,
                    "num_flagella": 2,
                }
            ]
        },
    }


class SimulationRead(BaseModel):
    id: UUID = Field(default_factory=uuid4, description="Server-generated run id.")
    status: Literal["completed", "aborted"] = Field(
        ..., description="'aborted' when the run stopped on repeated non-convergence."
    )
    created_at: datetime = Field(
        default_factory=lambda: datetime.now(timezone.utc), description="Creation timestamp (UTC)."
    )
    num_flagella: int = Field(..., ge=1, description="Number of flagella M.")
    mu: float = Field(..., ge=0, description="Friction coefficient.")
    duration: float = Field(..., ge=0, description="Requested simulated duration [s].")
    metrics: RunMetrics = Field(..., description="Iteration and timing summary.")
    out_dir: str = Field(..., description="Directory holding trajectory.csv, stats.csv, forces.csv and metrics.json.")

    model_config = {
        "json_schema_extra": {
            "examples": [
                {
                    "id": "5f8c1d2e-3b4a-4c6d-8e9f-0a1b2c3d4e5f",
                    "status": "completed",
                    "created_at": "2026-01-15T10:20:30Z",
                    "num_flagella": 2,
                    "mu": 0.0,
                    "duration": 0.05,
                    "metrics": RunMetrics.model_config["json_schema_extra"]["examples"][0],
                    "out_dir": "/tmp/flagella-abc123",
                }
            ]
        }
    }


class DiffRequest(BaseModel):
    run_a: UUID = Field(..., description="First run id.")
    run_b: UUID = Field(..., description="Second run id.")

    model_config = {"extra": "forbid"}


class DiffRead(BaseModel):
    times: List[float] = Field(..., description="Record times [s].")
    e_bar: List[float] = Field(..., description="Normalized average node distance per record.")


class PropulsionRead(BaseModel):
    id: UUID = Field(..., description="Run id.")
    times: List[float] = Field(..., description="Force-log times [s].")
    fp_bar: List[float] = Field(..., description="Normalized propulsive force F h^2 / (E I) per record.")
    mean: float = Field(..., description="Time average of fp_bar.")
