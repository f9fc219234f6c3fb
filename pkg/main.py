from __future__ import annotations

import os
import shutil
import socket
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Literal, Optional
from uuid import UUID

from fastapi import FastAPI, HTTPException, Query

from middleware.timing import RequestTimingMiddleware
from models.config import SimConfig
from models.health import Health
from models.simulation import DiffRead, DiffRequest, PropulsionRead, SimulationCreate, SimulationRead
from models.trajectory import TrajectoryRecord
from services import analysis
from services import trajectory_io as tio
from services.runner import run
from utils.errors import ConfigError, FlagellaError, MissingForceLog, ShapeMismatch, TrajectoryFormatError
from utils.logs import configure_logging

port = int(os.environ.get("FASTAPIPORT", 8000))

configure_logging()

# -----------------------------------------------------------------------------
# In-memory run registry; trajectories live in per-run temp directories
# -----------------------------------------------------------------------------
simulations: Dict[UUID, SimulationRead] = {}
configs: Dict[UUID, SimConfig] = {}

app = FastAPI(
    title="Flagella Simulation API",
    description="Elastic-rod flagella simulations with implicit penalty contact, friction and regularized Stokeslet hydrodynamics",
    version="0.1.0",
)
app.add_middleware(RequestTimingMiddleware)


def _get(simulation_id: UUID) -> SimulationRead:
    if simulation_id not in simulations:
        raise HTTPException(status_code=404, detail="Simulation not found")
    return simulations[simulation_id]


# -----------------------------------------------------------------------------
# Health
# -----------------------------------------------------------------------------
@app.get("/health", response_model=Health)
def get_health(echo: Optional[str] = Query(None, description="Optional echo string")):
    return Health(
        status=200,
        status_message="OK",
        timestamp=datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
        ip_address=socket.gethostbyname(socket.gethostname()),
        simulations=len(simulations),
        echo=echo,
    )


# -----------------------------------------------------------------------------
# Simulation endpoints
# -----------------------------------------------------------------------------
@app.post("/simulations", response_model=SimulationRead, status_code=201)
def create_simulation(body: SimulationCreate):
    out_dir = tempfile.mkdtemp(prefix="flagella-")
    try:
        config = SimConfig.from_mapping(body.config).with_overrides(
            duration=body.duration,
            out_dir=out_dir,
            stride=body.stride,
            mu=body.mu,
            num_flagella=body.num_flagella,
        )
        result = run(config)
    except ConfigError as exc:
        shutil.rmtree(out_dir, ignore_errors=True)
        raise HTTPException(status_code=422, detail=str(exc))
    except FlagellaError as exc:
        shutil.rmtree(out_dir, ignore_errors=True)
        raise HTTPException(status_code=500, detail={"error": type(exc).__name__, "message": str(exc)})

    sim = SimulationRead(
        status="aborted" if result.metrics.aborted else "completed",
        num_flagella=config.scenario.num_flagella,
        mu=config.friction.mu,
        duration=config.run.duration,
        metrics=result.metrics,
        out_dir=out_dir,
    )
    simulations[sim.id] = sim
    configs[sim.id] = config
    return sim


@app.get("/simulations", response_model=List[SimulationRead])
def list_simulations(
    status: Optional[Literal["completed", "aborted"]] = Query(None, description="Filter by run status"),
    num_flagella: Optional[int] = Query(None, ge=1, description="Filter by number of flagella"),
    mu: Optional[float] = Query(None, ge=0, description="Filter by friction coefficient"),
):
    results = list(simulations.values())

    if status is not None:
        results = [s for s in results if s.status == status]
    if num_flagella is not None:
        results = [s for s in results if s.num_flagella == num_flagella]
    if mu is not None:
        results = [s for s in results if s.mu == mu]

    return results


@app.get("/simulations/{simulation_id}", response_model=SimulationRead)
def get_simulation(simulation_id: UUID):
    return _get(simulation_id)


@app.get("/simulations/{simulation_id}/propulsion", response_model=PropulsionRead)
def get_propulsion(simulation_id: UUID):
    sim = _get(simulation_id)
    try:
        series = analysis.propulsion_of_run(sim.out_dir, configs[simulation_id].material)
    except MissingForceLog as exc:
        raise HTTPException(status_code=404, detail=str(exc))
    return PropulsionRead(
        id=simulation_id,
        times=series.times.tolist(),
        fp_bar=series.fp_bar.tolist(),
        mean=series.mean,
    )


@app.get("/simulations/{simulation_id}/trajectory", response_model=TrajectoryRecord)
def get_trajectory_record(
    simulation_id: UUID,
    index: int = Query(-1, description="Record index; negative values count from the last record"),
):
    sim = _get(simulation_id)
    try:
        return tio.read_trajectory(Path(sim.out_dir) / tio.TRAJECTORY_FILE).record(index)
    except TrajectoryFormatError as exc:
        raise HTTPException(status_code=404, detail=str(exc))


@app.delete("/simulations/{simulation_id}", status_code=204)
def delete_simulation(simulation_id: UUID):
    sim = _get(simulation_id)
    shutil.rmtree(sim.out_dir, ignore_errors=True)
    del simulations[simulation_id]
    configs.pop(simulation_id, None)
    return None


# -----------------------------------------------------------------------------
# Trajectory difference
# -----------------------------------------------------------------------------
@app.post("/diff", response_model=DiffRead)
def diff_simulations(body: DiffRequest):
    a = _get(body.run_a)
    b = _get(body.run_b)
    h = configs[body.run_a].material.radius
    try:
        series = analysis.diff_files(
            Path(a.out_dir) / tio.TRAJECTORY_FILE, Path(b.out_dir) / tio.TRAJECTORY_FILE, h
        )
    except ShapeMismatch as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return DiffRead(times=series.times.tolist(), e_bar=series.e_bar.tolist())


# -----------------------------------------------------------------------------
# Root
# -----------------------------------------------------------------------------
@app.get("/")
def root():
    return {"message": "Flagella simulation API. See /docs for OpenAPI UI."}


# -----------------------------------------------------------------------------
# Entrypoint for `python main.py`
# -----------------------------------------------------------------------------
if __name__ == "__main__":
    import uvicorn

    uvicorn.run("main:app", host="0.0.0.0", port=port, reload=True)
