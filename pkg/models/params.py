from __future__ import annotations

import math
from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class MaterialParams(BaseModel):
    """Linear elastic material and circular cross-section of every flagellum."""

    youngs_modulus: float = Field(
        3.0e6,
        gt=0,
        description="Young's modulus E [Pa].",
        json_schema_extra={"example": 3.0e6},
    )
    poisson_ratio: float = Field(
        0.5,
        ge=0,
        le=0.5,
        description="Poisson ratio; sets G = E / (2 (1 + nu)) unless shear_modulus is given.",
        json_schema_extra={"example": 0.5},
    )
    shear_modulus: Optional[float] = Field(
        None,
        gt=0,
        description="Shear modulus G [Pa]; derived from E and the Poisson ratio when omitted.",
        json_schema_extra={"example": 1.0e6},
    )
    density: float = Field(
        1000.0,
        gt=0,
        description="Mass density rho [kg/m^3].",
        json_schema_extra={"example": 1000.0},
    )
    radius: float = Field(
        1.0e-3,
        gt=0,
        description="Cross-section radius h [m].",
        json_schema_extra={"example": 1.0e-3},
    )

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "examples": [
                {"youngs_modulus": 3.0e6, "poisson_ratio": 0.5, "density": 1000.0, "radius": 1.0e-3}
            ]
        },
    }

    @property
    def E(self) -> float:
        return self.youngs_modulus

    @property
    def G(self) -> float:
        if self.shear_modulus is not None:
            return self.shear_modulus
        return self.youngs_modulus / (2.0 * (1.0 + self.poisson_ratio))

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def I1(self) -> float:
        return math.pi * self.radius**4 / 4.0

    @property
    def I2(self) -> float:
        return math.pi * self.radius**4 / 4.0

    @property
    def J(self) -> float:
        return math.pi * self.radius**4 / 2.0

    @property
    def EA(self) -> float:
        return self.E * self.area

    @property
    def EI(self) -> float:
        return self.E * self.I1

    @property
    def GJ(self) -> float:
        return self.G * self.J


class ContactParams(BaseModel):
    """Penalty contact: distance tolerance, candidate margin and stiffness scaling."""

    delta: float = Field(
        1.0e-5,
        gt=0,
        description="Distance tolerance; scaled by h (delta_bar) when delta_scaled is true, else metres.",
        json_schema_extra={"example": 1.0e-5},
    )
    delta_scaled: bool = Field(
        True,
        description="Interpret delta as the scaled tolerance delta/h (true) or as metres (false).",
    )
    candidate_margin: float = Field(
        0.2,
        gt=0,
        description="Candidate-set margin delta_hat as a multiple of h.",
        json_schema_extra={"example": 0.2},
    )
    stiffness_scale: float = Field(
        1.0e5,
        gt=0,
        description="Scale factor s in k = max(F) * s.",
        json_schema_extra={"example": 1.0e5},
    )
    initial_stiffness: Optional[float] = Field(
        None,
        gt=0,
        description="Contact stiffness before the first contact; defaults to s * (EA / L) * delta.",
    )

    model_config = {"extra": "forbid"}

    def delta_m(self, h: float) -> float:
        return self.delta * h if self.delta_scaled else self.delta

    def delta_bar(self, h: float) -> float:
        return self.delta_m(h) / h

    def delta_hat_m(self, h: float) -> float:
        return self.candidate_margin * h

    def K1(self, h: float) -> float:
        """Energy stiffness 15 h / delta in scaled coordinates."""
        return 15.0 * h / self.delta_m(h)


class FrictionParams(BaseModel):
    mu: float = Field(
        0.0,
        ge=0,
        description="Coulomb friction coefficient.",
        json_schema_extra={"example": 0.4},
    )
    slip_tolerance: float = Field(
        1.0e-4,
        gt=0,
        description="Slipping tolerance nu [m/s]; tangential speeds below it are treated as sticking.",
        json_schema_extra={"example": 1.0e-4},
    )

    model_config = {"extra": "forbid"}

    @property
    def K2(self) -> float:
        return 15.0 / self.slip_tolerance


class RssParams(BaseModel):
    """Regularized Stokeslet segments fluid model."""

    enabled: bool = Field(True, description="Include hydrodynamic drag.")
    viscosity: float = Field(
        0.1,
        gt=0,
        description="Fluid viscosity eta [Pa s].",
        json_schema_extra={"example": 0.1},
    )
    regularization_factor: float = Field(
        1.02,
        gt=0,
        description="Regularization parameter epsilon as a multiple of h.",
        json_schema_extra={"example": 1.02},
    )

    model_config = {"extra": "forbid"}

    def epsilon(self, h: float) -> float:
        return self.regularization_factor * h


class SolverParams(BaseModel):
    dt: float = Field(1.0e-3, gt=0, description="Time step [s].", json_schema_extra={"example": 1.0e-3})
    rel_tol: float = Field(
        1.0e-4,
        gt=0,
        lt=1,
        description="Convergence when |F_free| <= rel_tol * |F_free at first iteration|.",
    )
    abs_tol: float = Field(1.0e-10, gt=0, description="Floor of the convergence tolerance [N].")
    max_newton_iters: int = Field(50, ge=1, description="Newton iteration cap per step.")
    m1: float = Field(0.1, gt=0, lt=1, description="Goldstein-Price lower constant.")
    m2: float = Field(0.9, gt=0, lt=1, description="Goldstein-Price upper constant.")
    alpha_lower: float = Field(0.0, ge=0, description="Initial lower end of the step-length interval.")
    alpha_upper: float = Field(1.0, gt=0, description="Initial upper end of the step-length interval.")
    max_line_search_iters: int = Field(20, ge=1, description="Line-search bisection cap.")
    alpha_collapse: float = Field(1.0e-6, gt=0, description="Interval width below which bisection stops.")

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _check_constants(self) -> "SolverParams":
        if not self.m1 < self.m2:
            raise ValueError("line-search constants must satisfy 0 < m1 < m2 < 1")
        if not self.alpha_lower < self.alpha_upper:
            raise ValueError("alpha_lower must be below alpha_upper")
        return self


class FlagellaScenario(BaseModel):
    """Geometry and drive of the M-flagella bundling experiment."""

    num_flagella: int = Field(2, ge=1, description="Flagella count M.", json_schema_extra={"example": 2})
    helix_radius: float = Field(0.01, gt=0, description="Helix radius a [m].")
    pitch: float = Field(0.05, gt=0, description="Helix pitch lambda [m].")
    axial_length: float = Field(0.2, gt=0, description="Axial length z0 [m].")
    side_length: float = Field(0.03, gt=0, description="Side of the regular M-gon of clamp sites [m].")
    omega: float = Field(15.0, description="Drive angular speed [rad/s].")
    num_nodes: int = Field(68, ge=4, description="Nodes N per rod.")
    axis_edges: int = Field(1, ge=1, description="Edges of the clamped axial segment.")
    handedness: Literal["right"] = Field("right", description="Helix chirality.")
    staggered_phase: bool = Field(
        False,
        description="Offset each flagellum's initial azimuth by 2 pi m / M instead of aligning them.",
    )

    model_config = {"extra": "forbid"}

    @model_validator(mode="after")
    def _check_discretization(self) -> "FlagellaScenario":
        if self.num_nodes - 1 - self.axis_edges < 2:
            raise ValueError("num_nodes leaves fewer than two helical edges")
        return self


class RunParams(BaseModel):
    duration: float = Field(1.0, ge=0, description="Simulated duration [s].")
    out_dir: str = Field("runs/default", description="Output directory for trajectory, metrics and logs.")
    stride: int = Field(10, ge=1, description="Steps per trajectory record.")
    seed: int = Field(0, description="Reserved random seed.")
    log_forces: bool = Field(True, description="Write the clamp reaction log (forces.csv).")
    max_consecutive_failures: int = Field(
        2, ge=1, description="Consecutive NonConvergence steps that abort the run (tangling)."
    )

    model_config = {"extra": "forbid"}
