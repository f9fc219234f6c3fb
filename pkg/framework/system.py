"""All rods of a simulation as one DOF vector, with masses and boundary conditions."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence

import numpy as np

from framework.rod import RodState, node_dofs, twist_dofs
from models.params import MaterialParams

BoundarySchedule = Callable[[float], np.ndarray]


def lumped_mass(rod: RodState, material: MaterialParams) -> np.ndarray:
    """Diagonal of the rod's mass matrix: rho A dl per coordinate, rho J |e_bar| per twist."""
    mass = np.empty(rod.ndof)
    mass[node_dofs(rod.num_nodes)] = (material.density * material.area * rod.voronoi)[:, None]
    mass[twist_dofs(rod.num_nodes)] = material.density * material.J * rod.rest_lengths
    return mass


@dataclass
class SystemState:
    rods: List[RodState]
    mass: np.ndarray
    fixed: np.ndarray
    dt: float
    time: float = 0.0
    contact_stiffness: float = 0.0
    boundary: Optional[BoundarySchedule] = None
    body_force: Optional[np.ndarray] = None
    step_index: int = 0
    free: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.fixed = np.unique(np.asarray(self.fixed, dtype=int))
        mask = np.ones(self.ndof, dtype=bool)
        mask[self.fixed] = False
        self.free = np.flatnonzero(mask)

    @property
    def ndof(self) -> int:
        return int(sum(r.ndof for r in self.rods))

    @property
    def offsets(self) -> np.ndarray:
        sizes = [r.ndof for r in self.rods]
        return np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)

    @property
    def q(self) -> np.ndarray:
        return np.concatenate([r.q for r in self.rods])

    @property
    def velocities(self) -> np.ndarray:
        return np.concatenate([r.velocities for r in self.rods])

    def rod_slices(self) -> List[slice]:
        return [slice(o, o + r.ndof) for o, r in zip(self.offsets, self.rods)]

    def prescribed(self, t: float) -> np.ndarray:
        """Values of the fixed DOFs at time ``t``."""
        if self.boundary is None:
            return self.q[self.fixed]
        return np.asarray(self.boundary(t), dtype=float)

    def rods_at(self, q: np.ndarray, velocities: Optional[np.ndarray] = None) -> List[RodState]:
        """Rods at DOFs ``q`` with frames transported from this state's frames."""
        out = []
        for rod, s in zip(self.rods, self.rod_slices()):
            out.append(rod.with_dofs(q[s], None if velocities is None else velocities[s]))
        return out

    def advance(self, q: np.ndarray, velocities: np.ndarray, contact_stiffness: float) -> "SystemState":
        new = replace(
            self,
            rods=self.rods_at(q, velocities),
            time=self.time + self.dt,
            contact_stiffness=contact_stiffness,
            step_index=self.step_index + 1,
        )
        return new


def make_system(
    rods: Sequence[RodState],
    material: MaterialParams,
    dt: float,
    fixed: Sequence[int] = (),
    boundary: Optional[BoundarySchedule] = None,
    contact_stiffness: float = 0.0,
    body_force: Optional[np.ndarray] = None,
) -> SystemState:
    mass = np.concatenate([lumped_mass(r, material) for r in rods])
    return SystemState(
        rods=list(rods),
        mass=mass,
        fixed=np.asarray(fixed, dtype=int),
        dt=dt,
        contact_stiffness=contact_stiffness,
        boundary=boundary,
        body_force=body_force,
    )
