"""M co-rotating helical flagella clamped on the vertices of a regular polygon.

Each rod starts with a short clamped segment on its own rotation axis (the z
direction through its clamp site) followed by a right-handed helix around that
axis. The drive is the clamped twist angle theta^0 = omega t.
"""
from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple

import numpy as np

from framework.contact import initial_contact_stiffness
from framework.rod import RodState, make_rod
from framework.system import SystemState, make_system
from models.config import SimConfig
from models.params import FlagellaScenario

logger = logging.getLogger(__name__)

# clamped DOFs per rod: x_0, theta^0, x_1
CLAMPED_LOCAL_DOFS = np.arange(7)


def clamp_sites(scenario: FlagellaScenario) -> np.ndarray:
    """(M, 3) clamp points: vertices of a regular M-gon of side ``side_length`` in the z = 0 plane."""
    M = scenario.num_flagella
    if M == 1:
        return np.zeros((1, 3))
    radius = scenario.side_length / (2.0 * math.sin(math.pi / M))
    angles = 2.0 * math.pi * np.arange(M) / M
    return np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.zeros(M)])


def helix_turns(scenario: FlagellaScenario) -> float:
    return scenario.axial_length / scenario.pitch


def helical_arc_length(scenario: FlagellaScenario) -> float:
    return helix_turns(scenario) * math.hypot(scenario.pitch, 2.0 * math.pi * scenario.helix_radius)


def _helix_points(scenario: FlagellaScenario, phase: float) -> np.ndarray:
    """Helix nodes relative to the clamp site, uniform in arc length."""
    n_helix = scenario.num_nodes - 1 - scenario.axis_edges
    sweep = 2.0 * math.pi * helix_turns(scenario)
    phi = np.linspace(0.0, sweep, n_helix)
    a = scenario.helix_radius
    z = scenario.pitch * phi / (2.0 * math.pi)
    return np.column_stack([a * np.cos(phi + phase), a * np.sin(phi + phase), z])


def _axis_spacing(scenario: FlagellaScenario) -> float:
    n_helix_edges = scenario.num_nodes - 2 - scenario.axis_edges
    return helical_arc_length(scenario) / n_helix_edges


def _axis_points(scenario: FlagellaScenario) -> np.ndarray:
    """Clamped segment on the rotation axis ending at z = 0."""
    spacing = _axis_spacing(scenario)
    z = -spacing * np.arange(scenario.axis_edges, -1, -1, dtype=float)
    return np.column_stack([np.zeros_like(z), np.zeros_like(z), z])


def phase_of(scenario: FlagellaScenario, index: int) -> float:
    if not scenario.staggered_phase:
        return 0.0
    return 2.0 * math.pi * index / scenario.num_flagella


def build_helix(scenario: FlagellaScenario, site: Optional[np.ndarray] = None, phase: float = 0.0) -> RodState:
    """Stress-free rod: axis segment then right-handed helix about +z through ``site``."""
    site = np.zeros(3) if site is None else np.asarray(site, dtype=float)
    nodes = np.vstack([_axis_points(scenario), _helix_points(scenario, phase)]) + site
    return make_rod(nodes, d1_first=np.array([1.0, 0.0, 0.0]))


def clamped_dofs(rods: List[RodState]) -> np.ndarray:
    """Global indices of x_0, theta^0 and x_1 of every rod."""
    out = []
    offset = 0
    for rod in rods:
        out.append(offset + CLAMPED_LOCAL_DOFS)
        offset += rod.ndof
    return np.concatenate(out)


def boundary_schedule(scenario: FlagellaScenario, t: float) -> np.ndarray:
    """Prescribed values of the clamped DOFs at time ``t``, in the order of :func:`clamped_dofs`.

    Clamp nodes stay on their sites; the first twist angle advances as omega t.
    """
    axis = _axis_points(scenario)
    rows = []
    for site in clamp_sites(scenario):
        x0 = axis[0] + site
        x1 = axis[1] + site
        rows.append(np.concatenate([x0, [scenario.omega * t], x1]))
    return np.concatenate(rows)


def build_rods(scenario: FlagellaScenario) -> List[RodState]:
    return [build_helix(scenario, site, phase_of(scenario, m)) for m, site in enumerate(clamp_sites(scenario))]


def build_system(config: SimConfig) -> SystemState:
    scenario = config.scenario
    rods = build_rods(scenario)
    fixed = clamped_dofs(rods)
    rod_length = float(np.sum(rods[0].rest_lengths))
    k0 = initial_contact_stiffness(config.contact, config.material, rod_length)
    logger.info(
        "built %d flagella: %d nodes each, rod length %.4f m, initial contact stiffness %.3e",
        len(rods), scenario.num_nodes, rod_length, k0,
    )
    return make_system(
        rods,
        config.material,
        config.solver.dt,
        fixed=fixed,
        boundary=lambda t: boundary_schedule(scenario, t),
        contact_stiffness=k0,
    )


def site_separations(scenario: FlagellaScenario) -> Tuple[float, float]:
    """(min, max) distance between distinct clamp sites."""
    sites = clamp_sites(scenario)
    if len(sites) < 2:
        return 0.0, 0.0
    d = np.linalg.norm(sites[:, None, :] - sites[None, :, :], axis=-1)
    off = d[~np.eye(len(sites), dtype=bool)]
    return float(off.min()), float(off.max())
