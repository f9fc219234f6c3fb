"""Finite-difference oracles and small scene builders shared by the test modules."""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from framework.rod import RodState, make_rod, node_dofs, twist_dofs
from framework.system import SystemState, make_system
from models.config import SimConfig
from models.params import MaterialParams


def fd_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = step
        g[k] = (fn(x + dx) - fn(x - dx)) / (2.0 * step)
    return g


def fd_jacobian(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central differences of a vector function; column k is d fn / d x_k."""
    x = np.asarray(x, dtype=float)
    cols = []
    for k in range(x.size):
        dx = np.zeros_like(x)
        dx[k] = step
        cols.append((np.asarray(fn(x + dx)) - np.asarray(fn(x - dx))) / (2.0 * step))
    return np.column_stack(cols)


def rel_error(actual: np.ndarray, expected: np.ndarray, floor: float = 1e-12) -> float:
    actual = np.asarray(actual)
    expected = np.asarray(expected)
    return float(np.linalg.norm(actual - expected) / max(np.linalg.norm(expected), floor))


def wavy_rod(rng: np.random.Generator, num_nodes: int = 6, edge: float = 1.0, wiggle: float = 0.3) -> RodState:
    """Rest shape: a gently bent random curve along +x."""
    x = edge * np.arange(num_nodes, dtype=float)
    y = wiggle * rng.standard_normal(num_nodes)
    z = wiggle * rng.standard_normal(num_nodes)
    return make_rod(np.column_stack([x, y, z]))


def perturbed(rod: RodState, rng: np.random.Generator, scale: float = 0.05, twist_scale: float = 0.2) -> RodState:
    """Deformed copy with frames transported onto the new shape."""
    q = rod.q.copy()
    n = rod.num_nodes
    q[node_dofs(n)] += scale * rng.standard_normal((n, 3))
    q[twist_dofs(n)] += twist_scale * rng.standard_normal(n - 1)
    return rod.with_dofs(q)


def straight_rod(start: Sequence[float], end: Sequence[float], num_nodes: int) -> RodState:
    nodes = np.linspace(np.asarray(start, dtype=float), np.asarray(end, dtype=float), num_nodes)
    return make_rod(nodes)


def small_config(**sections) -> SimConfig:
    """Default config with per-section overrides, e.g. ``small_config(friction={"mu": 0.3})``."""
    return SimConfig.from_mapping(sections)


def crossed_system(
    config: SimConfig,
    gap: float,
    length: float = 0.02,
    num_nodes: int = 2,
    fixed_lower: bool = True,
    body_force: Optional[np.ndarray] = None,
) -> SystemState:
    """Rod 0 along x at z = 0, rod 1 along y at height ``gap`` above it, crossing at the origin."""
    half = length / 2.0
    lower = straight_rod([-half, 0.0, 0.0], [half, 0.0, 0.0], num_nodes)
    upper = straight_rod([0.0, -half, gap], [0.0, half, gap], num_nodes)
    fixed = np.arange(lower.ndof) if fixed_lower else np.zeros(0, dtype=int)
    return make_system(
        [lower, upper],
        config.material,
        config.solver.dt,
        fixed=fixed,
        contact_stiffness=1.0,
        body_force=body_force,
    )


def unit_material() -> MaterialParams:
    return MaterialParams(youngs_modulus=1.0e4, density=1.0e3, radius=0.1)


def tiny_flagella_config(out_dir, duration: float = 0.003, stride: int = 1, **sections) -> SimConfig:
    """Two one-turn helices of 14 nodes, far enough apart to stay out of contact."""
    data = {
        "scenario": {"num_nodes": 14, "axial_length": 0.05, "num_flagella": 2},
        "run": {"duration": duration, "stride": stride, "out_dir": str(out_dir)},
    }
    for name, values in sections.items():
        data.setdefault(name, {}).update(values)
    return SimConfig.from_mapping(data)
