"""Regularized Stokeslet segments: nodal velocities to viscous force densities.

For an edge x_alpha = x_i + alpha e carrying the linear force density
f_alpha = f_i + alpha (f_{i+1} - f_i), the velocity it induces at x_hat is a
combination of the integrals T_{k,l} = int_0^1 alpha^k R_alpha^l d alpha with
r_alpha = x_alpha - x_hat and R_alpha^2 = |r_alpha|^2 + eps^2.
"""
from __future__ import annotations

import logging
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from framework.rod import RodState, node_dofs
from models.params import RssParams
from utils.errors import LogSingularity, SingularMobility

logger = logging.getLogger(__name__)


class TIntegrals(NamedTuple):
    t0m1: np.ndarray
    t0m3: np.ndarray
    t1m1: np.ndarray
    t1m3: np.ndarray
    t2m3: np.ndarray
    t3m3: np.ndarray


def _log_argument(r: np.ndarray, e: np.ndarray, R: np.ndarray, ne: np.ndarray, eps: float) -> np.ndarray:
    """|e| R + r.e, rewritten without cancellation when r.e < 0."""
    re = np.sum(r * e, axis=-1)
    direct = ne * R + re
    cross2 = np.sum(np.cross(r, e) ** 2, axis=-1)
    stable = (cross2 + ne**2 * eps**2) / np.maximum(ne * R - re, np.finfo(float).tiny)
    return np.where(re < 0.0, stable, direct)


def t_integrals(r0: np.ndarray, e: np.ndarray, eps: float) -> TIntegrals:
    """Closed-form T_{k,l} over alpha in [0, 1]; broadcasts over leading axes."""
    r0 = np.asarray(r0, dtype=float)
    e = np.asarray(e, dtype=float)
    r1 = r0 + e
    ne = np.linalg.norm(e, axis=-1)
    ne2 = ne * ne
    re0 = np.sum(r0 * e, axis=-1)
    R0 = np.sqrt(np.sum(r0 * r0, axis=-1) + eps * eps)
    R1 = np.sqrt(np.sum(r1 * r1, axis=-1) + eps * eps)
    L0 = _log_argument(r0, e, R0, ne, eps)
    L1 = _log_argument(r1, e, R1, ne, eps)
    if np.any(L0 <= 0.0) or np.any(L1 <= 0.0):
        raise LogSingularity("non-positive log argument in segment integral", {"eps": eps})

    t0m1 = (np.log(L1) - np.log(L0)) / ne
    t0m3 = -1.0 / (R1 * L1) + 1.0 / (R0 * L0)
    t1m1 = (R1 - R0) / ne2 - re0 / ne2 * t0m1
    t1m3 = -(1.0 / R1 - 1.0 / R0) / ne2 - re0 / ne2 * t0m3
    t2m3 = -1.0 / (R1 * ne2) + t0m1 / ne2 - re0 / ne2 * t1m3
    t3m3 = -1.0 / (R1 * ne2) + 2.0 * t1m1 / ne2 - re0 / ne2 * t2m3
    return TIntegrals(t0m1, t0m3, t1m1, t1m3, t2m3, t3m3)


def edge_velocity_contribution(
    x_hat: np.ndarray,
    x_start: np.ndarray,
    x_end: np.ndarray,
    f_start: np.ndarray,
    f_end: np.ndarray,
    params: RssParams,
    h: float,
) -> np.ndarray:
    """8 pi eta u(x_hat) induced by one edge with endpoint force densities f_start, f_end."""
    eps = params.epsilon(h)
    e = np.asarray(x_end, dtype=float) - np.asarray(x_start, dtype=float)
    r0 = np.asarray(x_start, dtype=float) - np.asarray(x_hat, dtype=float)
    f0 = np.asarray(f_start, dtype=float)
    f1 = np.asarray(f_end, dtype=float) - f0
    T = t_integrals(r0, e, eps)

    c0 = np.dot(f0, r0) * r0
    c1 = np.dot(f0, e) * r0 + np.dot(f0, r0) * e + np.dot(f1, r0) * r0
    c2 = np.dot(f0, e) * e + np.dot(f1, r0) * e + np.dot(f1, e) * r0
    c3 = np.dot(f1, e) * e
    u = (
        f0 * (T.t0m1 + eps**2 * T.t0m3)
        + f1 * (T.t1m1 + eps**2 * T.t1m3)
        + c0 * T.t0m3
        + c1 * T.t1m3
        + c2 * T.t2m3
        + c3 * T.t3m3
    )
    return np.linalg.norm(e) * u


def _all_nodes(rods: Sequence[RodState]):
    nodes = np.concatenate([r.nodes for r in rods])
    starts, ends = [], []
    offset = 0
    for rod in rods:
        idx = offset + np.arange(rod.num_edges)
        starts.append(idx)
        ends.append(idx + 1)
        offset += rod.num_nodes
    return nodes, np.concatenate(starts), np.concatenate(ends)


def assemble_mobility(rods: Sequence[RodState], params: RssParams, h: float) -> np.ndarray:
    """Dense A with 8 pi eta U = A f over every node of every rod."""
    eps = params.epsilon(h)
    nodes, starts, ends = _all_nodes(rods)
    n = nodes.shape[0]
    e = nodes[ends] - nodes[starts]
    r0 = nodes[starts][None, :, :] - nodes[:, None, :]
    e_b = np.broadcast_to(e[None, :, :], r0.shape)
    T = t_integrals(r0, e_b, eps)
    ne = np.linalg.norm(e, axis=1)[None, :, None, None]

    I = np.eye(3)[None, None]
    rr = np.einsum("pei,pej->peij", r0, r0)
    re_er = np.einsum("pei,ej->peij", r0, e)
    re_er = re_er + np.swapaxes(re_er, -1, -2)
    ee = np.einsum("ei,ej->eij", e, e)[None]

    def _w(t):
        return t[..., None, None]

    A2 = ne * (
        _w(T.t1m1 + eps**2 * T.t1m3) * I + _w(T.t1m3) * rr + _w(T.t2m3) * re_er + _w(T.t3m3) * ee
    )
    A1 = ne * (
        _w(T.t0m1 + eps**2 * T.t0m3) * I + _w(T.t0m3) * rr + _w(T.t1m3) * re_er + _w(T.t2m3) * ee
    ) - A2

    blocks = np.zeros((n, n, 3, 3))
    blocks[:, starts] += A1
    blocks[:, ends] += A2
    return blocks.transpose(0, 2, 1, 3).reshape(3 * n, 3 * n)


def mobility_asymmetry(A: np.ndarray) -> float:
    """|A - A^T|_inf / |A|_inf."""
    return float(np.linalg.norm(A - A.T, ord=np.inf) / np.linalg.norm(A, ord=np.inf))


def nodal_velocities(rods: Sequence[RodState]) -> np.ndarray:
    return np.concatenate([r.velocities[node_dofs(r.num_nodes)].ravel() for r in rods])


def hydrodynamic_forces(rods: Sequence[RodState], params: RssParams, h: float) -> np.ndarray:
    """Drag on every DOF of the concatenated rods; twist DOFs get zero.

    The solved density f is the force the rod exerts on the fluid, so the rod
    feels -f * voronoi_length at each node.
    """
    sizes = [r.ndof for r in rods]
    out = np.zeros(int(np.sum(sizes)))
    U = nodal_velocities(rods)
    if not np.any(U):
        return out

    A = assemble_mobility(rods, params, h)
    try:
        f = scipy.linalg.solve(A, 8.0 * np.pi * params.viscosity * U, check_finite=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularMobility("mobility solve failed", {"nodes": U.size // 3}) from exc
    if not np.all(np.isfinite(f)):
        raise SingularMobility("mobility solve produced non-finite densities")
    logger.debug("mobility asymmetry %.3e", mobility_asymmetry(A))

    f = f.reshape(-1, 3)
    offset_dof = 0
    offset_node = 0
    for rod in rods:
        n = rod.num_nodes
        drag = -f[offset_node : offset_node + n] * rod.voronoi[:, None]
        out[offset_dof + node_dofs(n)] = drag
        offset_dof += rod.ndof
        offset_node += n
    return out
