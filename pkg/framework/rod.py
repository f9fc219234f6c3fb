"""Discrete elastic rod: kinematics, elastic energies, internal forces and Hessian.

DOF layout of one rod with N nodes (4N - 1 entries)::

    q = [x_0, y_0, z_0, theta^0, x_1, y_1, z_1, theta^1, ..., x_{N-1}, y_{N-1}, z_{N-1}]

Each bending/twisting stencil at interior node i spans the 11 contiguous DOFs
starting at 4(i - 1).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np

from models.params import MaterialParams
from utils.errors import AntiparallelEdges, DegenerateEdge
from utils.vectors import cross_mat, orthonormal_to, parallel_transport, signed_angle

logger = logging.getLogger(__name__)

MIN_EDGE_LENGTH = 1e-12
ANTIPARALLEL_EPS = 1e-14
_I3 = np.eye(3)


# -----------------------------------------------------------------------------
# DOF indexing
# -----------------------------------------------------------------------------
def num_dofs(num_nodes: int) -> int:
    return 4 * num_nodes - 1


def node_dofs(num_nodes: int) -> np.ndarray:
    """(N, 3) array of the position DOF indices of every node."""
    return 4 * np.arange(num_nodes)[:, None] + np.arange(3)[None, :]


def twist_dofs(num_nodes: int) -> np.ndarray:
    return 4 * np.arange(num_nodes - 1) + 3


def pack_dofs(nodes: np.ndarray, twists: np.ndarray) -> np.ndarray:
    n = nodes.shape[0]
    q = np.empty(num_dofs(n))
    q[node_dofs(n)] = nodes
    q[twist_dofs(n)] = twists
    return q


def unpack_dofs(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    n = (q.shape[0] + 1) // 4
    return q[node_dofs(n)].copy(), q[twist_dofs(n)].copy()


# -----------------------------------------------------------------------------
# State
# -----------------------------------------------------------------------------
@dataclass
class RodState:
    nodes: np.ndarray
    twists: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    ref_twist: np.ndarray
    rest_lengths: np.ndarray
    rest_kappa: np.ndarray
    voronoi: np.ndarray
    velocities: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.velocities is None:
            self.velocities = np.zeros(num_dofs(self.num_nodes))

    @property
    def num_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def num_edges(self) -> int:
        return self.nodes.shape[0] - 1

    @property
    def ndof(self) -> int:
        return num_dofs(self.num_nodes)

    @property
    def edges(self) -> np.ndarray:
        return self.nodes[1:] - self.nodes[:-1]

    @property
    def tangents(self) -> np.ndarray:
        e = self.edges
        return e / np.linalg.norm(e, axis=1)[:, None]

    @property
    def m1(self) -> np.ndarray:
        c, s = np.cos(self.twists)[:, None], np.sin(self.twists)[:, None]
        return c * self.d1 + s * self.d2

    @property
    def m2(self) -> np.ndarray:
        c, s = np.cos(self.twists)[:, None], np.sin(self.twists)[:, None]
        return -s * self.d1 + c * self.d2

    @property
    def q(self) -> np.ndarray:
        return pack_dofs(self.nodes, self.twists)

    def with_dofs(self, q: np.ndarray, velocities: Optional[np.ndarray] = None) -> "RodState":
        nodes, twists = unpack_dofs(q)
        new = update_frames(self, nodes, twists)
        if velocities is not None:
            new.velocities = velocities.copy()
        return new


def make_rod(nodes: np.ndarray, twists: Optional[np.ndarray] = None, d1_first: Optional[np.ndarray] = None) -> RodState:
    """Build a rod whose rest configuration is the given shape (stress free as built).

    Reference frames are space-parallel transported from the first edge, so the
    reference twist starts at zero.
    """
    nodes = np.asarray(nodes, dtype=float).copy()
    n = nodes.shape[0]
    twists = np.zeros(n - 1) if twists is None else np.asarray(twists, dtype=float).copy()
    e = nodes[1:] - nodes[:-1]
    lengths = np.linalg.norm(e, axis=1)
    if np.any(lengths < MIN_EDGE_LENGTH):
        raise DegenerateEdge("zero-length edge in rod construction", {"edge": int(np.argmin(lengths))})
    t = e / lengths[:, None]

    d1 = np.empty((n - 1, 3))
    if d1_first is None:
        d1[0] = orthonormal_to(t[0])
    else:
        d1[0] = d1_first - np.dot(d1_first, t[0]) * t[0]
        d1[0] /= np.linalg.norm(d1[0])
    for i in range(1, n - 1):
        d1[i] = _orthonormalize(parallel_transport(d1[i - 1], t[i - 1], t[i]), t[i])
    d2 = np.cross(t, d1)

    voronoi = np.empty(n)
    voronoi[0] = lengths[0] / 2.0
    voronoi[-1] = lengths[-1] / 2.0
    voronoi[1:-1] = (lengths[:-1] + lengths[1:]) / 2.0

    state = RodState(
        nodes=nodes,
        twists=twists,
        d1=d1,
        d2=d2,
        ref_twist=np.zeros(n),
        rest_lengths=lengths.copy(),
        rest_kappa=np.zeros((n, 2)),
        voronoi=voronoi,
    )
    state.ref_twist = _reference_twists(state.d1, t, np.zeros(n))
    for i in range(1, n - 1):
        state.rest_kappa[i] = material_curvatures(state, i)
    return state


def _orthonormalize(d: np.ndarray, t: np.ndarray) -> np.ndarray:
    d = d - np.dot(d, t) * t
    return d / np.linalg.norm(d)


def _reference_twists(d1: np.ndarray, t: np.ndarray, previous: np.ndarray) -> np.ndarray:
    """Angle about t^i taking the space-transported d1^{i-1} to d1^i, unwrapped against ``previous``."""
    n = d1.shape[0] + 1
    out = np.zeros(n)
    for i in range(1, n - 1):
        u = parallel_transport(d1[i - 1], t[i - 1], t[i])
        angle = signed_angle(u, d1[i], t[i])
        angle += 2.0 * np.pi * np.round((previous[i] - angle) / (2.0 * np.pi))
        out[i] = angle
    return out


def update_frames(state: RodState, new_nodes: np.ndarray, new_twists: Optional[np.ndarray] = None) -> RodState:
    """Time-parallel transport the reference frames onto the tangents of ``new_nodes``."""
    new_nodes = np.asarray(new_nodes, dtype=float)
    e = new_nodes[1:] - new_nodes[:-1]
    lengths = np.linalg.norm(e, axis=1)
    if np.any(lengths < MIN_EDGE_LENGTH):
        bad = int(np.argmin(lengths))
        raise DegenerateEdge("edge length below 1e-12 m", {"edge": bad, "length": float(lengths[bad])})
    t_new = e / lengths[:, None]
    t_old = state.tangents

    d1 = np.empty_like(state.d1)
    for i in range(state.num_edges):
        d1[i] = _orthonormalize(parallel_transport(state.d1[i], t_old[i], t_new[i]), t_new[i])
    d2 = np.cross(t_new, d1)
    ref_twist = _reference_twists(d1, t_new, state.ref_twist)
    twists = state.twists.copy() if new_twists is None else np.asarray(new_twists, dtype=float).copy()
    return replace(
        state,
        nodes=new_nodes.copy(),
        twists=twists,
        d1=d1,
        d2=d2,
        ref_twist=ref_twist,
        velocities=state.velocities.copy(),
    )


# -----------------------------------------------------------------------------
# Strains
# -----------------------------------------------------------------------------
def stretch_strain(state: RodState, edge_index: int) -> float:
    e = state.nodes[edge_index + 1] - state.nodes[edge_index]
    return float(np.linalg.norm(e) / state.rest_lengths[edge_index] - 1.0)


def _kappa_b(e: np.ndarray, f: np.ndarray) -> np.ndarray:
    denom = np.linalg.norm(e) * np.linalg.norm(f) + np.dot(e, f)
    if denom <= ANTIPARALLEL_EPS * max(np.dot(e, e), np.dot(f, f)):
        raise AntiparallelEdges("consecutive edges fold back on each other", {"denominator": float(denom)})
    return 2.0 * np.cross(e, f) / denom


def curvature_binormal(state: RodState, node_index: int) -> np.ndarray:
    i = node_index
    e = state.nodes[i] - state.nodes[i - 1]
    f = state.nodes[i + 1] - state.nodes[i]
    try:
        return _kappa_b(e, f)
    except AntiparallelEdges as exc:
        raise exc.with_context(node=i)


def material_curvatures(state: RodState, node_index: int) -> Tuple[float, float]:
    """(kappa^(1), kappa^(2)) with both components taken with a plus sign."""
    i = node_index
    kb = curvature_binormal(state, i)
    m1, m2 = state.m1, state.m2
    k1 = 0.5 * np.dot(m2[i - 1] + m2[i], kb)
    k2 = 0.5 * np.dot(m1[i - 1] + m1[i], kb)
    return float(k1), float(k2)


def twist_strain(state: RodState, node_index: int) -> float:
    i = node_index
    return float(state.twists[i] - state.twists[i - 1] + state.ref_twist[i])


# -----------------------------------------------------------------------------
# Energy
# -----------------------------------------------------------------------------
def elastic_energy(state: RodState, params: MaterialParams) -> float:
    EA, EI1, EI2, GJ = params.EA, params.E * params.I1, params.E * params.I2, params.GJ
    lengths = np.linalg.norm(state.edges, axis=1)
    eps = lengths / state.rest_lengths - 1.0
    E_s = 0.5 * EA * np.sum(eps**2 * state.rest_lengths)

    E_b = 0.0
    E_t = 0.0
    for i in range(1, state.num_nodes - 1):
        k1, k2 = material_curvatures(state, i)
        dk1 = k1 - state.rest_kappa[i, 0]
        dk2 = k2 - state.rest_kappa[i, 1]
        E_b += 0.5 / state.voronoi[i] * (EI1 * dk1**2 + EI2 * dk2**2)
        E_t += 0.5 * GJ / state.voronoi[i] * twist_strain(state, i) ** 2
    return float(E_s + E_b + E_t)


# -----------------------------------------------------------------------------
# Per-stencil gradients and Hessians (of the energy, not the force)
# -----------------------------------------------------------------------------
def _stretch_grad_hess(x0: np.ndarray, x1: np.ndarray, rest: float, EA: float) -> Tuple[np.ndarray, np.ndarray]:
    e = x1 - x0
    le = np.linalg.norm(e)
    t = e / le
    eps = le / rest - 1.0
    g = EA * eps * t
    H = EA * (np.outer(t, t) / rest + eps * (_I3 - np.outer(t, t)) / le)
    grad = np.concatenate([-g, g])
    hess = np.block([[H, -H], [-H, H]])
    return grad, hess


def _bend_grad_hess(
    x0: np.ndarray,
    x1: np.ndarray,
    x2: np.ndarray,
    m1e: np.ndarray,
    m2e: np.ndarray,
    m1f: np.ndarray,
    m2f: np.ndarray,
    kappa_bar: np.ndarray,
    voronoi: float,
    EI1: float,
    EI2: float,
) -> Tuple[np.ndarray, np.ndarray]:
    # Worked in the convention kappa2 = -1/2 (m1e + m1f).kb; flipping the sign of
    # both kappa2 and its rest value leaves energy, gradient and Hessian unchanged.
    ee = x1 - x0
    ef = x2 - x1
    ne = np.linalg.norm(ee)
    nf = np.linalg.norm(ef)
    te = ee / ne
    tf = ef / nf
    chi = 1.0 + np.dot(te, tf)
    kb = 2.0 * np.cross(te, tf) / chi
    tilde_t = (te + tf) / chi
    tilde_d1 = (m1e + m1f) / chi
    tilde_d2 = (m2e + m2f) / chi
    k1 = 0.5 * np.dot(kb, m2e + m2f)
    k2 = -0.5 * np.dot(kb, m1e + m1f)

    Dk1De = (-k1 * tilde_t + np.cross(tf, tilde_d2)) / ne
    Dk1Df = (-k1 * tilde_t - np.cross(te, tilde_d2)) / nf
    Dk2De = (-k2 * tilde_t - np.cross(tf, tilde_d1)) / ne
    Dk2Df = (-k2 * tilde_t + np.cross(te, tilde_d1)) / nf

    g1 = np.zeros(11)
    g2 = np.zeros(11)
    g1[0:3] = -Dk1De
    g1[4:7] = Dk1De - Dk1Df
    g1[8:11] = Dk1Df
    g2[0:3] = -Dk2De
    g2[4:7] = Dk2De - Dk2Df
    g2[8:11] = Dk2Df
    g1[3] = -0.5 * np.dot(kb, m1e)
    g1[7] = -0.5 * np.dot(kb, m1f)
    g2[3] = -0.5 * np.dot(kb, m2e)
    g2[7] = -0.5 * np.dot(kb, m2f)

    ne2, nf2 = ne * ne, nf * nf
    tt = np.outer(tilde_t, tilde_t)
    Pe = _I3 - np.outer(te, te)
    Pf = _I3 - np.outer(tf, tf)
    Ief = _I3 + np.outer(te, tf)

    # kappa1
    A = np.outer(np.cross(tf, tilde_d2), tilde_t)
    B = np.outer(np.cross(te, tilde_d2), tilde_t)
    C = np.outer(kb, m2e)
    D = np.outer(kb, m2f)
    k1_ee = (2 * k1 * tt - A - A.T) / ne2 - k1 / (chi * ne2) * Pe + (C + C.T) / (4 * ne2)
    k1_ff = (2 * k1 * tt + B + B.T) / nf2 - k1 / (chi * nf2) * Pf + (D + D.T) / (4 * nf2)
    k1_ef = -k1 / (chi * ne * nf) * Ief + (2 * k1 * tt - A + B.T - cross_mat(tilde_d2)) / (ne * nf)

    # kappa2
    A = np.outer(np.cross(tf, tilde_d1), tilde_t)
    B = np.outer(np.cross(te, tilde_d1), tilde_t)
    C = np.outer(kb, m1e)
    D = np.outer(kb, m1f)
    k2_ee = (2 * k2 * tt + A + A.T) / ne2 - k2 / (chi * ne2) * Pe - (C + C.T) / (4 * ne2)
    k2_ff = (2 * k2 * tt - B - B.T) / nf2 - k2 / (chi * nf2) * Pf - (D + D.T) / (4 * nf2)
    k2_ef = -k2 / (chi * ne * nf) * Ief + (2 * k2 * tt + A - B.T + cross_mat(tilde_d1)) / (ne * nf)

    # twist coupling
    k1_tt = (-0.5 * np.dot(kb, m2e), -0.5 * np.dot(kb, m2f))
    k2_tt = (0.5 * np.dot(kb, m1e), 0.5 * np.dot(kb, m1f))
    k1_e_th = (
        (0.5 * np.dot(kb, m1e) * tilde_t - np.cross(tf, m1e) / chi) / ne,
        (0.5 * np.dot(kb, m1f) * tilde_t - np.cross(tf, m1f) / chi) / ne,
    )
    k1_f_th = (
        (0.5 * np.dot(kb, m1e) * tilde_t + np.cross(te, m1e) / chi) / nf,
        (0.5 * np.dot(kb, m1f) * tilde_t + np.cross(te, m1f) / chi) / nf,
    )
    k2_e_th = (
        (0.5 * np.dot(kb, m2e) * tilde_t - np.cross(tf, m2e) / chi) / ne,
        (0.5 * np.dot(kb, m2f) * tilde_t - np.cross(tf, m2f) / chi) / ne,
    )
    k2_f_th = (
        (0.5 * np.dot(kb, m2e) * tilde_t + np.cross(te, m2e) / chi) / nf,
        (0.5 * np.dot(kb, m2f) * tilde_t + np.cross(te, m2f) / chi) / nf,
    )

    DD1 = _assemble_curvature_hessian(k1_ee, k1_ff, k1_ef, k1_tt, k1_e_th, k1_f_th)
    DD2 = _assemble_curvature_hessian(k2_ee, k2_ff, k2_ef, k2_tt, k2_e_th, k2_f_th)

    dk1 = k1 - kappa_bar[0]
    dk2 = k2 + kappa_bar[1]
    grad = (EI1 * dk1 * g1 + EI2 * dk2 * g2) / voronoi
    hess = (
        EI1 * np.outer(g1, g1) + EI2 * np.outer(g2, g2) + EI1 * dk1 * DD1 + EI2 * dk2 * DD2
    ) / voronoi
    return grad, hess


def _assemble_curvature_hessian(ee, ff, ef, th2, e_th, f_th) -> np.ndarray:
    fe = ef.T
    DD = np.zeros((11, 11))
    DD[0:3, 0:3] = ee
    DD[0:3, 4:7] = -ee + ef
    DD[0:3, 8:11] = -ef
    DD[4:7, 0:3] = -ee + fe
    DD[4:7, 4:7] = ee - ef - fe + ff
    DD[4:7, 8:11] = ef - ff
    DD[8:11, 0:3] = -fe
    DD[8:11, 4:7] = fe - ff
    DD[8:11, 8:11] = ff

    DD[3, 3] = th2[0]
    DD[7, 7] = th2[1]
    for col, (de, df) in ((3, (e_th[0], f_th[0])), (7, (e_th[1], f_th[1]))):
        DD[0:3, col] = -de
        DD[4:7, col] = de - df
        DD[8:11, col] = df
        DD[col, 0:3] = DD[0:3, col]
        DD[col, 4:7] = DD[4:7, col]
        DD[col, 8:11] = DD[8:11, col]
    return DD


def _twist_grad_hess(
    x0: np.ndarray, x1: np.ndarray, x2: np.ndarray, tau: float, voronoi: float, GJ: float
) -> Tuple[np.ndarray, np.ndarray]:
    ee = x1 - x0
    ef = x2 - x1
    ne = np.linalg.norm(ee)
    nf = np.linalg.norm(ef)
    te = ee / ne
    tf = ef / nf
    chi = 1.0 + np.dot(te, tf)
    kb = 2.0 * np.cross(te, tf) / chi
    tilde_t = (te + tf) / chi

    g = np.zeros(11)
    g[0:3] = -0.5 / ne * kb
    g[8:11] = 0.5 / nf * kb
    g[4:7] = -(g[0:3] + g[8:11])
    g[3] = -1.0
    g[7] = 1.0

    D2mDe2 = -0.25 / (ne * ne) * (np.outer(kb, te + tilde_t) + np.outer(te + tilde_t, kb))
    D2mDf2 = -0.25 / (nf * nf) * (np.outer(kb, tf + tilde_t) + np.outer(tf + tilde_t, kb))
    D2mDeDf = 0.5 / (ne * nf) * (2.0 / chi * cross_mat(te) - np.outer(kb, tilde_t))
    D2mDfDe = D2mDeDf.T

    DD = np.zeros((11, 11))
    DD[0:3, 0:3] = D2mDe2
    DD[0:3, 4:7] = -D2mDe2 + D2mDeDf
    DD[4:7, 0:3] = -D2mDe2 + D2mDfDe
    DD[4:7, 4:7] = D2mDe2 - (D2mDeDf + D2mDfDe) + D2mDf2
    DD[0:3, 8:11] = -D2mDeDf
    DD[8:11, 0:3] = -D2mDfDe
    DD[8:11, 4:7] = D2mDfDe - D2mDf2
    DD[4:7, 8:11] = D2mDeDf - D2mDf2
    DD[8:11, 8:11] = D2mDf2

    c = GJ / voronoi
    return c * tau * g, c * (tau * DD + np.outer(g, g))


# -----------------------------------------------------------------------------
# Forces and Jacobian
# -----------------------------------------------------------------------------
def _energy_gradient_hessian(state: RodState, params: MaterialParams, with_hessian: bool):
    n = state.num_nodes
    ndof = state.ndof
    EA, EI1, EI2, GJ = params.EA, params.E * params.I1, params.E * params.I2, params.GJ
    grad = np.zeros(ndof)
    hess = np.zeros((ndof, ndof)) if with_hessian else None
    x = state.nodes

    for i in range(n - 1):
        g, H = _stretch_grad_hess(x[i], x[i + 1], state.rest_lengths[i], EA)
        idx = np.r_[4 * i : 4 * i + 3, 4 * i + 4 : 4 * i + 7]
        grad[idx] += g
        if with_hessian:
            hess[np.ix_(idx, idx)] += H

    m1, m2 = state.m1, state.m2
    for i in range(1, n - 1):
        s = slice(4 * (i - 1), 4 * (i - 1) + 11)
        try:
            g_b, H_b = _bend_grad_hess(
                x[i - 1], x[i], x[i + 1], m1[i - 1], m2[i - 1], m1[i], m2[i],
                state.rest_kappa[i], state.voronoi[i], EI1, EI2,
            )
        except FloatingPointError as exc:
            raise AntiparallelEdges("bending stencil undefined", {"node": i}) from exc
        g_t, H_t = _twist_grad_hess(x[i - 1], x[i], x[i + 1], twist_strain(state, i), state.voronoi[i], GJ)
        grad[s] += g_b + g_t
        if with_hessian:
            hess[s, s] += H_b + H_t
    return grad, hess


def internal_forces(state: RodState, params: MaterialParams) -> np.ndarray:
    """F_int = -dE/dq (length 4N - 1)."""
    grad, _ = _energy_gradient_hessian(state, params, with_hessian=False)
    return -grad


def internal_jacobian(state: RodState, params: MaterialParams) -> np.ndarray:
    """Hessian of the elastic energy; the force Jacobian is its negative."""
    _, hess = _energy_gradient_hessian(state, params, with_hessian=True)
    return hess


def internal_forces_and_jacobian(state: RodState, params: MaterialParams) -> Tuple[np.ndarray, np.ndarray]:
    """(F_int, dF_int/dq) in one pass."""
    grad, hess = _energy_gradient_hessian(state, params, with_hessian=True)
    return -grad, -hess
