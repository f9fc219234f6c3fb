"""Smoothed Coulomb friction between the two edges of a contact pair."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import expit

from framework.contact import ContactResponse
from models.params import FrictionParams
from utils.errors import ZeroNormalForce

logger = logging.getLogger(__name__)

MIN_TANGENTIAL_SPEED = 1e-14
_I3 = np.eye(3)
# edge i nodes receive -mu*gamma*v_hat*F^n, edge j nodes the opposite direction
_SIDE = np.array([-1.0, -1.0, 1.0, 1.0])


@dataclass
class FrictionResponse:
    forces: np.ndarray
    jacobian: np.ndarray

    @classmethod
    def zero(cls) -> "FrictionResponse":
        return cls(forces=np.zeros(12), jacobian=np.zeros((12, 12)))


def contact_normal(f_i: np.ndarray, f_i1: np.ndarray) -> np.ndarray:
    total = np.asarray(f_i) + np.asarray(f_i1)
    norm = np.linalg.norm(total)
    if norm == 0.0:
        raise ZeroNormalForce("contact forces on edge cancel out")
    return total / norm


def interpolation_ratio(f_a: np.ndarray, f_b: np.ndarray) -> float:
    """beta = |F_b| / |F_a + F_b|, the force-weighted contact location on an edge."""
    total = np.linalg.norm(np.asarray(f_a) + np.asarray(f_b))
    if total == 0.0:
        raise ZeroNormalForce("contact forces on edge cancel out")
    return float(np.linalg.norm(f_b) / total)


def relative_tangential_velocity(
    velocities: np.ndarray, beta_i: float, beta_j: float, n: np.ndarray
) -> np.ndarray:
    v0, v1, v2, v3 = np.asarray(velocities, dtype=float).reshape(4, 3)
    v_rel = (1.0 - beta_i) * v0 + beta_i * v1 - (1.0 - beta_j) * v2 - beta_j * v3
    return v_rel - np.dot(v_rel, n) * n


def slip_ratio(speed: float, nu: float) -> float:
    """gamma = 2 / (1 + exp(-K2 |v|)) - 1 with K2 = 15 / nu."""
    return float(2.0 * expit(15.0 / nu * speed) - 1.0)


def _kinematics(contact: ContactResponse, velocities: np.ndarray):
    F = contact.force.reshape(4, 3)
    n = contact_normal(F[0], F[1])
    beta_i = interpolation_ratio(F[0], F[1])
    beta_j = interpolation_ratio(F[2], F[3])
    v_t = relative_tangential_velocity(velocities, beta_i, beta_j, n)
    return F, n, beta_i, beta_j, v_t


def friction_forces(contact: ContactResponse, velocities: np.ndarray, params: FrictionParams) -> np.ndarray:
    """Per-node friction over the pair's 12 coordinates."""
    return friction_response(contact, velocities, params, dt=None).forces


def friction_jacobian(
    contact: ContactResponse, velocities: np.ndarray, params: FrictionParams, dt: float
) -> np.ndarray:
    """Total derivative of the friction forces w.r.t. the pair positions, with v = (x - x0) / dt."""
    return friction_response(contact, velocities, params, dt=dt).jacobian


def friction_response(
    contact: ContactResponse,
    velocities: np.ndarray,
    params: FrictionParams,
    dt: Optional[float],
) -> FrictionResponse:
    if params.mu == 0.0:
        return FrictionResponse.zero()
    try:
        F, n, beta_i, beta_j, v_t = _kinematics(contact, velocities)
    except ZeroNormalForce:
        return FrictionResponse.zero()

    speed = np.linalg.norm(v_t)
    if speed < MIN_TANGENTIAL_SPEED:
        return FrictionResponse.zero()

    mu, K2 = params.mu, params.K2
    sig = float(expit(K2 * speed))
    gamma = 2.0 * sig - 1.0
    t_hat = v_t / speed
    g = mu * gamma * t_hat
    magnitudes = np.linalg.norm(F, axis=1)

    forces = np.concatenate([_SIDE[k] * magnitudes[k] * g for k in range(4)])
    if dt is None:
        return FrictionResponse(forces=forces, jacobian=np.zeros((12, 12)))

    # dg/dv_t
    TT = np.outer(t_hat, t_hat)
    G = mu * (2.0 * K2 * sig * (1.0 - sig) * TT + gamma / speed * (_I3 - TT))

    v = np.asarray(velocities, dtype=float).reshape(4, 3)
    P = _I3 - np.outer(n, n)
    dfdv, dfdF = _partials(F, magnitudes, n, P, beta_i, beta_j, v, g, G)
    jacobian = dfdv / dt + dfdF @ contact.jacobian
    return FrictionResponse(forces=forces, jacobian=jacobian)


def _partials(F, magnitudes, n, P, beta_i, beta_j, v, g, G) -> Tuple[np.ndarray, np.ndarray]:
    """(d friction / d nodal velocities, d friction / d contact forces), both 12x12."""
    weights = np.array([1.0 - beta_i, beta_i, -(1.0 - beta_j), -beta_j])
    GP = G @ P

    dfdv = np.zeros((12, 12))
    for k in range(4):
        for l in range(4):
            dfdv[3 * k : 3 * k + 3, 3 * l : 3 * l + 3] = _SIDE[k] * magnitudes[k] * weights[l] * GP

    v_rel = weights @ v
    S = F[0] + F[1]
    T = F[2] + F[3]
    s_norm = np.linalg.norm(S)
    t_norm = np.linalg.norm(T)
    m = T / t_norm

    unit = [F[k] / magnitudes[k] if magnitudes[k] > 0.0 else np.zeros(3) for k in range(4)]
    dbi = [-magnitudes[1] * n / s_norm**2, unit[1] / s_norm - magnitudes[1] * n / s_norm**2]
    dbj = [-magnitudes[3] * m / t_norm**2, unit[3] / t_norm - magnitudes[3] * m / t_norm**2]

    dvt_dn = -np.dot(n, v_rel) * _I3 - np.outer(n, v_rel)
    dn_dS = P / s_norm

    dvt_dF = []
    for mblk in range(4):
        block = np.zeros((3, 3))
        if mblk < 2:
            block += dvt_dn @ dn_dS
            block += P @ np.outer(v[1] - v[0], dbi[mblk])
        else:
            block += P @ np.outer(v[2] - v[3], dbj[mblk - 2])
        dvt_dF.append(block)

    dfdF = np.zeros((12, 12))
    for k in range(4):
        for mblk in range(4):
            block = magnitudes[k] * G @ dvt_dF[mblk]
            if k == mblk:
                block = block + np.outer(g, unit[k])
            dfdF[3 * k : 3 * k + 3, 3 * mblk : 3 * mblk + 3] = _SIDE[k] * block
    return dfdv, dfdF
