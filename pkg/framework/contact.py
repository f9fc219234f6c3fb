"""Penalty contact energy between rod edges and its per-pair force and Jacobian.

All distance work is done on coordinates scaled by 1/h, where the contact
threshold is 2; gradients come back multiplied by 1/h and Hessians by 1/h^2.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import expit

from framework.geometry import CandidateSet, ContactPair, contact_node_map, distance_gradient_hessian, edge_distance
from models.params import ContactParams, MaterialParams
from utils.errors import NonPositiveDistance

logger = logging.getLogger(__name__)


@dataclass
class ContactResponse:
    energy: float
    force: np.ndarray
    jacobian: np.ndarray

    @classmethod
    def zero(cls) -> "ContactResponse":
        return cls(energy=0.0, force=np.zeros(12), jacobian=np.zeros((12, 12)))


def _softplus(z: float) -> float:
    return max(z, 0.0) + np.log1p(np.exp(-abs(z)))


def contact_energy_derivatives(dist_bar: float, delta_bar: float) -> Tuple[float, float, float]:
    """(E, dE/dDelta_bar, d2E/dDelta_bar2) of the scaled three-branch energy."""
    if dist_bar <= 0.0:
        raise NonPositiveDistance("scaled contact distance is not positive", {"distance_bar": dist_bar})
    if dist_bar >= 2.0 + delta_bar:
        return 0.0, 0.0, 0.0
    if dist_bar <= 2.0 - delta_bar:
        gap = 2.0 - dist_bar
        return gap * gap, -2.0 * gap, 2.0
    K1 = 15.0 / delta_bar
    z = K1 * (2.0 - dist_bar)
    L = _softplus(z)
    sig = float(expit(z))
    energy = (L / K1) ** 2
    d1 = -2.0 * L * sig / K1
    d2 = 2.0 * (sig * sig + L * sig * (1.0 - sig))
    return energy, d1, d2


def contact_energy(dist_bar: float, delta_bar: float) -> float:
    return contact_energy_derivatives(dist_bar, delta_bar)[0]


def contact_force_jacobian(
    pair: ContactPair,
    q: np.ndarray,
    params: ContactParams,
    h: float,
    stiffness: float,
) -> ContactResponse:
    """Force -k dE/dx and its Jacobian -k d2E/dx2 over the pair's 12 coordinates."""
    x = q[pair.dofs]
    result = edge_distance(x)
    pair.result = result
    delta_bar = params.delta_bar(h)
    dist_bar = result.distance / h
    if dist_bar >= 2.0 + delta_bar:
        return ContactResponse.zero()
    try:
        energy, dE, d2E = contact_energy_derivatives(dist_bar, delta_bar)
    except NonPositiveDistance as exc:
        raise exc.with_context(pair=pair.key)

    x_bar = x / h
    _, g_bar, H_bar = distance_gradient_hessian(x_bar)
    grad = dE * g_bar / h
    hess = (d2E * np.outer(g_bar, g_bar) + dE * H_bar) / (h * h)
    return ContactResponse(energy=stiffness * energy, force=-stiffness * grad, jacobian=-stiffness * hess)


def initial_contact_stiffness(contact: ContactParams, material: MaterialParams, rod_length: float) -> float:
    """Stiffness used before any candidate pair has been seen."""
    if contact.initial_stiffness is not None:
        return contact.initial_stiffness
    return contact.stiffness_scale * material.EA / rod_length * contact.delta_m(material.radius)


def update_contact_stiffness(
    candidates: CandidateSet,
    forces_without_contact: np.ndarray,
    scale: float,
    previous: float,
) -> float:
    """k = s * max nodal force norm over candidate nodes; ``previous`` when there is nothing to measure."""
    nodes = contact_node_map(candidates.pairs)
    if not nodes:
        return previous
    norms = [np.linalg.norm(forces_without_contact[idx]) for idx in nodes.values()]
    peak = max(norms)
    if peak <= 0.0:
        return previous
    k = peak * scale
    logger.debug("contact stiffness %.4e from %d candidate nodes", k, len(nodes))
    return float(k)
