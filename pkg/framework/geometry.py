"""Edge-edge proximity: candidate detection, distance classification and derivatives."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from framework.rod import RodState, num_dofs
from utils.errors import DegenerateEdge, ParallelEdges

logger = logging.getLogger(__name__)

PARALLEL_EPS = 1e-10
_I3 = np.eye(3)


class DistanceKind(str, Enum):
    POINT_POINT = "PointPoint"
    POINT_EDGE = "PointEdge"
    EDGE_EDGE = "EdgeEdge"


@dataclass(frozen=True, order=True)
class EdgePairKey:
    rod_a: int
    edge_i: int
    rod_b: int
    edge_j: int

    @classmethod
    def canonical(cls, rod_a: int, edge_i: int, rod_b: int, edge_j: int) -> "EdgePairKey":
        if (rod_a, edge_i) <= (rod_b, edge_j):
            return cls(rod_a, edge_i, rod_b, edge_j)
        return cls(rod_b, edge_j, rod_a, edge_i)

    def is_valid(self) -> bool:
        return self.rod_a != self.rod_b or abs(self.edge_j - self.edge_i) > 1


@dataclass
class DistanceResult:
    kind: DistanceKind
    distance: float
    beta_i: float
    beta_j: float
    c_i: np.ndarray
    c_j: np.ndarray
    parallel: bool = False


@dataclass
class ContactPair:
    """One 12-DOF stencil [x_i, x_{i+1}, x_j, x_{j+1}] with its global DOF indices."""

    key: EdgePairKey
    dofs: np.ndarray
    result: Optional[DistanceResult] = None
    force: Optional[np.ndarray] = None
    jacobian: Optional[np.ndarray] = None

    def coordinates(self, q: np.ndarray) -> np.ndarray:
        return q[self.dofs]

    @property
    def node_ids(self) -> List[Tuple[int, int]]:
        k = self.key
        return [(k.rod_a, k.edge_i), (k.rod_a, k.edge_i + 1), (k.rod_b, k.edge_j), (k.rod_b, k.edge_j + 1)]


@dataclass
class CandidateSet:
    pairs: List[ContactPair] = field(default_factory=list)
    margin: float = 0.0

    def __len__(self) -> int:
        return len(self.pairs)

    def keys(self) -> List[EdgePairKey]:
        return [p.key for p in self.pairs]


ContactSet = CandidateSet


# -----------------------------------------------------------------------------
# Narrow phase
# -----------------------------------------------------------------------------
def _clamp01(v: float) -> float:
    return min(max(v, 0.0), 1.0)


def _is_parallel(e1: np.ndarray, e2: np.ndarray) -> bool:
    return np.linalg.norm(np.cross(e1, e2)) < PARALLEL_EPS * np.linalg.norm(e1) * np.linalg.norm(e2)


def _parallel_betas(x0, x1, x2, x3) -> Tuple[float, float]:
    """Closest-point ratios of parallel edges, centred on the overlap."""
    e1 = x1 - x0
    A = np.dot(e1, e1)
    s2 = np.dot(x2 - x0, e1) / A
    s3 = np.dot(x3 - x0, e1) / A
    lo, hi = max(min(s2, s3), 0.0), min(max(s2, s3), 1.0)
    if lo <= hi:
        bi = 0.5 * (lo + hi)
    else:
        bi = 0.0 if max(s2, s3) < 0.0 else 1.0
    e2 = x3 - x2
    p = x0 + bi * e1
    bj = _clamp01(np.dot(p - x2, e2) / np.dot(e2, e2))
    q = x2 + bj * e2
    bi = _clamp01(np.dot(q - x0, e1) / A)
    return bi, bj


def _lumelsky_betas(x0, x1, x2, x3) -> Tuple[float, float]:
    e1 = x1 - x0
    e2 = x3 - x2
    r = x2 - x0
    A = np.dot(e1, e1)
    B = np.dot(e1, e2)
    C = np.dot(e2, e2)
    D = np.dot(e1, r)
    E = np.dot(e2, r)
    denom = A * C - B * B

    bi = _clamp01((D * C - E * B) / denom)
    bj = (bi * B - E) / C
    if bj < 0.0:
        bj = 0.0
        bi = _clamp01(D / A)
    elif bj > 1.0:
        bj = 1.0
        bi = _clamp01((B + D) / A)
    return bi, bj


def _kind_of(beta_i: float, beta_j: float) -> DistanceKind:
    clamped = int(beta_i in (0.0, 1.0)) + int(beta_j in (0.0, 1.0))
    return (DistanceKind.EDGE_EDGE, DistanceKind.POINT_EDGE, DistanceKind.POINT_POINT)[clamped]


def classify_and_beta(x_ij: np.ndarray) -> Tuple[DistanceKind, float, float]:
    """Constrained minimizer (beta_i, beta_j) of the edge-edge distance and its category."""
    x0, x1, x2, x3 = np.asarray(x_ij, dtype=float).reshape(4, 3)
    e1 = x1 - x0
    e2 = x3 - x2
    if np.dot(e1, e1) == 0.0 or np.dot(e2, e2) == 0.0:
        raise DegenerateEdge("zero-length edge in distance query")
    if _is_parallel(e1, e2):
        bi, bj = _parallel_betas(x0, x1, x2, x3)
    else:
        bi, bj = _lumelsky_betas(x0, x1, x2, x3)
    return _kind_of(bi, bj), bi, bj


def distance_pp(x_a: np.ndarray, x_b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(x_a) - np.asarray(x_b)))


def distance_pe(x_a: np.ndarray, x_b: np.ndarray, x_c: np.ndarray) -> float:
    """Distance from ``x_c`` to the line through edge (x_a, x_b)."""
    e = np.asarray(x_a) - np.asarray(x_b)
    ne = np.linalg.norm(e)
    if ne == 0.0:
        raise DegenerateEdge("zero-length edge in point-edge distance")
    return float(np.linalg.norm(np.cross(e, np.asarray(x_b) - np.asarray(x_c))) / ne)


def distance_ee(x_i: np.ndarray, x_i1: np.ndarray, x_j: np.ndarray, x_j1: np.ndarray) -> float:
    e1 = np.asarray(x_i1) - np.asarray(x_i)
    e2 = np.asarray(x_j1) - np.asarray(x_j)
    u = np.cross(e1, e2)
    nu = np.linalg.norm(u)
    if nu < PARALLEL_EPS * np.linalg.norm(e1) * np.linalg.norm(e2):
        raise ParallelEdges("edge-edge formula undefined for parallel edges")
    return float(abs(np.dot(np.asarray(x_i) - np.asarray(x_j), u / nu)))


def edge_distance(x_ij: np.ndarray) -> DistanceResult:
    """Classify a pair and evaluate its minimum distance with the branch formula."""
    x_ij = np.asarray(x_ij, dtype=float)
    x0, x1, x2, x3 = x_ij.reshape(4, 3)
    kind, bi, bj = classify_and_beta(x_ij)
    c_i = x0 + bi * (x1 - x0)
    c_j = x2 + bj * (x3 - x2)
    parallel = _is_parallel(x1 - x0, x3 - x2)

    if kind is DistanceKind.POINT_POINT:
        dist = distance_pp(c_i, c_j)
    elif kind is DistanceKind.POINT_EDGE:
        if bi in (0.0, 1.0):
            dist = distance_pe(x2, x3, c_i)
        else:
            dist = distance_pe(x0, x1, c_j)
    elif parallel:
        dist = distance_pe(x2, x3, c_i)
    else:
        dist = distance_ee(x0, x1, x2, x3)
    return DistanceResult(kind=kind, distance=dist, beta_i=bi, beta_j=bj, c_i=c_i, c_j=c_j, parallel=parallel)


# -----------------------------------------------------------------------------
# Distance derivatives
# -----------------------------------------------------------------------------
def distance_gradient_hessian(x_ij: np.ndarray, result: Optional[DistanceResult] = None) -> Tuple[float, np.ndarray, np.ndarray]:
    """(Delta, dDelta/dx, d2Delta/dx2) over the 12 pair coordinates.

    Unclamped ratios are eliminated through the stationarity condition, so the
    returned derivatives follow the classified branch. For parallel edges with an
    interior overlap beta_i is held fixed.
    """
    x_ij = np.asarray(x_ij, dtype=float)
    if result is None:
        result = edge_distance(x_ij)
    x0, x1, x2, x3 = x_ij.reshape(4, 3)
    bi, bj = result.beta_i, result.beta_j
    e1 = x1 - x0
    e2 = x3 - x2
    d = result.c_i - result.c_j

    Amat = np.hstack([(1.0 - bi) * _I3, bi * _I3, -(1.0 - bj) * _I3, -bj * _I3])
    g = 2.0 * Amat.T @ d
    H = 2.0 * Amat.T @ Amat

    free_i = 0.0 < bi < 1.0 and not result.parallel
    free_j = 0.0 < bj < 1.0
    cols = []
    diag = []
    if free_i:
        cols.append(2.0 * (np.concatenate([-d, d, np.zeros(6)]) + Amat.T @ e1))
        diag.append("i")
    if free_j:
        cols.append(2.0 * (np.concatenate([np.zeros(6), d, -d]) - Amat.T @ e2))
        diag.append("j")
    if cols:
        G = np.column_stack(cols)
        entries = {"i": np.dot(e1, e1), "j": np.dot(e2, e2)}
        Hbb = np.diag([2.0 * entries[k] for k in diag])
        if len(diag) == 2:
            Hbb[0, 1] = Hbb[1, 0] = -2.0 * np.dot(e1, e2)
        H = H - G @ np.linalg.solve(Hbb, G.T)

    delta = float(np.linalg.norm(d))
    grad = g / (2.0 * delta)
    hess = (H - 2.0 * np.outer(grad, grad)) / (2.0 * delta)
    return delta, grad, hess


# -----------------------------------------------------------------------------
# Broad phase
# -----------------------------------------------------------------------------
def dof_offsets(rods: Sequence[RodState]) -> np.ndarray:
    sizes = [num_dofs(r.num_nodes) for r in rods]
    return np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)


def pair_dofs(offsets: np.ndarray, key: EdgePairKey) -> np.ndarray:
    a = offsets[key.rod_a] + 4 * key.edge_i
    b = offsets[key.rod_b] + 4 * key.edge_j
    return np.r_[a : a + 3, a + 4 : a + 7, b : b + 3, b + 4 : b + 7]


def _edge_table(rods: Sequence[RodState]):
    rod_ids, edge_ids, starts, ends = [], [], [], []
    for r, rod in enumerate(rods):
        n_e = rod.num_edges
        rod_ids.append(np.full(n_e, r))
        edge_ids.append(np.arange(n_e))
        starts.append(rod.nodes[:-1])
        ends.append(rod.nodes[1:])
    return (
        np.concatenate(rod_ids),
        np.concatenate(edge_ids),
        np.concatenate(starts),
        np.concatenate(ends),
    )


def _box_overlaps(rods: Sequence[RodState], reach: float, inter_rod_only: bool = False):
    rod_ids, edge_ids, starts, ends = _edge_table(rods)
    lo = np.minimum(starts, ends) - reach / 2.0
    hi = np.maximum(starts, ends) + reach / 2.0
    a, b = np.triu_indices(len(rod_ids), k=1)
    hit = np.all((lo[a] <= hi[b]) & (lo[b] <= hi[a]), axis=1)
    same = rod_ids[a] == rod_ids[b]
    if inter_rod_only:
        hit &= ~same
    else:
        hit &= ~same | (np.abs(edge_ids[a] - edge_ids[b]) > 1)
    a, b = a[hit], b[hit]
    for ia, ib in zip(a, b):
        yield EdgePairKey.canonical(int(rod_ids[ia]), int(edge_ids[ia]), int(rod_ids[ib]), int(edge_ids[ib]))


def build_candidate_set(rods: Sequence[RodState], delta_hat: float, h: float) -> CandidateSet:
    """Every valid edge pair with Delta < 2h + delta_hat."""
    reach = 2.0 * h + delta_hat
    offsets = dof_offsets(rods)
    q = np.concatenate([r.q for r in rods])
    pairs = []
    for key in _box_overlaps(rods, reach):
        dofs = pair_dofs(offsets, key)
        result = edge_distance(q[dofs])
        if result.distance < reach:
            pairs.append(ContactPair(key=key, dofs=dofs, result=result))
    logger.debug("candidate set: %d pairs within %.3e m", len(pairs), reach)
    return CandidateSet(pairs=pairs, margin=delta_hat)


def refresh_contact_set(candidates: CandidateSet, q: np.ndarray, delta: float, h: float) -> ContactSet:
    """Candidates whose current distance is below 2h + delta, with refreshed classification."""
    reach = 2.0 * h + delta
    active = []
    for pair in candidates.pairs:
        result = edge_distance(q[pair.dofs])
        if result.distance < reach:
            active.append(ContactPair(key=pair.key, dofs=pair.dofs, result=result))
    return ContactSet(pairs=active, margin=delta)


def minimum_gap(rods: Sequence[RodState], h: float, reach: float) -> float:
    """Smallest inter-rod surface gap (Delta - 2h) among pairs within ``reach``; inf when none."""
    offsets = dof_offsets(rods)
    q = np.concatenate([r.q for r in rods])
    best = np.inf
    for key in _box_overlaps(rods, 2.0 * h + reach, inter_rod_only=True):
        best = min(best, edge_distance(q[pair_dofs(offsets, key)]).distance - 2.0 * h)
    return float(best)


def contact_node_map(pairs: Sequence[ContactPair]) -> Dict[Tuple[int, int], np.ndarray]:
    """Position DOF indices of every node touched by the given pairs."""
    nodes: Dict[Tuple[int, int], np.ndarray] = {}
    for pair in pairs:
        for k, node in enumerate(pair.node_ids):
            nodes.setdefault(node, pair.dofs[3 * k : 3 * k + 3])
    return nodes
