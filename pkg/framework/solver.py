"""Backward-Euler time stepping: Newton iterations over the free DOFs with a
Goldstein-Price line search, contact and friction handled implicitly and
viscous drag explicitly.
"""
from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from framework.contact import contact_force_jacobian, update_contact_stiffness
from framework.friction import friction_response
from framework.geometry import CandidateSet, build_candidate_set, refresh_contact_set
from framework.hydro import hydrodynamic_forces
from framework.rod import internal_forces, internal_forces_and_jacobian
from framework.system import SystemState
from models.config import SimConfig
from models.params import SolverParams
from models.trajectory import StepStats
from utils.errors import (
    AntiparallelEdges,
    DegenerateEdge,
    FlagellaError,
    NonConvergence,
    NonPositiveDistance,
    SingularJacobian,
)

logger = logging.getLogger(__name__)


@dataclass
class ForceTerms:
    """Every force entering the equations of motion at one trial configuration."""

    internal: np.ndarray
    contact: np.ndarray
    friction: np.ndarray
    hydro: np.ndarray
    external: np.ndarray
    internal_jacobian: Optional[sp.csr_matrix] = None
    contact_jacobian: Optional[sp.csr_matrix] = None
    friction_jacobian: Optional[sp.csr_matrix] = None
    active_pairs: int = 0

    @property
    def total(self) -> np.ndarray:
        return self.internal + self.contact + self.friction + self.hydro + self.external


@dataclass
class LineSearchResult:
    alpha: float
    iterations: int


# -----------------------------------------------------------------------------
# Force evaluation
# -----------------------------------------------------------------------------
def _internal_terms(q: np.ndarray, state: SystemState, config: SimConfig, with_jacobian: bool):
    rods = state.rods_at(q)
    forces = np.zeros(state.ndof)
    blocks = []
    for rod, s in zip(rods, state.rod_slices()):
        if with_jacobian:
            f, j = internal_forces_and_jacobian(rod, config.material)
            blocks.append(sp.csr_matrix(j))
        else:
            f = internal_forces(rod, config.material)
        forces[s] = f
    jac = sp.block_diag(blocks, format="csr") if with_jacobian else None
    return rods, forces, jac


def _contact_terms(
    q: np.ndarray,
    state: SystemState,
    config: SimConfig,
    candidates: Optional[CandidateSet],
    stiffness: float,
    with_jacobian: bool,
):
    n = state.ndof
    F_c = np.zeros(n)
    F_fr = np.zeros(n)
    if not candidates:
        empty = sp.csr_matrix((n, n)) if with_jacobian else None
        return F_c, F_fr, empty, empty, 0

    h = config.material.radius
    active = refresh_contact_set(candidates, q, config.contact.delta_m(h), h)
    q0 = state.q
    dt = state.dt
    rows, cols, data_c, data_fr = [], [], [], []
    for pair in active.pairs:
        response = contact_force_jacobian(pair, q, config.contact, h, stiffness)
        F_c[pair.dofs] += response.force
        velocities = (q[pair.dofs] - q0[pair.dofs]) / dt
        fr = friction_response(response, velocities, config.friction, dt if with_jacobian else None)
        F_fr[pair.dofs] += fr.forces
        if with_jacobian:
            rows.append(np.repeat(pair.dofs, 12))
            cols.append(np.tile(pair.dofs, 12))
            data_c.append(response.jacobian.ravel())
            data_fr.append(fr.jacobian.ravel())

    J_c = J_fr = None
    if with_jacobian:
        if rows:
            r, c = np.concatenate(rows), np.concatenate(cols)
            J_c = sp.coo_matrix((np.concatenate(data_c), (r, c)), shape=(n, n)).tocsr()
            J_fr = sp.coo_matrix((np.concatenate(data_fr), (r, c)), shape=(n, n)).tocsr()
        else:
            J_c = J_fr = sp.csr_matrix((n, n))
    return F_c, F_fr, J_c, J_fr, len(active)


def evaluate_forces(
    q: np.ndarray,
    state: SystemState,
    config: SimConfig,
    candidates: Optional[CandidateSet],
    stiffness: float,
    hydro: np.ndarray,
    with_jacobian: bool = True,
) -> ForceTerms:
    _, F_int, J_int = _internal_terms(q, state, config, with_jacobian)
    F_c, F_fr, J_c, J_fr, active = _contact_terms(q, state, config, candidates, stiffness, with_jacobian)
    external = np.zeros(state.ndof) if state.body_force is None else state.body_force
    return ForceTerms(
        internal=F_int,
        contact=F_c,
        friction=F_fr,
        hydro=hydro,
        external=external,
        internal_jacobian=J_int,
        contact_jacobian=J_c,
        friction_jacobian=J_fr,
        active_pairs=active,
    )


# -----------------------------------------------------------------------------
# Residual and Newton matrix
# -----------------------------------------------------------------------------
def inertial_term(q_trial: np.ndarray, state: SystemState) -> np.ndarray:
    dt = state.dt
    return state.mass * (q_trial - state.q - dt * state.velocities) / dt**2


def residual(q_trial: np.ndarray, state: SystemState, forces: ForceTerms) -> np.ndarray:
    """M (q - q_t - dt v_t) / dt^2 - F_int - F_c - F_fr - F_hydro - F_ext."""
    return inertial_term(q_trial, state) - forces.total


def newton_matrix(state: SystemState, forces: ForceTerms) -> sp.csr_matrix:
    """Full dF/dq = M / dt^2 - (J_int + J_c + J_fr); drag is explicit and contributes nothing."""
    if forces.internal_jacobian is None:
        raise ValueError("forces were evaluated without Jacobians")
    J = sp.diags(state.mass / state.dt**2, format="csr") - forces.internal_jacobian
    if forces.contact_jacobian is not None:
        J = J - forces.contact_jacobian - forces.friction_jacobian
    return J.tocsr()


def free_block(J: sp.csr_matrix, free: np.ndarray) -> sp.csc_matrix:
    return J[free][:, free].tocsc()


def newton_step(J_free: sp.spmatrix, F_free: np.ndarray, context: Optional[dict] = None) -> np.ndarray:
    """Solve J_free dq = F_free."""
    with warnings.catch_warnings():
        warnings.simplefilter("error", MatrixRankWarning)
        try:
            dq = spsolve(sp.csc_matrix(J_free), F_free)
        except (MatrixRankWarning, RuntimeError) as exc:
            raise SingularJacobian("Newton matrix is singular", context) from exc
    dq = np.atleast_1d(dq)
    if not np.all(np.isfinite(dq)):
        raise SingularJacobian("Newton solve produced non-finite update", context)
    return dq


def line_search(
    q: np.ndarray,
    dq: np.ndarray,
    residual_fn: Callable[[np.ndarray], np.ndarray],
    params: SolverParams,
    jacobian: Optional[sp.spmatrix] = None,
    f0: Optional[np.ndarray] = None,
) -> LineSearchResult:
    """Bisection on alpha until the merit change of the update q - alpha dq satisfies

        alpha m2 d0 <= 1/2 |F(q - alpha dq)|^2 - 1/2 |F(q)|^2 <= alpha m1 d0

    where d0 = -F^T (dF/dq) dq is the merit slope along the update.
    """
    f0 = residual_fn(q) if f0 is None else f0
    phi0 = 0.5 * float(f0 @ f0)
    d0 = -float(f0 @ (jacobian @ dq)) if jacobian is not None else -2.0 * phi0
    m1, m2 = params.m1, params.m2
    alpha_l, alpha_u = params.alpha_lower, params.alpha_upper
    alpha = 1.0
    iterations = 0
    while True:
        try:
            f = residual_fn(q - alpha * dq)
            change = 0.5 * float(f @ f) - phi0
        except (NonPositiveDistance, DegenerateEdge, AntiparallelEdges):
            change = np.inf
        if not np.isfinite(change):
            change = np.inf

        if alpha * m2 * d0 <= change <= alpha * m1 * d0:
            return LineSearchResult(alpha=alpha, iterations=iterations)
        if change < alpha * m2 * d0:
            alpha_l = alpha
        else:
            alpha_u = alpha
        iterations += 1
        if abs(alpha_u - alpha_l) < params.alpha_collapse or iterations >= params.max_line_search_iters:
            alpha = 0.5 * (alpha_l + alpha_u)
            if abs(alpha_u - alpha_l) < params.alpha_collapse:
                logger.warning("line search interval collapsed at alpha=%.3e", alpha)
            return LineSearchResult(alpha=alpha, iterations=iterations)
        alpha = 0.5 * (alpha_l + alpha_u)


# -----------------------------------------------------------------------------
# Clamp reaction
# -----------------------------------------------------------------------------
def clamp_reaction(state: SystemState, q: np.ndarray, forces: ForceTerms) -> np.ndarray:
    """(num_rods, 3) force the clamps exert on each rod: the residual summed over prescribed positions."""
    R = residual(q, state, forces)
    out = np.zeros((len(state.rods), 3))
    fixed = set(state.fixed.tolist())
    for r, s in enumerate(state.rod_slices()):
        for idx in range(s.start, s.stop):
            local = idx - s.start
            if idx in fixed and local % 4 != 3:
                out[r, local % 4] += R[idx]
    return out


# -----------------------------------------------------------------------------
# Time step
# -----------------------------------------------------------------------------
def _unbalanced_forces(q: np.ndarray, state: SystemState, F_int: np.ndarray, hydro: np.ndarray) -> np.ndarray:
    external = 0.0 if state.body_force is None else state.body_force
    return inertial_term(q, state) - F_int - hydro - external


def step(state: SystemState, config: SimConfig, record_clamp: bool = False) -> Tuple[SystemState, StepStats]:
    """Advance every rod by one time step."""
    started = time.perf_counter()
    solver = config.solver
    h = config.material.radius
    dt = state.dt
    t_next = state.time + dt
    free = state.free
    ctx = {"step": state.step_index + 1, "time": round(t_next, 12)}

    q = state.q.copy()
    if state.fixed.size:
        q[state.fixed] = state.prescribed(t_next)

    try:
        if config.fluid.enabled:
            hydro = hydrodynamic_forces(state.rods, config.fluid, h)
        else:
            hydro = np.zeros(state.ndof)
    except FlagellaError as exc:
        raise exc.with_context(**ctx)

    def _free_residual(candidates: CandidateSet, k: float):
        def fn(x_free: np.ndarray) -> np.ndarray:
            trial = q.copy()
            trial[free] = x_free
            forces = evaluate_forces(trial, state, config, candidates, k, hydro, with_jacobian=False)
            return residual(trial, state, forces)[free]

        return fn

    k = state.contact_stiffness
    candidates: Optional[CandidateSet] = None
    tol = solver.abs_tol
    n = 0
    ls_total = 0
    active = 0
    err = 0.0
    while True:
        try:
            rods, F_int, J_int = _internal_terms(q, state, config, with_jacobian=True)
            if n == 0:
                candidates = build_candidate_set(rods, config.contact.delta_hat_m(h), h)
                k = update_contact_stiffness(
                    candidates, _unbalanced_forces(q, state, F_int, hydro), config.contact.stiffness_scale, k
                )
            F_c, F_fr, J_c, J_fr, active = _contact_terms(q, state, config, candidates, k, with_jacobian=True)
        except FlagellaError as exc:
            raise exc.with_context(iteration=n, **ctx)

        forces = ForceTerms(
            internal=F_int,
            contact=F_c,
            friction=F_fr,
            hydro=hydro,
            external=np.zeros(state.ndof) if state.body_force is None else state.body_force,
            internal_jacobian=J_int,
            contact_jacobian=J_c,
            friction_jacobian=J_fr,
            active_pairs=active,
        )
        F_free = residual(q, state, forces)[free]
        err = float(np.linalg.norm(F_free))
        if n == 0:
            tol = max(solver.rel_tol * err, solver.abs_tol)

        if err <= tol:
            break
        if n >= solver.max_newton_iters:
            stats = _stats(state, started, n, ls_total, active, candidates, k, err, converged=False)
            partial = state.advance(q, (q - state.q) / dt, k)
            logger.warning("Newton did not converge: |F|=%.3e > tol=%.3e at step %d", err, tol, ctx["step"])
            raise NonConvergence(
                "Newton iteration cap reached",
                dict(ctx, iterations=n, residual=err, tolerance=tol),
                partial=(partial, stats),
            )

        J_free = free_block(newton_matrix(state, forces), free)
        dq = newton_step(J_free, F_free, dict(ctx, iteration=n))
        ls = line_search(q[free], dq, _free_residual(candidates, k), solver, jacobian=J_free, f0=F_free)
        q[free] -= ls.alpha * dq
        ls_total += ls.iterations
        n += 1
        logger.debug(
            "step %d iter %d |F|=%.3e alpha=%.3g ls=%d contacts=%d",
            ctx["step"], n, err, ls.alpha, ls.iterations, active,
        )

    velocities = (q - state.q) / dt
    new_state = state.advance(q, velocities, k)
    stats = _stats(state, started, n, ls_total, active, candidates, k, err, converged=True)
    if record_clamp:
        stats.clamp_forces = clamp_reaction(state, q, forces).tolist()
    return new_state, stats


def _stats(state, started, n, ls_total, active, candidates, k, err, converged) -> StepStats:
    return StepStats(
        step=state.step_index + 1,
        time=state.time + state.dt,
        newton_iters=n,
        line_search_iters=ls_total,
        wall_ms=(time.perf_counter() - started) * 1e3,
        contacts=active,
        candidates=len(candidates) if candidates is not None else 0,
        contact_stiffness=k,
        residual_norm=err,
        converged=converged,
    )
