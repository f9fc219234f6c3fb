from __future__ import annotations

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from framework.contact import (
    contact_energy,
    contact_energy_derivatives,
    contact_force_jacobian,
    initial_contact_stiffness,
    update_contact_stiffness,
)
from framework.geometry import CandidateSet, ContactPair, DistanceKind, EdgePairKey, edge_distance
from models.params import ContactParams, MaterialParams
from tests.helpers import fd_gradient, fd_jacobian, rel_error
from utils.errors import NonPositiveDistance

H = 1.0
DELTA_BAR = 0.5
PARAMS = ContactParams(delta=DELTA_BAR, delta_scaled=True, candidate_margin=1.0)


def _pair() -> ContactPair:
    return ContactPair(key=EdgePairKey(0, 0, 1, 0), dofs=np.arange(12))


def _pair_at(rng: np.random.Generator, target: float) -> np.ndarray:
    x = rng.uniform(-2.0, 2.0, 12)
    res = edge_distance(x)
    n = (res.c_j - res.c_i) / res.distance
    x[6:] += (target - res.distance) * np.tile(n, 2)
    return x



def _unit(rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(3)
    return v / np.linalg.norm(v)


def _away_from(rng: np.random.Generator, axis: np.ndarray) -> np.ndarray:
    """Random unit vector with a positive component along ``axis``."""
    while True:
        w = _unit(rng)
        if np.dot(w, axis) > 0.2:
            return w


def _configuration(rng: np.random.Generator, kind: DistanceKind, dist: float) -> np.ndarray:
    """Edge pair whose closest points realize ``kind`` at distance ``dist``."""
    p = rng.uniform(-1.0, 1.0, 3)
    u = _unit(rng)
    a, b, c = rng.uniform(0.5, 1.5, 3)
    if kind is DistanceKind.POINT_POINT:
        w = _away_from(rng, u)
        q = p + dist * w
        return np.concatenate([p - a * u, p, q, q + c * w])
    n = np.cross(u, _unit(rng))
    n /= np.linalg.norm(n)
    q = p + dist * n
    if kind is DistanceKind.POINT_EDGE:
        w = _away_from(rng, n)
        return np.concatenate([p - a * u, p + b * u, q, q + c * w])
    w = np.cross(n, u)
    w = np.cos(0.7) * w + np.sin(0.7) * u
    return np.concatenate([p - a * u, p + b * u, q - c * w, q + c * w])

class TestEnergyBranches:
    def test_outer_branch(self):
        assert contact_energy(2.0 + DELTA_BAR, DELTA_BAR) == 0.0
        assert contact_energy(3.0, DELTA_BAR) == 0.0

    def test_quadratic_seam(self):
        assert contact_energy(2.0 - DELTA_BAR, DELTA_BAR) == pytest.approx(DELTA_BAR**2)

    def test_contact_threshold(self):
        assert contact_energy(2.0, DELTA_BAR) == pytest.approx((DELTA_BAR * np.log(2.0) / 15.0) ** 2, rel=1e-12)

    @pytest.mark.parametrize("delta_bar", [1e-5, 1e-3, 0.1, 0.5])
    def test_seam_continuity(self, delta_bar):
        K1 = 15.0 / delta_bar
        inner = 2.0 - delta_bar
        middle_value = (np.logaddexp(0.0, K1 * (2.0 - inner)) / K1) ** 2
        assert abs(middle_value - delta_bar**2) / delta_bar**2 < 1e-6
        outer = 2.0 + delta_bar
        middle_outer = (np.logaddexp(0.0, K1 * (2.0 - outer)) / K1) ** 2
        assert middle_outer <= (np.exp(-15.0) / K1) ** 2 * 1.01

    @pytest.mark.parametrize("dist", [1.2, 1.6, 1.9, 2.0, 2.3])
    def test_derivatives_match_differences(self, dist):
        _, d1, d2 = contact_energy_derivatives(dist, DELTA_BAR)
        step = 1e-6
        e_plus, d1_plus, _ = contact_energy_derivatives(dist + step, DELTA_BAR)
        e_minus, d1_minus, _ = contact_energy_derivatives(dist - step, DELTA_BAR)
        assert d1 == pytest.approx((e_plus - e_minus) / (2 * step), rel=1e-6, abs=1e-12)
        assert d2 == pytest.approx((d1_plus - d1_minus) / (2 * step), rel=1e-5, abs=1e-10)

    def test_non_positive_distance(self):
        with pytest.raises(NonPositiveDistance):
            contact_energy_derivatives(0.0, DELTA_BAR)

    @pytest.mark.parametrize("delta_bar", [1e-3, 0.1, 0.5])
    def test_non_increasing_in_distance(self, delta_bar):
        dist = np.linspace(0.5, 2.0 + 2.0 * delta_bar, 4001)
        energy = np.array([contact_energy(d, delta_bar) for d in dist])
        assert np.all(np.diff(energy) <= 0.0)
        assert energy[0] > 0.0 and energy[-1] == 0.0


class TestContactForce:
    def test_out_of_range_is_zero(self):
        x = _pair_at(np.random.default_rng(0), 2.0 * H + 0.6)
        response = contact_force_jacobian(_pair(), x, PARAMS, H, stiffness=10.0)
        assert response.energy == 0.0
        assert not np.any(response.force)
        assert not np.any(response.jacobian)

    def test_scaling_with_radius(self):
        # energy is evaluated on x / h: scaling the scene by h leaves the energy unchanged
        x = _pair_at(np.random.default_rng(1), 1.8)
        h = 2.0e-3
        unit = contact_force_jacobian(_pair(), x, PARAMS, 1.0, stiffness=1.0)
        scaled = contact_force_jacobian(_pair(), x * h, PARAMS, h, stiffness=1.0)
        assert scaled.energy == pytest.approx(unit.energy, rel=1e-12)
        np.testing.assert_allclose(scaled.force, unit.force / h, rtol=1e-10)

    def test_stores_classification_on_pair(self):
        pair = _pair()
        x = _pair_at(np.random.default_rng(2), 1.9)
        contact_force_jacobian(pair, x, PARAMS, H, stiffness=1.0)
        assert pair.result is not None
        assert pair.result.distance == pytest.approx(1.9)

    def test_force_pushes_edges_apart(self):
        x = np.array([-1, 0, 0, 1, 0, 0, 0, -1, 1.5, 0, 1, 1.5], dtype=float)
        response = contact_force_jacobian(_pair(), x, PARAMS, H, stiffness=1.0)
        f = response.force.reshape(4, 3)
        assert f[:2, 2].sum() < 0.0
        assert f[2:, 2].sum() > 0.0
        np.testing.assert_allclose(f.sum(axis=0), 0.0, atol=1e-12)

    @pytest.mark.parametrize("seed", range(100))
    def test_force_and_jacobian_match_differences(self, seed):
        rng = np.random.default_rng(seed)
        x = _pair_at(rng, rng.uniform(1.2, 2.4))
        k = 3.0

        def energy(y):
            return contact_force_jacobian(_pair(), y, PARAMS, H, k).energy

        def force(y):
            return contact_force_jacobian(_pair(), y, PARAMS, H, k).force

        response = contact_force_jacobian(_pair(), x, PARAMS, H, k)
        assert rel_error(response.force, -fd_gradient(energy, x)) < 1e-4
        assert rel_error(response.jacobian, fd_jacobian(force, x)) < 1e-3

    @pytest.mark.parametrize("kind", list(DistanceKind))
    @pytest.mark.parametrize("seed", range(20))
    def test_momentum_balance(self, kind, seed):
        rng = np.random.default_rng(seed)
        x = _configuration(rng, kind, rng.uniform(1.2, 2.4))
        pair = _pair()
        response = contact_force_jacobian(pair, x, PARAMS, H, stiffness=2.0)
        assert pair.result.kind is kind
        f = response.force.reshape(4, 3)
        scale = np.abs(f).max()
        assert scale > 0.0
        np.testing.assert_allclose(f.sum(axis=0), 0.0, atol=1e-10 * scale)
        torque = np.cross(x.reshape(4, 3), f).sum(axis=0)
        np.testing.assert_allclose(torque, 0.0, atol=1e-9 * scale)

    @pytest.mark.parametrize("seed", range(10))
    def test_frame_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x = _pair_at(rng, rng.uniform(1.2, 2.4))
        R = Rotation.random(random_state=seed).as_matrix()
        moved = (x.reshape(4, 3) @ R.T + rng.standard_normal(3)).ravel()
        block = np.kron(np.eye(4), R)
        base = contact_force_jacobian(_pair(), x, PARAMS, H, stiffness=2.0)
        other = contact_force_jacobian(_pair(), moved, PARAMS, H, stiffness=2.0)
        assert other.energy == pytest.approx(base.energy, rel=1e-9, abs=1e-15)
        np.testing.assert_allclose(other.force, block @ base.force, atol=1e-9 * (np.abs(base.force).max() + 1e-12))
        np.testing.assert_allclose(
            other.jacobian, block @ base.jacobian @ block.T, atol=1e-8 * (np.abs(base.jacobian).max() + 1e-12)
        )


class TestStiffness:
    def test_scaled_max(self):
        candidates = CandidateSet(pairs=[ContactPair(key=EdgePairKey(0, 0, 1, 0), dofs=np.arange(12))])
        forces = np.zeros(12)
        forces[0:3] = [1.0, 0.0, 0.0]
        forces[3:6] = [0.0, 2.0, 0.0]
        forces[6:9] = [0.0, 0.0, 3.0]
        assert update_contact_stiffness(candidates, forces, 1e5, previous=7.0) == pytest.approx(3e5)

    def test_empty_keeps_previous(self):
        assert update_contact_stiffness(CandidateSet(), np.ones(12), 1e5, previous=7.0) == 7.0

    def test_random_forces(self):
        rng = np.random.default_rng(4)
        forces = rng.standard_normal(24)
        pairs = [ContactPair(key=EdgePairKey(0, 0, 1, 0), dofs=np.r_[0:12])]
        expected = max(np.linalg.norm(forces[3 * k : 3 * k + 3]) for k in range(4)) * 1e5
        assert update_contact_stiffness(CandidateSet(pairs=pairs), forces, 1e5, 1.0) == pytest.approx(expected)

    def test_initial_stiffness(self):
        contact = ContactParams(delta=1e-5, stiffness_scale=1e5)
        material = MaterialParams()
        expected = 1e5 * material.EA / 0.2 * 1e-5 * material.radius
        assert initial_contact_stiffness(contact, material, 0.2) == pytest.approx(expected)
        assert initial_contact_stiffness(contact.model_copy(update={"initial_stiffness": 4.0}), material, 0.2) == 4.0
