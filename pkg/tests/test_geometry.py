from __future__ import annotations

import numpy as np
import pytest

from framework.geometry import (
    DistanceKind,
    EdgePairKey,
    build_candidate_set,
    classify_and_beta,
    distance_ee,
    distance_gradient_hessian,
    distance_pe,
    distance_pp,
    edge_distance,
    minimum_gap,
    refresh_contact_set,
)
from framework.rod import make_rod
from tests.helpers import fd_gradient, fd_jacobian, rel_error, straight_rod
from utils.errors import DegenerateEdge, ParallelEdges

H = 1.0e-3


def _pair(*points) -> np.ndarray:
    return np.concatenate([np.asarray(p, dtype=float) for p in points])


def _grid_minimum(x_ij: np.ndarray, resolution: int) -> np.ndarray:
    """Dense (beta_i, beta_j) sampling of |c_i - c_j| for a batch of pairs (B, 12)."""
    x = x_ij.reshape(-1, 4, 3)
    b = np.linspace(0.0, 1.0, resolution)
    ci = x[:, None, 0, :] + b[None, :, None] * (x[:, 1, :] - x[:, 0, :])[:, None, :]
    cj = x[:, None, 2, :] + b[None, :, None] * (x[:, 3, :] - x[:, 2, :])[:, None, :]
    d = np.linalg.norm(ci[:, :, None, :] - cj[:, None, :, :], axis=-1)
    return d.reshape(len(x), -1).min(axis=1)


def _scaled_pair(rng: np.random.Generator, target: float) -> np.ndarray:
    """Random skew pair translated along the closest-point direction to distance ``target``."""
    x = rng.uniform(-1.0, 1.0, 12)
    res = edge_distance(x)
    n = (res.c_j - res.c_i) / res.distance
    x[6:] += (target - res.distance) * np.tile(n, 2)
    return x


class TestEdgePairKey:
    def test_canonical_order(self):
        assert EdgePairKey.canonical(1, 4, 0, 7) == EdgePairKey(0, 7, 1, 4)

    @pytest.mark.parametrize(
        "key,valid",
        [
            (EdgePairKey(0, 3, 0, 4), False),
            (EdgePairKey(0, 3, 0, 5), True),
            (EdgePairKey(0, 3, 1, 3), True),
            (EdgePairKey(0, 3, 0, 3), False),
        ],
    )
    def test_adjacent_edges_excluded(self, key, valid):
        assert key.is_valid() is valid


class TestClassification:
    def test_crossing_skew(self):
        kind, bi, bj = classify_and_beta(_pair([-1, 0, 0], [1, 0, 0], [0, -1, 1], [0, 1, 1]))
        assert kind is DistanceKind.EDGE_EDGE
        assert 0.0 < bi < 1.0 and 0.0 < bj < 1.0

    def test_pointing_away(self):
        kind, bi, bj = classify_and_beta(_pair([0, 0, 0], [-1, 0, 0], [1, 0, 0], [2, 0.5, 0]))
        assert kind is DistanceKind.POINT_POINT
        assert (bi, bj) == (0.0, 0.0)

    def test_tee(self):
        kind, bi, bj = classify_and_beta(_pair([-1, 0, 0], [1, 0, 0], [0.2, 0, 1], [0.2, 0, 2]))
        assert kind is DistanceKind.POINT_EDGE
        assert bj == 0.0
        assert bi == pytest.approx(0.6)

    def test_parallel_overlap_midpoint(self):
        res = edge_distance(_pair([0, 0, 0], [2, 0, 0], [1, 1, 0], [3, 1, 0]))
        assert res.parallel
        assert res.distance == pytest.approx(1.0)
        assert res.beta_i == pytest.approx(0.75)

    def test_degenerate_edge(self):
        with pytest.raises(DegenerateEdge):
            classify_and_beta(_pair([0, 0, 0], [0, 0, 0], [1, 0, 0], [2, 0, 0]))


class TestDistanceFormulas:
    def test_point_point(self):
        assert distance_pp([0, 0, 0], [3, 4, 0]) == 5.0
        assert distance_pp([1, 2, 3], [1, 2, 3]) == 0.0

    def test_point_edge(self):
        assert distance_pe([-1, 0, 0], [1, 0, 0], [0, 1, 0]) == pytest.approx(1.0)
        assert distance_pe([-1, 0, 0], [1, 0, 0], [3, 0, 0]) == pytest.approx(0.0)

    def test_edge_edge(self):
        assert distance_ee([0, 0, 0], [1, 0, 0], [0.5, -1, 0.7], [0.5, 1, 0.7]) == pytest.approx(0.7)
        assert distance_ee([-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0]) == pytest.approx(0.0)

    def test_edge_edge_parallel_raises(self):
        with pytest.raises(ParallelEdges):
            distance_ee([0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0])


class TestGridOracle:
    def test_random_pairs_match_dense_sampling(self):
        rng = np.random.default_rng(0)
        resolution = 41
        for _ in range(20):
            batch = rng.uniform(-1.0, 1.0, (500, 12))
            grid = _grid_minimum(batch, resolution)
            exact = np.array([edge_distance(x).distance for x in batch])
            x = batch.reshape(-1, 4, 3)
            bound = 0.5 / (resolution - 1) * (
                np.linalg.norm(x[:, 1] - x[:, 0], axis=1) + np.linalg.norm(x[:, 3] - x[:, 2], axis=1)
            )
            assert np.all(exact <= grid + 1e-12)
            assert np.all(grid - exact <= bound + 1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_skew_pair_fine_grid(self, seed):
        x = np.random.default_rng(100 + seed).uniform(-1.0, 1.0, (1, 12))
        grid = _grid_minimum(x, 1001)[0]
        assert edge_distance(x[0]).distance == pytest.approx(grid, abs=5e-3)


class TestDistanceDerivatives:
    @pytest.mark.parametrize("seed", range(100))
    def test_gradient_and_hessian(self, seed):
        rng = np.random.default_rng(seed)
        x = _scaled_pair(rng, rng.uniform(0.5, 1.5))
        delta, grad, hess = distance_gradient_hessian(x)
        assert delta == pytest.approx(edge_distance(x).distance)
        assert rel_error(grad, fd_gradient(lambda y: edge_distance(y).distance, x)) < 1e-6
        fd_hess = fd_jacobian(lambda y: distance_gradient_hessian(y)[1], x)
        assert rel_error(hess, fd_hess) < 1e-4


class TestCandidateSet:
    def test_far_apart(self):
        rods = [straight_rod([0, 0, 0], [0.1, 0, 0], 11), straight_rod([0, 0.1, 0], [0.1, 0.1, 0], 11)]
        assert len(build_candidate_set(rods, 0.2 * H, H)) == 0

    def test_touching_crossing(self):
        rods = [
            straight_rod([-0.05, 0, 0], [0.05, 0, 0], 11),
            straight_rod([0.001, -0.05, 2 * H], [0.001, 0.05, 2 * H], 11),
        ]
        candidates = build_candidate_set(rods, 0.2 * H, H)
        assert EdgePairKey(0, 5, 1, 5) in candidates.keys()

    def test_matches_brute_force(self):
        rng = np.random.default_rng(9)
        rods = []
        for _ in range(3):
            start = rng.uniform(-0.005, 0.005, 3)
            steps = rng.normal(0.0, 0.002, (8, 3))
            rods.append(make_rod(np.vstack([start, start + np.cumsum(steps, axis=0)])))
        reach = 2 * H + 0.2 * H
        candidates = build_candidate_set(rods, 0.2 * H, H)
        expected = set()
        for a, ra in enumerate(rods):
            for b, rb in enumerate(rods):
                for i in range(ra.num_edges):
                    for j in range(rb.num_edges):
                        key = EdgePairKey.canonical(a, i, b, j)
                        if (a, i) >= (b, j) or not key.is_valid():
                            continue
                        x = _pair(ra.nodes[i], ra.nodes[i + 1], rb.nodes[j], rb.nodes[j + 1])
                        if edge_distance(x).distance < reach:
                            expected.add(key)
        assert set(candidates.keys()) == expected

    def test_refresh_filters_by_tolerance(self):
        rods = [
            straight_rod([-0.05, 0, 0], [0.05, 0, 0], 11),
            straight_rod([0.001, -0.05, 2.1 * H], [0.001, 0.05, 2.1 * H], 11),
        ]
        candidates = build_candidate_set(rods, 0.2 * H, H)
        q = np.concatenate([r.q for r in rods])
        assert len(candidates) > 0
        assert len(refresh_contact_set(candidates, q, 0.05 * H, H)) == 0
        assert len(refresh_contact_set(candidates, q, 0.15 * H, H)) > 0


class TestMinimumGap:
    def test_crossing_gap(self):
        rods = [
            straight_rod([-0.05, 0, 0], [0.05, 0, 0], 11),
            straight_rod([0.001, -0.05, 2.5 * H], [0.001, 0.05, 2.5 * H], 11),
        ]
        assert minimum_gap(rods, H, 1.0 * H) == pytest.approx(0.5 * H)

    def test_out_of_reach(self):
        rods = [straight_rod([0, 0, 0], [0.1, 0, 0], 5), straight_rod([0, 0.1, 0], [0.1, 0.1, 0], 5)]
        assert minimum_gap(rods, H, H) == np.inf
