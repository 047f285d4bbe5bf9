# --- Confidence Region Tests ---
"""
β_t schedule, region membership, ℓ1 vertices, linear maximization and α_t
"""

import math
import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np

from confidence import (
    alpha_t,
    beta,
    contains,
    dual_norms,
    l1_vertices,
    make_beta_schedule,
    make_region,
    max_linear_many,
    max_linear_over_region,
    region_from_gram,
)
from linalg_core import new_gram_state, rank1_update
from validation_utils import ConfigurationError


def test_beta_hand_value():
    sched = make_beta_schedule(R=0.1, d=2, L=math.sqrt(2.0), lam=1.0, S=1.0, delta=0.01)
    expected = 0.1 * math.sqrt(2.0 * math.log(100.0)) + 1.0
    assert abs(beta(sched, 1) - expected) < 1e-12
    assert abs(beta(sched, 1) - 1.303485) < 1e-6


def test_beta_without_noise_is_constant():
    sched = make_beta_schedule(R=0.0, d=3, L=2.0, lam=4.0, S=0.5, delta=0.05)
    for t in (1, 10, 10_000):
        assert beta(sched, t) == 1.0


def test_beta_is_non_decreasing():
    sched = make_beta_schedule(R=0.1, d=4, L=1.0, lam=1.0, S=1.0, delta=0.01)
    values = [beta(sched, t) for t in range(1, 2000)]
    assert all(b <= a for b, a in zip(values, values[1:]))


def test_beta_schedule_rejects_bad_inputs():
    for kwargs in ({"delta": 0.0}, {"delta": 1.0}, {"lam": 0.0}, {"R": -0.1}):
        params = {"R": 0.1, "d": 2, "L": 1.0, "lam": 1.0, "S": 1.0, "delta": 0.01}
        params.update(kwargs)
        try:
            make_beta_schedule(**params)
        except ConfigurationError:
            continue
        raise AssertionError(f"accepted {kwargs}")


def test_membership_includes_boundary():
    region = make_region([0.0, 0.0], np.eye(2), 1.0, "ell2")
    assert contains(region, [1.0, 0.0])
    assert contains(region, [0.6, 0.8])
    assert not contains(region, [1.0, 0.1])
    region1 = make_region([0.0, 0.0], np.eye(2), 1.0, "ell1")
    assert contains(region1, [math.sqrt(2.0), 0.0])
    assert contains(region1, [0.7, 0.7])
    assert not contains(region1, [1.0, 1.0])


def test_l1_vertices_identity_gram():
    region = make_region([0.0, 0.0], np.eye(2), 1.0, "ell1")
    r = math.sqrt(2.0)
    expected = np.array([[r, 0.0], [-r, 0.0], [0.0, r], [0.0, -r]])
    assert np.allclose(l1_vertices(region), expected, atol=1e-14)


def test_l1_vertices_scaled_gram():
    region = make_region([0.0, 0.0], np.diag([4.0, 1.0]), 1.0, "ell1")
    r = math.sqrt(2.0)
    expected = np.array([[r / 2, 0.0], [-r / 2, 0.0], [0.0, r], [0.0, -r]])
    assert np.allclose(l1_vertices(region), expected, atol=1e-14)
    for vertex in l1_vertices(region):
        assert contains(region, vertex)


def test_l1_vertices_need_ell1_region():
    try:
        l1_vertices(make_region([0.0], np.eye(1), 1.0, "ell2"))
    except ConfigurationError:
        return
    raise AssertionError("ell2 region produced vertices")


def test_ell2_region_lies_inside_ell1_region():
    rng = np.random.default_rng(13)
    state = new_gram_state(3, 1.0)
    for _ in range(50):
        state = rank1_update(state, rng.uniform(-1, 1, size=3), float(rng.normal()))
    ell2 = region_from_gram(state, 0.8, "ell2")
    ell1 = region_from_gram(state, 0.8, "ell1")
    root = np.linalg.cholesky(state.A_inv)
    for _ in range(500):
        u = rng.normal(size=3)
        u *= rng.uniform() ** (1 / 3) / np.linalg.norm(u)
        point = state.mu_hat + 0.8 * root @ u
        assert contains(ell2, point)
        assert contains(ell1, point)


def test_max_linear_over_ell2_ball():
    region = make_region([0.0, 0.0], np.eye(2), 1.0, "ell2")
    assert abs(max_linear_over_region(region, [3.0, 4.0]) - 5.0) < 1e-12
    shifted = make_region([1.0, -1.0], np.diag([4.0, 1.0]), 2.0, "ell2")
    w = np.array([2.0, 1.0])
    expected = float(shifted.center @ w) + 2.0 * math.sqrt(w @ np.linalg.inv(shifted.gram) @ w)
    assert abs(max_linear_over_region(shifted, w) - expected) < 1e-12


def test_max_linear_dominates_l1_vertices():
    rng = np.random.default_rng(17)
    region = make_region(rng.normal(size=3), np.diag([1.0, 3.0, 9.0]), 0.7, "ell1")
    W = rng.normal(size=(20, 3))
    bounds = max_linear_many(region, W)
    vertex_max = np.max(W @ l1_vertices(region).T, axis=1)
    assert np.all(bounds >= vertex_max - 1e-12)
    single = np.array([max_linear_over_region(region, w) for w in W])
    assert np.allclose(single, bounds, atol=1e-14)


def test_dual_norms_match_direct_formula():
    gram = np.array([[2.0, 0.5], [0.5, 1.0]])
    region = make_region([0.0, 0.0], gram, 1.0)
    W = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, -2.0]])
    direct = [math.sqrt(w @ np.linalg.inv(gram) @ w) for w in W]
    assert np.allclose(dual_norms(region, W), direct, atol=1e-14)


def test_alpha_hand_values():
    mu, B, x_star = np.array([1.0, 0.0]), np.eye(2), np.array([0.5, 0.0])
    # μᵀBx* = c/2 and 2β‖Bx*‖_{A⁻¹} = c
    assert abs(alpha_t(mu, B, 1.0, x_star, np.eye(2), 1.0) - 2.0 / 3.0) < 1e-12
    assert alpha_t(mu, B, 1.0, x_star, np.eye(2), 0.0) == 1.0
    assert alpha_t(mu, B, 1.0, np.zeros(2), np.eye(2), 5.0) == 1.0


def test_make_region_rejects_bad_inputs():
    for kind, radius in (("ell3", 1.0), ("ell2", 0.0)):
        try:
            make_region([0.0], np.eye(1), radius, kind)
        except ConfigurationError:
            continue
        raise AssertionError(f"accepted kind={kind} radius={radius}")
