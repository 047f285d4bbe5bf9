# --- Environment Tests ---
"""
Ground-truth operations of the bandit instance: losses, safety oracle,
optimal safe action, safety gap and random arm sets
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np

from config import FIG2_B, FIG2_C, FIG2_MU
from environment import (
    Contextual,
    Environment,
    box_grid,
    draw_arm_set,
    generate_context,
    in_warmup_set,
    is_safe,
    make_box,
    make_finite_arms,
    make_instance,
    optimal_safe_action,
    per_round_optimum,
    safety_gap,
    sample_karmed_instance,
    sample_loss,
)
from random_streams import RandomStream
from validation_utils import ConfigurationError, EnvironmentContractError


def fig2_instance(R=0.1):
    return make_instance(FIG2_MU, FIG2_B, FIG2_C, make_box([-1.0, -1.0], [1.0, 1.0]), R=R)


def test_noiseless_loss_is_exact():
    inst = make_instance([1.0, 0.0], np.eye(2), 1.0, make_box([-1, -1], [1, 1]), R=0.0)
    rng = RandomStream(1)
    assert sample_loss(inst, np.array([0.3, 0.7]), rng) == 0.3
    assert sample_loss(inst, np.zeros(2), rng) == 0.0


def test_loss_noise_is_centered():
    inst = fig2_instance(R=0.1)
    rng = RandomStream(2)
    x = np.array([0.5, -0.25])
    losses = np.array([sample_loss(inst, x, rng) for _ in range(20_000)])
    assert abs(losses.mean() - float(inst.mu @ x)) < 5 * 0.1 / np.sqrt(20_000)


def test_uniform_noise_has_requested_scale():
    inst = make_instance([0.5, 0.5], np.eye(2), 1.0, make_box([-1, -1], [1, 1]), R=0.2, noise="uniform")
    rng = RandomStream(4)
    samples = np.array([sample_loss(inst, np.zeros(2), rng) for _ in range(20_000)])
    assert np.max(np.abs(samples)) <= 0.2 * np.sqrt(3.0)
    assert abs(samples.std() - 0.2) < 0.01


def test_fig2_safety_oracle():
    inst = fig2_instance()
    assert is_safe(inst, np.zeros(2))
    assert is_safe(inst, np.array([-1.0, -1.0]))
    assert abs(float(inst.mu @ inst.B @ np.array([-1.0, -1.0])) + 2.2568) < 1e-12
    assert not is_safe(inst, np.array([1.0, 1.0]))


def test_fig2_optimum_and_gap():
    inst = fig2_instance()
    x_star, value = optimal_safe_action(inst)
    assert np.allclose(x_star, [-1.0, -1.0])
    assert abs(value + 0.944) < 1e-12
    assert abs(safety_gap(inst) - 3.1568) < 1e-12


def test_finite_gap_edge_cases():
    only_origin = make_instance([1.0, 0.0], np.eye(2), 0.7, make_finite_arms([[0.0, 0.0]]), S=1.0)
    assert abs(safety_gap(only_origin) - 0.7) < 1e-15

    # unique optimum exactly on the boundary μᵀBx = c
    inst = make_instance([1.0, 0.0], -np.eye(2), 0.5, make_finite_arms([[-1.0, 0.0], [-0.5, 0.0], [0.5, 0.0]]))
    x_star, _ = optimal_safe_action(inst)
    assert np.allclose(x_star, [-0.5, 0.0])
    assert safety_gap(inst) == 0.0


def test_per_round_optimum_matches_brute_force():
    rng = np.random.default_rng(21)
    for _ in range(50):
        mu = rng.normal(size=4)
        B = rng.uniform(0, 0.5, size=(4, 4))
        arms = rng.uniform(-1, 1, size=(15, 4))
        arms[0] = 0.0  # guarantees a safe arm
        inst = make_instance(mu, B, 0.5, make_finite_arms(arms), S=float(np.linalg.norm(mu)))
        index, value = per_round_optimum(inst, arms)
        safe = [k for k in range(15) if float(mu @ B @ arms[k]) <= 0.5]
        best = min(safe, key=lambda k: (float(mu @ arms[k]), k))
        assert index == best
        assert abs(value - float(arms[best] @ mu)) < 1e-12


def test_per_round_optimum_without_safe_arm():
    inst = make_instance([1.0, 0.0], np.eye(2), 0.1, make_finite_arms([[0.0, 0.0]]), S=1.0)
    try:
        per_round_optimum(inst, np.array([[1.0, 0.0], [2.0, 0.0]]))
    except EnvironmentContractError:
        return
    raise AssertionError("no-safe-arm context accepted")


def test_box_grid_contains_origin_and_is_lexicographic():
    box = make_box([-1.0, -2.0], [1.0, 2.0], grid_resolution=10)
    assert box.grid_resolution == 11
    points = box_grid(box)
    assert points.shape[0] in (121, 144) and points.shape[1] == 2
    assert np.any(np.all(points == 0.0, axis=1))
    assert np.all(np.diff(points[:, 0]) >= 0)


def test_box_must_contain_origin():
    try:
        make_box([0.1, -1.0], [1.0, 1.0])
    except ConfigurationError:
        return
    raise AssertionError("box without the origin accepted")


def test_draw_arm_set_places_warmup_arms_first():
    B = np.array([[0.3, 0.1, 0.0, 0.2], [0.0, 0.4, 0.1, 0.0], [0.2, 0.0, 0.3, 0.1], [0.1, 0.1, 0.0, 0.5]])
    arms = draw_arm_set(B, 0.2, 1.0, 15, 5, RandomStream(8))
    inside = in_warmup_set(B, 0.2, 1.0, arms)
    assert arms.shape == (15, 4)
    assert inside.sum() == 5
    assert np.all(inside[:5])
    assert np.all(np.linalg.norm(arms, axis=1) <= 1.0 + 1e-12)
    single = draw_arm_set(B, 0.2, 1.0, 1, 1, RandomStream(9))
    assert in_warmup_set(B, 0.2, 1.0, single)[0]


def test_draw_arm_set_plain_remainder_may_land_in_warmup_set():
    # D^w = {‖0.1x‖ ≤ 1} swallows the whole unit ball
    B = 0.1 * np.eye(3)
    try:
        draw_arm_set(B, 1.0, 1.0, 6, 2, RandomStream(10))
    except EnvironmentContractError:
        pass
    else:
        raise AssertionError("conditioned draw found arms outside a covering warm-up set")
    arms = draw_arm_set(B, 1.0, 1.0, 6, 2, RandomStream(10), others_outside=False)
    assert arms.shape == (6, 3)
    assert np.all(in_warmup_set(B, 1.0, 1.0, arms))
    assert np.all(np.linalg.norm(arms, axis=1) <= 1.0 + 1e-12)


def test_contexts_are_deterministic_per_round():
    inst = make_instance([0.6, 0.8], np.eye(2) * 0.5, 0.3, Contextual(K=6, n_warmup=2, seed=5, dim=2))
    rng = RandomStream(5)
    first = generate_context(inst, 17, rng)
    again = generate_context(inst, 17, rng)
    other = generate_context(inst, 18, rng)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)
    env = Environment(inst)
    truth = env.truth_at(3)
    index, value = per_round_optimum(inst, env.arms_at(3))
    assert np.array_equal(truth.x_star, env.arms_at(3)[index])


def test_sampled_karmed_instance_follows_recipe():
    for seed in range(5):
        inst = sample_karmed_instance(RandomStream(100 + seed))
        assert abs(np.linalg.norm(inst.mu) - 1.0) < 1e-12
        assert np.all(inst.B >= 0.0) and np.all(inst.B <= 0.5)
        assert 0.0 < inst.c <= 1.0
        assert inst.action_set.vectors.shape == (15, 4)
        warm = in_warmup_set(inst.B, inst.c, inst.S, inst.action_set.vectors)
        assert np.all(warm[:5])
        assert np.all(np.linalg.norm(inst.action_set.vectors, axis=1) <= 1.0 + 1e-12)
        x_star, _ = optimal_safe_action(inst)
        assert safety_gap(inst) > 0.0
        assert is_safe(inst, x_star)


def test_make_instance_rejects_mu_above_bound():
    try:
        make_instance([3.0, 4.0], np.eye(2), 1.0, make_box([-1, -1], [1, 1]), S=1.0)
    except ConfigurationError:
        return
    raise AssertionError("‖μ‖ > S accepted")
