# --- Policy Tests ---
"""
Warm-up samplers, λ_- bounds, phase-length formulas and short policy runs
"""

import math
import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np

from config import FIG2_B, FIG2_C, FIG2_MU, PHASE_EXPLORE_EXPLOIT, PHASE_PURE_EXPLORATION
from environment import (
    Environment,
    in_warmup_set,
    make_box,
    make_finite_arms,
    make_instance,
    public_view,
    sample_karmed_instance,
)
from linalg_core import min_eigenvalue, new_gram_state, rank1_update
from policies import (
    GSLUCB,
    PhaseParams,
    gslucb_phase_update,
    lambda_minus,
    make_policy,
    make_sampler,
    regret_bound_known_gap,
    regret_bound_worst_case,
    resolve_t_prime,
    sample_exploration_action,
    t_big_delta,
    t_delta,
    t_zero,
)
from random_streams import RandomStream
from validation_utils import ConfigurationError, NumericDomainError


def _box_public(B, c=1.0, mu=(0.6, 0.8)):
    return public_view(make_instance(list(mu), B, c, make_box([-1.0, -1.0], [1.0, 1.0], grid_resolution=21)))


def _fig2_env():
    inst = make_instance(FIG2_MU, FIG2_B, FIG2_C, make_box([-1.0, -1.0], [1.0, 1.0], grid_resolution=21))
    return Environment(inst)


def test_t_delta_hand_value():
    assert t_delta(math.sqrt(2.0), 0.5, 2, 0.01) == 170
    assert t_delta(1e-6, 1.0, 1, 0.5) == 1


def test_t_delta_rejects_bad_inputs():
    for args in ((0.0, 0.5, 2, 0.01), (1.0, 0.0, 2, 0.01), (1.0, 0.5, 2, 1.0)):
        try:
            t_delta(*args)
        except NumericDomainError:
            continue
        raise AssertionError(f"accepted {args}")


def test_t_big_delta_clamps_to_t_delta():
    params = PhaseParams(lambda_minus=0.5, t_delta=170, horizon=1000)
    assert t_big_delta(params, 2.0, 1.0, 1.0, math.sqrt(2.0), 1.0) == 170
    assert t_big_delta(params, 1e9, 1.0, 1.0, math.sqrt(2.0), 1.0) == 170
    # 8·2·1·1/(0.5·0.01) − 4 = 3196
    assert t_big_delta(params, 0.1, 1.0, 1.0, math.sqrt(2.0), 1.0) == 3196
    for gap in (0.0, -1.0):
        try:
            t_big_delta(params, gap, 1.0, 1.0, math.sqrt(2.0), 1.0)
        except NumericDomainError:
            continue
        raise AssertionError(f"accepted gap {gap}")


def test_t_zero_hand_value():
    params = PhaseParams(lambda_minus=0.5, t_delta=1, horizon=1000)
    assert t_zero(params, 2.0, 1.0, 1.0, 1.0) == 159
    assert t_zero(params._replace(t_delta=170), 2.0, 1.0, 1.0, 1.0) == 170
    assert t_zero(params._replace(horizon=0, t_delta=7), 2.0, 1.0, 1.0, 1.0) == 7


def test_gslucb_phase_update_switches_rule_on_gap_sign():
    params = PhaseParams(lambda_minus=0.5, t_delta=170, horizon=1000, beta_T=2.0, B_norm=1.0, L=1.0, lam=1.0, c=1.0)
    assert gslucb_phase_update(0.0, params) == 170
    assert gslucb_phase_update(0.0, params._replace(t_delta=1)) == 159
    assert gslucb_phase_update(1e9, params) == 170
    shorter = [gslucb_phase_update(gap, params._replace(t_delta=1)) for gap in (0.05, 0.1, 0.5)]
    assert shorter[0] >= shorter[1] >= shorter[2]


def test_resolve_t_prime_rules():
    params = PhaseParams(lambda_minus=0.5, t_delta=170, horizon=1000, known_gap=2.0,
                         beta_T=1.0, B_norm=1.0, L=math.sqrt(2.0), lam=1.0, c=1.0)
    assert resolve_t_prime(1054, params) == 1054
    assert resolve_t_prime("t_delta", params) == 170
    assert resolve_t_prime("t_big_delta", params) == 170
    assert resolve_t_prime("t_zero", params) >= 170
    for rule in (-1, "t_gap", True):
        try:
            resolve_t_prime(rule, params)
        except ConfigurationError:
            continue
        raise AssertionError(f"accepted {rule!r}")
    try:
        resolve_t_prime("t_big_delta", params._replace(known_gap=None))
    except ConfigurationError:
        return
    raise AssertionError("t_big_delta resolved without a gap")


def test_surface_lambda_minus_hand_values():
    identity = _box_public(np.eye(2))
    assert abs(lambda_minus(make_sampler("surface", identity, 1.0), identity, RandomStream(1)) - 0.5) < 1e-15
    doubled = _box_public(2.0 * np.eye(2))
    assert abs(lambda_minus(make_sampler("surface", doubled, 0.5), doubled, RandomStream(1)) - 0.03125) < 1e-15


def test_surface_samples_lie_on_the_ellipsoid():
    public = _box_public(np.array([[1.0, 0.3], [0.3, 2.0]]))
    sampler = make_sampler("surface", public, 0.4)
    rng = RandomStream(3)
    for _ in range(100):
        x = sample_exploration_action(sampler, public, rng)
        assert abs(np.linalg.norm(public.B @ x) - 0.4) < 1e-12


def test_surface_sampler_rejects_bad_epsilon():
    public = _box_public(np.eye(2))
    for eps in (0.0, 1.5):
        try:
            make_sampler("surface", public, eps)
        except ConfigurationError:
            continue
        raise AssertionError(f"accepted epsilon {eps}")


def test_rejection_lambda_minus_close_to_disk_moment():
    public = _box_public(np.eye(2))
    sampler = make_sampler("rejection", public)
    estimate = lambda_minus(sampler, public, RandomStream(5))
    # uniform on the unit disk has E[xxᵀ] = I/4, deflated by 0.9
    assert 0.85 * 0.25 * 0.9 <= estimate <= 0.25
    rng = RandomStream(6)
    for _ in range(50):
        x = sample_exploration_action(sampler, public, rng)
        assert in_warmup_set(public.B, public.c, public.S, x)[0]


def test_sampler_must_match_action_set():
    box_public = _box_public(np.eye(2))
    karmed_public = public_view(sample_karmed_instance(RandomStream(7)))
    for kind, public in (("warmup_arms", box_public), ("rejection", karmed_public), ("bogus", box_public)):
        try:
            make_sampler(kind, public)
        except ConfigurationError:
            continue
        raise AssertionError(f"accepted sampler {kind}")


def test_safe_lucb_round_accounting():
    env = _fig2_env()
    policy = make_policy("safe_lucb", "safe-lucb", env.public, 30, RandomStream(11), t_prime=5)
    records = [policy.step(env) for _ in range(30)]
    assert records[0].phase == PHASE_PURE_EXPLORATION
    assert [r.phase for r in records[:5]] == [PHASE_PURE_EXPLORATION] * 5
    assert all(r.phase == PHASE_EXPLORE_EXPLOIT for r in records[5:])
    for record in records:
        assert abs(record.term1 + record.term2 - record.regret) < 1e-12
        assert 0.0 <= record.alpha_t <= 1.0
    assert policy.realized_t_prime == 5
    assert policy.state.gram.n_updates == 30


def test_policy_rejects_round_past_horizon():
    env = _fig2_env()
    policy = make_policy("no_exploration", "none", env.public, 2, RandomStream(12))
    policy.step(env)
    policy.step(env)
    try:
        policy.step(env)
    except Exception as e:
        assert "horizon" in str(e)
        return
    raise AssertionError("played past the horizon")


def test_oracle_has_zero_regret():
    env = _fig2_env()
    policy = make_policy("oracle", "oracle", env.public, 20, RandomStream(13))
    for _ in range(20):
        record = policy.step(env)
        assert np.allclose(record.action, [-1.0, -1.0])
        assert record.regret == 0.0
        assert record.safe


def test_box_policies_need_ell1_regions():
    env = _fig2_env()
    try:
        make_policy("safe_lucb", "ell2", env.public, 10, RandomStream(14), region="ell2")
    except ConfigurationError:
        return
    raise AssertionError("ell2 region accepted on a box")


def test_gslucb_stops_exploring_for_good():
    inst = sample_karmed_instance(RandomStream(15))
    env = Environment(inst)
    policy = make_policy("gslucb", "gslucb", env.public, 120, RandomStream(16), gslucb_every=10)
    assert isinstance(policy, GSLUCB)
    records = [policy.step(env) for _ in range(120)]
    phases = [r.phase for r in records]
    switch = phases.index(PHASE_EXPLORE_EXPLOIT) if PHASE_EXPLORE_EXPLOIT in phases else len(phases)
    assert all(p == PHASE_PURE_EXPLORATION for p in phases[:switch])
    assert all(p == PHASE_EXPLORE_EXPLOIT for p in phases[switch:])
    assert policy.gap_history[0]["round"] == 1
    assert all(h["round"] == 1 or h["round"] % 10 == 0 for h in policy.gap_history)
    assert all(h["gap_lower_bound"] >= 0.0 for h in policy.gap_history)
    assert policy.exploration_rounds == switch <= policy.t_zero
    gap = env.safety_gap()
    for r in records:
        if r.gap_lower_bound is None:
            continue
        assert r.gap_lower_bound == 0.0 or r.gap_lower_bound > 1e-12
        if r.gap_covered:
            assert r.gap_lower_bound <= gap + 1e-9


def test_gslucb_needs_finite_arms():
    env = _fig2_env()
    try:
        make_policy("gslucb", "gslucb", env.public, 10, RandomStream(17))
    except ConfigurationError:
        return
    raise AssertionError("GSLUCB accepted a box action set")


def test_round_off_gap_counts_as_zero():
    params = PhaseParams(lambda_minus=0.5, t_delta=1, horizon=1000, beta_T=2.0, B_norm=1.0, L=1.0, lam=1.0, c=1.0)
    assert gslucb_phase_update(2.8e-17, params) == gslucb_phase_update(0.0, params) == 159


def test_non_exploring_policies_skip_lambda_minus():
    # only the origin is warm-up safe, so the exploration covariance is singular
    inst = make_instance([0.6, 0.8], np.eye(2), 0.1, make_finite_arms([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    env = Environment(inst)
    for kind in ("oracle", "no_exploration"):
        policy = make_policy(kind, kind, env.public, 5, RandomStream(18))
        assert policy.lambda_minus is None
        assert policy.params.t_delta is None
        for _ in range(5):
            assert policy.step(env).safe
        assert policy.metadata()["lambda_minus"] is None
    fixed = make_policy("safe_lucb", "fixed", env.public, 5, RandomStream(19), t_prime=0)
    assert fixed.lambda_minus is None
    try:
        make_policy("safe_lucb", "rule", env.public, 5, RandomStream(20), t_prime="t_delta")
    except ConfigurationError:
        return
    raise AssertionError("t_delta resolved from a singular exploration covariance")


def _check_round_bounds(records, continuous):
    ofu_covered = 0
    for r in records:
        assert abs(r.term1 + r.term2 - r.regret) < 1e-9
        assert 0.0 <= r.alpha_t <= 1.0
        if not r.ofu:
            assert not r.covered
            continue
        if not r.covered:
            continue
        ofu_covered += 1
        # r.beta is the ℓ1 radius √d·β_t
        assert r.term1 <= 2.0 * r.beta * r.x_norm + 1e-9
        if continuous:
            assert r.term2 <= 1.0 - r.alpha_t + 1e-9
        elif r.alpha_t == 1.0:
            # x* itself is certified, so OFU cannot do worse
            assert r.term2 <= 1e-9
    return ofu_covered


def test_regret_terms_respect_their_bounds_on_covered_rounds():
    env = _fig2_env()
    policy = make_policy("safe_lucb", "safe-lucb", env.public, 600, RandomStream(21), t_prime=100)
    records = [policy.step(env) for _ in range(600)]
    assert all(not r.ofu for r in records[:100])
    assert _check_round_bounds(records, continuous=True) > 0
    assert policy.metadata()["covered_every_ofu_round"] == all(r.covered for r in records if r.ofu)

    karmed = Environment(sample_karmed_instance(RandomStream(22)))
    policy = make_policy("safe_lucb", "safe-lucb", karmed.public, 400, RandomStream(23), t_prime=50)
    records = [policy.step(karmed) for _ in range(400)]
    _check_round_bounds(records, continuous=False)
    assert all(not r.covered and not r.ofu for r in records if r.fallback)


def test_surface_exploration_covariance():
    public = _box_public(np.eye(2), c=0.5)
    sampler = make_sampler("surface", public, 0.5)
    rng = RandomStream(24)
    X = np.array([sample_exploration_action(sampler, public, rng) for _ in range(20_000)])
    # uniform on the circle of radius ε has E[xxᵀ] = (ε²/d)·I
    assert np.allclose(X.T @ X / X.shape[0], 0.125 * np.eye(2), atol=5e-3)


def test_exploration_grows_the_smallest_gram_eigenvalue():
    public = _box_public(np.eye(2), c=0.5)
    sampler = make_sampler("surface", public, 0.5)
    lm = lambda_minus(sampler, public, RandomStream(25))
    rounds = t_delta(public.L, lm, public.dim, 0.01)
    passed = 0
    for trial in range(40):
        rng = RandomStream(26, trial)
        gram = new_gram_state(2, 1.0)
        for _ in range(rounds):
            gram = rank1_update(gram, sample_exploration_action(sampler, public, rng), 0.0)
        if min_eigenvalue(gram.A) >= 1.0 + lm * rounds / 2.0:
            passed += 1
    assert passed >= 38


def test_regret_envelope_hand_values():
    known = regret_bound_known_gap(100, 10, 1.0, 2, 1.0, 0.5, 1.0)
    # 2T′ + 2β√(2d(T−T′)·log(2TL²/(d(λ_-T′+2λ))))
    assert abs(known - (20.0 + 2.0 * math.sqrt(360.0 * math.log(200.0 / 14.0)))) < 1e-12
    worst = regret_bound_worst_case(100, 10, 1.0, 2, 1.0, 0.5, 1.0, 1.0, 0.5)
    assert abs(worst - known - 2.0 * math.sqrt(2.0) * 90.0 / (0.5 * math.sqrt(7.0))) < 1e-9
    assert regret_bound_known_gap(10, 10, 1.0, 2, 1.0, 0.5, 1.0) == 20.0
    # log argument below 1 is clamped
    assert regret_bound_known_gap(1, 0, 1.0, 2, 1e-3, 0.5, 1.0) == 0.0


def test_confidence_region_covers_mu_across_runs():
    env = _fig2_env()
    fully_covered = 0
    for run in range(20):
        policy = make_policy("safe_lucb", "safe-lucb", env.public, 200, RandomStream(27, run), t_prime=50)
        covered = True
        for t in range(1, 201):
            covered = covered and env.covers(policy.current_region(t, kind="ell2"))
            policy.step(env)
        fully_covered += covered
    # δ = 0.01 per run
    assert fully_covered >= 19
