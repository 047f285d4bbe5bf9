# --- LP Solver Tests ---
"""
Two-phase simplex against hand-solved problems and scipy's linprog
"""

import os
import sys

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

import numpy as np
from scipy.optimize import linprog

from lp_solver import INFEASIBLE, OPTIMAL, UNBOUNDED, lp_solve, make_lp
from validation_utils import ConfigurationError


def test_trivial_minimum_at_origin():
    result = lp_solve(make_lp([1.0, 0.0]))
    assert result.status == OPTIMAL
    assert result.value == 0.0
    assert np.allclose(result.x, [0.0, 0.0])


def test_single_upper_bound():
    result = lp_solve(make_lp([-1.0, 0.0], [([1.0, 0.0], 3.0)]))
    assert result.optimal
    assert abs(result.value + 3.0) < 1e-12
    assert abs(result.x[0] - 3.0) < 1e-12


def test_infeasible_problem():
    result = lp_solve(make_lp([1.0, 1.0], [([1.0, 0.0], -1.0)]))
    assert result.status == INFEASIBLE
    assert result.x is None
    crossed = lp_solve(make_lp([1.0], bounds=[(2.0, 1.0)]))
    assert crossed.status == INFEASIBLE


def test_unbounded_problem():
    assert lp_solve(make_lp([-1.0, 0.0], [([0.0, 1.0], 1.0)])).status == UNBOUNDED
    assert lp_solve(make_lp([-1.0])).status == UNBOUNDED


def test_free_and_boxed_variables():
    free = lp_solve(make_lp([1.0], [([-1.0], 2.0)], bounds=[(-np.inf, np.inf)]))
    assert free.optimal and abs(free.value + 2.0) < 1e-12
    boxed = lp_solve(make_lp([1.0, -1.0], bounds=[(-1.0, 2.0), (-3.0, 0.5)]))
    assert boxed.optimal
    assert np.allclose(boxed.x, [-1.0, 0.5])
    upper_only = lp_solve(make_lp([-2.0], bounds=[(-np.inf, 4.0)]))
    assert upper_only.optimal and abs(upper_only.value + 8.0) < 1e-12


def test_degenerate_problem_terminates():
    # classic cycling example for the textbook pivot rule
    objective = [-0.75, 150.0, -0.02, 6.0]
    rows = [
        ([0.25, -60.0, -0.04, 9.0], 0.0),
        ([0.5, -90.0, -0.02, 3.0], 0.0),
        ([0.0, 0.0, 1.0, 0.0], 1.0),
    ]
    result = lp_solve(make_lp(objective, rows))
    assert result.optimal
    assert abs(result.value + 0.05) < 1e-9


def test_phase_one_with_negative_rhs():
    # x1 + x2 ≥ 1 written as −x1 − x2 ≤ −1
    result = lp_solve(make_lp([2.0, 3.0], [([-1.0, -1.0], -1.0), ([1.0, 0.0], 4.0)]))
    assert result.optimal
    assert abs(result.value - 2.0) < 1e-12
    assert np.allclose(result.x, [1.0, 0.0])


def test_random_problems_match_linprog():
    rng = np.random.default_rng(29)
    solved = 0
    for _ in range(200):
        n = 4
        m = int(rng.integers(1, 7))
        c = rng.normal(size=n)
        A = rng.normal(size=(m, n))
        b = rng.normal(loc=0.5, size=m)
        bounds = [(-1.0, 2.0) if rng.uniform() < 0.5 else (0.0, None) for _ in range(n)]
        reference = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
        ours = lp_solve(make_lp(c, list(zip(A, b)),
                                bounds=[(lo, np.inf if hi is None else hi) for lo, hi in bounds]))
        if reference.status != 0:
            # highs may report either infeasible or unbounded for the same problem
            assert not ours.optimal
            continue
        assert ours.optimal, ours.status
        solved += 1
        assert abs(ours.value - reference.fun) < 1e-7
        assert np.all(A @ ours.x <= b + 1e-7)
    assert solved > 0


def test_make_lp_rejects_bad_problems():
    for build in (
        lambda: make_lp(np.ones(65)),
        lambda: make_lp([1.0, np.inf]),
        lambda: make_lp([1.0, 0.0], [([1.0], 1.0)]),
        lambda: make_lp([1.0], bounds=[(0.0, 1.0), (0.0, 1.0)]),
    ):
        try:
            build()
        except ConfigurationError:
            continue
        raise AssertionError("invalid LP accepted")
