# --- Safe Optimization Module ---
"""
Estimated safe sets and the optimistic (OFU) action choice.

Finite arms are enumerated exactly; a box polytope is searched over its grid
against the 2d vertices of the ℓ1 region. The K-armed safety-gap lower bound
solves its sub-problems as small LPs in whitened coordinates
u = A^{1/2}(v − center), where the ℓ1 region is the ball ‖u‖₁ ≤ √d·β.
"""

from typing import List, NamedTuple, Optional

import numpy as np

from config import GAP_ZERO_TOLERANCE
from confidence import ConfidenceRegion, l1_vertices, max_linear_many
from environment import ActionSet, PublicView, box_grid, in_warmup_set
from linalg_core import inv_sqrt
from logger_utils import logger
from lp_solver import lp_solve, make_lp
from validation_utils import ConfigurationError, EnvironmentContractError, NoSafeActionError


class OfuResult(NamedTuple):
    action: np.ndarray    # x_t
    optimist: np.ndarray  # μ̃_t
    value: float          # μ̃_tᵀx_t
    safe_count: int
    index: int = -1       # arm row (finite) or grid row (box)


# ---------------------------------------------------------------------------
# Safe sets
# ---------------------------------------------------------------------------

def _in_action_set(x: np.ndarray, action_set: ActionSet) -> bool:
    if action_set.kind == "finite":
        return bool(np.any(np.all(np.isclose(action_set.vectors, x, rtol=0.0, atol=1e-12), axis=1)))
    if action_set.kind == "box":
        return bool(np.all(x >= action_set.lower) and np.all(x <= action_set.upper))
    return float(np.linalg.norm(x)) <= action_set.radius


def warmup_member(B, c: float, S: float, x, action_set: ActionSet) -> bool:
    """x ∈ D₀ and ‖Bx‖₂ ≤ c/S"""
    if not (c > 0 and S > 0):
        raise ConfigurationError("warm-up set needs c > 0 and S > 0")
    x = np.asarray(x, dtype=float)
    return _in_action_set(x, action_set) and bool(in_warmup_set(np.asarray(B, dtype=float), c, S, x)[0])


def safe_mask(region: ConfidenceRegion, B, c: float, points: np.ndarray) -> np.ndarray:
    """Row-wise test: max over the region of vᵀBx ≤ c"""
    points = np.atleast_2d(points)
    return max_linear_many(region, points @ np.asarray(B, dtype=float).T) <= c


def safe_members_finite(region: ConfidenceRegion, B, c: float, arms) -> np.ndarray:
    """Indices of arms certified safe for every parameter in the region (may be empty)"""
    return np.flatnonzero(safe_mask(region, B, c, np.asarray(arms, dtype=float)))


# ---------------------------------------------------------------------------
# Optimistic choice
# ---------------------------------------------------------------------------

def ofu_finite(region: ConfidenceRegion, B, c: float, arms) -> OfuResult:
    """Jointly minimize vᵀy over certified-safe arms y and region members v"""
    arms = np.atleast_2d(np.asarray(arms, dtype=float))
    safe = safe_members_finite(region, B, c, arms)
    if safe.size == 0:
        raise NoSafeActionError("no arm is certified safe under the current region")
    candidates = arms[safe]

    if region.kind == "ell1":
        vertices = l1_vertices(region)
        values = candidates @ vertices.T  # safe arms x 2d
        flat = int(np.argmin(values))     # row-major: lowest arm, then lowest vertex
        row, col = divmod(flat, vertices.shape[0])
        return OfuResult(action=candidates[row].copy(), optimist=vertices[col].copy(),
                         value=float(values[row, col]), safe_count=int(safe.size), index=int(safe[row]))

    inverse = region.inverse()
    norms = np.sqrt(np.clip(np.einsum("ij,jk,ik->i", candidates, inverse, candidates), 0.0, None))
    values = candidates @ region.center - region.radius * norms
    row = int(np.argmin(values))
    y = candidates[row]
    if norms[row] > 0.0:
        optimist = region.center - region.radius * (inverse @ y) / norms[row]
    else:
        optimist = region.center.copy()
    return OfuResult(action=y.copy(), optimist=optimist, value=float(values[row]),
                     safe_count=int(safe.size), index=int(safe[row]))


def ofu_l1_polytope(region: ConfidenceRegion, B, c: float, box) -> OfuResult:
    """Grid version of the per-vertex safe minimization over a box polytope"""
    if region.kind != "ell1":
        raise ConfigurationError("ofu_l1_polytope needs an ell1 region")
    points = box_grid(box)
    safe = np.flatnonzero(safe_mask(region, B, c, points))
    if safe.size == 0:
        raise NoSafeActionError("no grid point is certified safe under the current region")
    candidates = points[safe]
    vertices = l1_vertices(region)
    values = candidates @ vertices.T
    flat = int(np.argmin(values))
    row, col = divmod(flat, vertices.shape[0])
    return OfuResult(action=candidates[row].copy(), optimist=vertices[col].copy(),
                     value=float(values[row, col]), safe_count=int(safe.size), index=int(safe[row]))


def warmup_fallback_action(public: PublicView, arms: Optional[np.ndarray] = None,
                           first_warmup: Optional[np.ndarray] = None) -> np.ndarray:
    """Designated safe action when nothing is certified: the zero action if offered, else a warm-up action"""
    if public.action_set.kind == "box" or arms is None:
        return np.zeros(public.dim)
    arms = np.atleast_2d(arms)
    zero_rows = np.flatnonzero(np.all(arms == 0.0, axis=1))
    if zero_rows.size:
        return arms[zero_rows[0]].copy()
    if first_warmup is not None and public.action_set.kind == "finite":
        return np.asarray(first_warmup, dtype=float).copy()
    warm = np.flatnonzero(in_warmup_set(public.B, public.c, public.S, arms))
    if warm.size:
        return arms[warm[0]].copy()
    raise EnvironmentContractError("no warm-up-safe action available for the fallback")


# ---------------------------------------------------------------------------
# Safety-gap lower bound (K arms, ℓ1 region)
# ---------------------------------------------------------------------------

def _ball_lp(objective_u: np.ndarray, rho: float, cuts: List[tuple]):
    """min objective·u over ‖u‖₁ ≤ rho and cuts g·u ≤ h, with u = u⁺ − u⁻"""
    d = objective_u.size
    rows = [(np.ones(2 * d), rho)]
    rows.extend((np.concatenate([g, -g]), h) for g, h in cuts)
    problem = make_lp(np.concatenate([objective_u, -objective_u]), rows)
    return lp_solve(problem)


def gap_lower_bound_karmed(region: ConfidenceRegion, B, c: float, arms) -> float:
    """Lower confidence bound on the safety gap Δ over a finite arm set; 0 when nothing is certified"""
    if region.kind != "ell1":
        raise ConfigurationError("gap_lower_bound_karmed needs an ell1 region")
    arms = np.atleast_2d(np.asarray(arms, dtype=float))
    B = np.asarray(B, dtype=float)
    rho = region.effective_radius
    H = inv_sqrt(region.gram)

    W = arms @ B.T                  # rows B·y
    G = W @ H                       # rows A^{-1/2}B·y (H symmetric)
    base = W @ region.center        # centerᵀB·y
    Hy = arms @ H                   # rows A^{-1/2}y
    loss_center = arms @ region.center
    worst = base + rho * np.max(np.abs(G), axis=1)  # max of vᵀBy over the whole region
    best = base - rho * np.max(np.abs(G), axis=1)   # min of vᵀBy over the whole region

    gaps = []
    for i in range(arms.shape[0]):
        if best[i] > c:
            continue  # C^i empty
        cut = (G[i], c - base[i])

        members = []
        for j in range(arms.shape[0]):
            if j == i or worst[j] <= c:
                members.append(j)
                continue
            if best[j] > c:
                continue
            result = _ball_lp(-G[j], rho, [cut])
            if result.optimal and base[j] - result.value <= c:
                members.append(j)

        # vᵀ(y_i − y_j) ≤ 0 for every certified j
        cuts = [cut]
        for j in members:
            if j != i:
                cuts.append((Hy[i] - Hy[j], loss_center[j] - loss_center[i]))
        result = _ball_lp(-G[i], rho, cuts)
        if not result.optimal:
            continue
        gaps.append(c - base[i] + result.value)

    if not gaps:
        logger("📉 gap lower bound: every arm skipped, returning 0", level="DEBUG")
        return 0.0
    gap = float(min(gaps))
    return gap if gap > GAP_ZERO_TOLERANCE else 0.0
