# --- Confidence Region Module ---
"""
Confidence radius schedule β_t, ℓ2 and ℓ1 confidence regions around the
ridge estimate, linear maximization over a region, and the α_t diagnostic
that measures how much of x* is certifiably safe under the enlarged region.
"""

import math
from typing import NamedTuple, Optional

import numpy as np

from config import BOUNDARY_SLACK, REGION_KINDS
from linalg_core import GramState, inv_sqrt, sqrt_psd, weighted_norm
from validation_utils import ConfigurationError


class BetaSchedule(NamedTuple):
    R: float
    d: int
    L: float
    lam: float
    S: float
    delta: float


def make_beta_schedule(R: float, d: int, L: float, lam: float, S: float, delta: float) -> BetaSchedule:
    if not 0.0 < delta < 1.0:
        raise ConfigurationError(f"delta must be in (0, 1), got {delta}")
    if lam <= 0:
        raise ConfigurationError(f"lambda must be > 0, got {lam}")
    if R < 0:
        raise ConfigurationError(f"R must be >= 0, got {R}")
    return BetaSchedule(R=float(R), d=int(d), L=float(L), lam=float(lam), S=float(S), delta=float(delta))


def beta(sched: BetaSchedule, t: int) -> float:
    """β_t = R√(d·log((1 + (t−1)L²/λ)/δ)) + √λ·S"""
    if t < 1:
        raise ValueError(f"round index must be >= 1, got {t}")
    log_term = math.log((1.0 + (t - 1) * sched.L ** 2 / sched.lam) / sched.delta)
    return sched.R * math.sqrt(sched.d * log_term) + math.sqrt(sched.lam) * sched.S


class ConfidenceRegion(NamedTuple):
    center: np.ndarray
    gram: np.ndarray
    radius: float
    kind: str = "ell2"
    gram_inv: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def effective_radius(self) -> float:
        """ℓ1 regions are scaled by √d"""
        return self.radius * math.sqrt(self.dim) if self.kind == "ell1" else self.radius

    def inverse(self) -> np.ndarray:
        return self.gram_inv if self.gram_inv is not None else np.linalg.inv(self.gram)


def make_region(center, gram, radius: float, kind: str = "ell2", gram_inv=None) -> ConfidenceRegion:
    if kind not in REGION_KINDS:
        raise ConfigurationError(f"region kind must be one of {REGION_KINDS}, got {kind!r}")
    if not radius > 0:
        raise ConfigurationError(f"region radius must be > 0, got {radius}")
    center = np.asarray(center, dtype=float)
    gram = np.asarray(gram, dtype=float)
    inverse = None if gram_inv is None else np.asarray(gram_inv, dtype=float)
    return ConfidenceRegion(center=center, gram=gram, radius=float(radius), kind=kind, gram_inv=inverse)


def region_from_gram(state: GramState, radius: float, kind: str) -> ConfidenceRegion:
    """Region centered at the ridge estimate with the maintained inverse"""
    return make_region(state.mu_hat, state.A, radius, kind, gram_inv=state.A_inv)


def _within(norm_value: float, bound: float) -> bool:
    return norm_value <= bound + BOUNDARY_SLACK * max(1.0, bound)


def contains(region: ConfidenceRegion, v) -> bool:
    """Closed-set membership (boundary included up to roundoff)"""
    diff = np.asarray(v, dtype=float) - region.center
    if region.kind == "ell2":
        return _within(weighted_norm(diff, region.gram), region.radius)
    l1 = float(np.sum(np.abs(sqrt_psd(region.gram) @ diff)))
    return _within(l1, region.effective_radius)


def l1_vertices(region: ConfidenceRegion) -> np.ndarray:
    """The 2d vertices center ± √d·β·A^{-1/2}e_j, ordered +e_1, −e_1, +e_2, −e_2, ..."""
    if region.kind != "ell1":
        raise ConfigurationError("l1_vertices needs an ell1 region")
    directions = inv_sqrt(region.gram) * region.effective_radius
    vertices = []
    for j in range(region.dim):
        vertices.append(region.center + directions[:, j])
        vertices.append(region.center - directions[:, j])
    return np.asarray(vertices)


def dual_norms(region: ConfidenceRegion, W: np.ndarray) -> np.ndarray:
    """Row-wise ‖w‖_{A⁻¹}"""
    W = np.atleast_2d(W)
    quad = np.einsum("ij,jk,ik->i", W, region.inverse(), W)
    return np.sqrt(np.clip(quad, 0.0, None))


def max_linear_over_region(region: ConfidenceRegion, w) -> float:
    """centerᵀw + r·‖w‖_{A⁻¹}; for ℓ1 regions r = √d·β (conservative 2-norm form)"""
    w = np.asarray(w, dtype=float)
    return float(region.center @ w + region.effective_radius * dual_norms(region, w)[0])


def max_linear_many(region: ConfidenceRegion, W: np.ndarray) -> np.ndarray:
    """max_linear_over_region for every row of W"""
    W = np.atleast_2d(W)
    return W @ region.center + region.effective_radius * dual_norms(region, W)


def alpha_t(mu, B, c: float, x_star, gram, beta_t: float, gram_inv=None) -> float:
    """Largest α ∈ [0,1] with α·(μᵀBx* + 2β_t‖Bx*‖_{A⁻¹}) ≤ c"""
    Bx = np.asarray(B, dtype=float) @ np.asarray(x_star, dtype=float)
    inverse = np.linalg.inv(gram) if gram_inv is None else gram_inv
    enlarged = float(np.asarray(mu, dtype=float) @ Bx) + 2.0 * beta_t * weighted_norm(Bx, inverse)
    if enlarged <= c:
        return 1.0
    return min(c / enlarged, 1.0)
