# --- Environment Module ---
"""
The hidden ground truth of a safe linear bandit: parameter μ, linear safety
constraint μᵀBx ≤ c, sub-Gaussian loss noise and the action sets (fixed
finite arms, a box polytope explored on a grid, or per-round contexts).

Policies only ever see a PublicView plus loss samples; everything that
touches μ (optimal actions, safety gap, per-round diagnostics) lives here.
"""

from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from config import (
    ASSUMPTION_LOSS_BOUND,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_NOISE_SCALE,
    KARMED_ARMS,
    KARMED_B_RANGE,
    KARMED_C_RANGE,
    KARMED_DIM,
    KARMED_WARMUP_ARMS,
    MAX_CONTEXT_RETRIES,
    NOISE_KINDS,
)
from confidence import ConfidenceRegion, alpha_t, contains
from logger_utils import logger
from random_streams import RandomStream
from validation_utils import ConfigurationError, EnvironmentContractError


# ---------------------------------------------------------------------------
# Action sets
# ---------------------------------------------------------------------------

class FiniteArms(NamedTuple):
    vectors: np.ndarray  # K x d

    kind: str = "finite"


class BoxPolytope(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray
    grid_resolution: int = DEFAULT_GRID_RESOLUTION

    kind: str = "box"


class Contextual(NamedTuple):
    """K fresh arms per round: n_warmup inside D^w, the rest in the ball of given radius outside D^w"""
    K: int
    n_warmup: int
    seed: int
    radius: float = 1.0
    dim: int = KARMED_DIM

    kind: str = "contextual"


ActionSet = Union[FiniteArms, BoxPolytope, Contextual]


def make_box(lower, upper, grid_resolution: int = DEFAULT_GRID_RESOLUTION) -> BoxPolytope:
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != upper.shape or lower.ndim != 1:
        raise ConfigurationError("box bounds must be vectors of equal length")
    if not np.all(lower < 0.0) or not np.all(upper > 0.0):
        raise ConfigurationError("box polytope must contain the origin strictly inside")
    resolution = int(grid_resolution)
    if resolution < 3:
        raise ConfigurationError(f"grid_resolution must be >= 3, got {resolution}")
    if resolution % 2 == 0:
        resolution += 1
    return BoxPolytope(lower=lower, upper=upper, grid_resolution=resolution)


def make_finite_arms(vectors) -> FiniteArms:
    arms = np.atleast_2d(np.asarray(vectors, dtype=float))
    if arms.shape[0] == 0:
        raise ConfigurationError("finite action set must contain at least one arm")
    return FiniteArms(vectors=arms)


def axis_grid(low: float, high: float, resolution: int) -> np.ndarray:
    """Uniform axis grid that always contains 0"""
    axis = np.linspace(low, high, resolution)
    if not np.any(axis == 0.0):
        axis = np.sort(np.append(axis, 0.0))
    return axis


@lru_cache(maxsize=8)
def _cached_grid(lower: Tuple[float, ...], upper: Tuple[float, ...], resolution: int) -> np.ndarray:
    axes = [axis_grid(lo, hi, resolution) for lo, hi in zip(lower, upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    points = np.stack([m.ravel() for m in mesh], axis=1)
    points.setflags(write=False)
    return points


def box_grid(box: BoxPolytope, resolution: Optional[int] = None) -> np.ndarray:
    """All grid points of the box in lexicographic order (first axis slowest)"""
    res = int(resolution or box.grid_resolution)
    return _cached_grid(tuple(map(float, box.lower)), tuple(map(float, box.upper)), res)


def box_step(box: BoxPolytope) -> float:
    """Largest axis spacing of the box grid"""
    return float(np.max((box.upper - box.lower) / (box.grid_resolution - 1)))


def box_corners(box: BoxPolytope) -> np.ndarray:
    d = box.lower.size
    corners = []
    for mask in range(2 ** d):
        corners.append([box.upper[j] if (mask >> j) & 1 else box.lower[j] for j in range(d)])
    return np.asarray(corners)


# ---------------------------------------------------------------------------
# Instance
# ---------------------------------------------------------------------------

class ProblemInstance(NamedTuple):
    mu: np.ndarray
    B: np.ndarray
    c: float
    R: float
    S: float
    L: float
    action_set: ActionSet
    noise: str = "gaussian"

    @property
    def dim(self) -> int:
        return self.mu.size


class PublicView(NamedTuple):
    """Everything a policy may know about the instance"""
    B: np.ndarray
    c: float
    S: float
    L: float
    R: float
    dim: int
    action_set: ActionSet


def public_view(inst: ProblemInstance) -> PublicView:
    return PublicView(B=inst.B, c=inst.c, S=inst.S, L=inst.L, R=inst.R, dim=inst.dim, action_set=inst.action_set)


def _max_action_norm(action_set: ActionSet) -> float:
    if action_set.kind == "finite":
        return float(np.max(np.linalg.norm(action_set.vectors, axis=1)))
    if action_set.kind == "box":
        return float(np.max(np.linalg.norm(box_corners(action_set), axis=1)))
    return float(action_set.radius)


def max_abs_loss(mu: np.ndarray, action_set: ActionSet) -> float:
    """max |μᵀx| over representable actions"""
    if action_set.kind == "finite":
        return float(np.max(np.abs(action_set.vectors @ mu)))
    if action_set.kind == "box":
        return float(np.max(np.abs(box_corners(action_set) @ mu)))
    return float(np.linalg.norm(mu) * action_set.radius)


def make_instance(mu, B, c: float, action_set: ActionSet, R: float = DEFAULT_NOISE_SCALE,
                  S: Optional[float] = None, L: Optional[float] = None,
                  noise: str = "gaussian") -> ProblemInstance:
    """Validate and assemble an instance; S defaults to ‖μ‖₂ and L to the largest action norm"""
    mu = np.asarray(mu, dtype=float)
    B = np.asarray(B, dtype=float)
    d = mu.size
    if B.shape != (d, d):
        raise ConfigurationError(f"B must be {d}x{d}, got {B.shape}")
    if not c > 0:
        raise ConfigurationError(f"constraint level c must be > 0, got {c}")
    if R < 0:
        raise ConfigurationError(f"noise scale R must be >= 0, got {R}")
    if noise not in NOISE_KINDS:
        raise ConfigurationError(f"noise must be one of {NOISE_KINDS}, got {noise!r}")
    if action_set.kind == "finite" and action_set.vectors.shape[1] != d:
        raise ConfigurationError(f"arms must have dimension {d}")
    if action_set.kind == "box" and action_set.lower.size != d:
        raise ConfigurationError(f"box must have dimension {d}")
    if action_set.kind == "contextual" and action_set.dim != d:
        raise ConfigurationError(f"contexts must have dimension {d}")

    mu_norm = float(np.linalg.norm(mu))
    S_value = mu_norm if S is None else float(S)
    if S_value <= 0:
        raise ConfigurationError("S must be > 0 (μ = 0 needs an explicit positive S)")
    if mu_norm > S_value * (1 + 1e-12):
        raise ConfigurationError(f"‖μ‖₂ = {mu_norm:.6g} exceeds the public bound S = {S_value:.6g}")

    max_norm = _max_action_norm(action_set)
    L_value = max_norm if L is None else float(L)
    if max_norm > L_value * (1 + 1e-12):
        raise ConfigurationError(f"largest action norm {max_norm:.6g} exceeds the public bound L = {L_value:.6g}")

    loss_bound = max_abs_loss(mu, action_set)
    if loss_bound > ASSUMPTION_LOSS_BOUND:
        logger(f"⚠️ max |μᵀx| = {loss_bound:.4f} exceeds {ASSUMPTION_LOSS_BOUND}; per-round regret may exceed 2",
               level="WARNING")

    return ProblemInstance(mu=mu, B=B, c=float(c), R=float(R), S=S_value, L=L_value,
                           action_set=action_set, noise=noise)


# ---------------------------------------------------------------------------
# Ground-truth operations
# ---------------------------------------------------------------------------

def sample_noise(inst: ProblemInstance, rng: RandomStream) -> float:
    if inst.R == 0.0:
        return 0.0
    if inst.noise == "uniform":
        half_width = inst.R * np.sqrt(3.0)
        return float(rng.uniform(-half_width, half_width))
    return float(rng.normal(0.0, inst.R))


def sample_loss(inst: ProblemInstance, x: np.ndarray, rng: RandomStream) -> float:
    """Observed loss μᵀx + η"""
    return float(inst.mu @ np.asarray(x, dtype=float)) + sample_noise(inst, rng)


def constraint_value(inst: ProblemInstance, x: np.ndarray) -> float:
    return float(inst.mu @ inst.B @ np.asarray(x, dtype=float))


def is_safe(inst: ProblemInstance, x: np.ndarray) -> bool:
    """Ground-truth safety oracle μᵀBx ≤ c (evaluation only)"""
    return constraint_value(inst, x) <= inst.c


def per_round_optimum(inst: ProblemInstance, arms: np.ndarray) -> Tuple[int, float]:
    """Index and expected loss of the best truly safe arm (lowest index on ties)"""
    arms = np.atleast_2d(np.asarray(arms, dtype=float))
    safe = (arms @ (inst.B.T @ inst.mu)) <= inst.c
    if not np.any(safe):
        raise EnvironmentContractError("no truly safe arm among the offered actions")
    losses = arms @ inst.mu
    masked = np.where(safe, losses, np.inf)
    index = int(np.argmin(masked))
    return index, float(losses[index])


def _refine_box_optimum(inst: ProblemInstance, box: BoxPolytope, x: np.ndarray) -> np.ndarray:
    """One coordinate pass of fine 1-D searches around a grid optimum"""
    step = (box.upper - box.lower) / (box.grid_resolution - 1)
    best = x.copy()
    best_value = float(inst.mu @ best)
    for j in range(best.size):
        candidates = np.linspace(best[j] - step[j], best[j] + step[j], 41)
        candidates = candidates[(candidates >= box.lower[j]) & (candidates <= box.upper[j])]
        for value in candidates:
            trial = best.copy()
            trial[j] = value
            trial_value = float(inst.mu @ trial)
            if trial_value < best_value and is_safe(inst, trial):
                best, best_value = trial, trial_value
    return best


def optimal_safe_action(inst: ProblemInstance, arms: Optional[np.ndarray] = None) -> Tuple[np.ndarray, float]:
    """x* and μᵀx*; contextual instances need the round's arms"""
    action_set = inst.action_set
    if action_set.kind == "contextual" or arms is not None:
        if arms is None:
            raise ConfigurationError("contextual instances have a per-round optimum; pass the round's arms")
        arms = np.atleast_2d(np.asarray(arms, dtype=float))
        index, value = per_round_optimum(inst, arms)
        return arms[index].copy(), value

    if action_set.kind == "finite":
        index, value = per_round_optimum(inst, action_set.vectors)
        return action_set.vectors[index].copy(), value

    points = box_grid(action_set)
    safe = (points @ (inst.B.T @ inst.mu)) <= inst.c
    losses = np.where(safe, points @ inst.mu, np.inf)
    x_grid = points[int(np.argmin(losses))].copy()
    x_star = _refine_box_optimum(inst, action_set, x_grid)
    return x_star, float(inst.mu @ x_star)


def safety_gap(inst: ProblemInstance, arms: Optional[np.ndarray] = None) -> float:
    """Δ = c − μᵀBx*"""
    x_star, _ = optimal_safe_action(inst, arms)
    return max(0.0, inst.c - constraint_value(inst, x_star))


# ---------------------------------------------------------------------------
# Random arm sets
# ---------------------------------------------------------------------------

def uniform_in_ball(dim: int, rng: RandomStream, radius: float = 1.0, size: int = 1) -> np.ndarray:
    direction = rng.normal(size=(size, dim))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    scale = radius * rng.uniform(size=(size, 1)) ** (1.0 / dim)
    return direction * scale


def in_warmup_set(B: np.ndarray, c: float, S: float, x: np.ndarray) -> np.ndarray:
    """Row-wise ‖Bx‖₂ ≤ c/S"""
    x = np.atleast_2d(x)
    return np.linalg.norm(x @ B.T, axis=1) <= c / S


def _draw_warmup_arm(B: np.ndarray, c: float, S: float, radius: float, rng: RandomStream) -> np.ndarray:
    """Uniform point of D^w = {‖Bx‖ ≤ c/S} inside the ball of given radius"""
    dim = B.shape[0]
    invertible = np.linalg.cond(B) < 1e12
    for _ in range(MAX_CONTEXT_RETRIES):
        # two rejection proposals per try, each uniform on D^w ∩ ball once accepted:
        # the ellipsoid image of the ball (wins when D^w is small) and the ball itself
        proposals = [uniform_in_ball(dim, rng, radius)[0]]
        if invertible:
            proposals.insert(0, (c / S) * np.linalg.solve(B, uniform_in_ball(dim, rng)[0]))
        for x in proposals:
            if np.linalg.norm(x) <= radius and in_warmup_set(B, c, S, x)[0]:
                return x
    raise EnvironmentContractError("could not draw a warm-up-safe arm inside the action ball")


def _draw_outside_arm(B: np.ndarray, c: float, S: float, radius: float, rng: RandomStream) -> np.ndarray:
    dim = B.shape[0]
    for _ in range(MAX_CONTEXT_RETRIES):
        x = uniform_in_ball(dim, rng, radius)[0]
        if not in_warmup_set(B, c, S, x)[0]:
            return x
    raise EnvironmentContractError("warm-up set covers the action ball; cannot draw arms outside it")


def draw_arm_set(B: np.ndarray, c: float, S: float, K: int, n_warmup: int,
                 rng: RandomStream, radius: float = 1.0, others_outside: bool = True) -> np.ndarray:
    """K arms, the first n_warmup drawn inside D^w.

    With others_outside the remaining arms are conditioned to miss D^w, so
    exactly n_warmup arms are warm-up safe; otherwise they are plain uniform
    draws from the ball.
    """
    warmup = [_draw_warmup_arm(B, c, S, radius, rng) for _ in range(n_warmup)]
    if others_outside:
        others = [_draw_outside_arm(B, c, S, radius, rng) for _ in range(K - n_warmup)]
    else:
        others = list(uniform_in_ball(B.shape[0], rng, radius, size=K - n_warmup))
    return np.asarray(warmup + others).reshape(K, B.shape[0])


def generate_context(inst: ProblemInstance, t: int, rng: RandomStream) -> np.ndarray:
    """The K action vectors offered at round t; deterministic in (rng key, t)"""
    action_set = inst.action_set
    if action_set.kind != "contextual":
        raise ConfigurationError("generate_context needs a contextual action set")
    if action_set.n_warmup < 1 or action_set.n_warmup > action_set.K:
        raise ConfigurationError(f"contextual n_warmup must be in [1, K], got {action_set.n_warmup}")
    round_rng = rng.fork("context", int(t))
    try:
        arms = draw_arm_set(inst.B, inst.c, inst.S, action_set.K, action_set.n_warmup, round_rng, action_set.radius)
    except EnvironmentContractError as e:
        logger(f"❌ Context generation failed at round {t}: {str(e)}", level="ERROR")
        raise
    if not np.any(in_warmup_set(inst.B, inst.c, inst.S, arms)):
        raise EnvironmentContractError(f"round {t}: no warm-up-safe arm in context")
    return arms


def sample_karmed_instance(rng: RandomStream, R: float = DEFAULT_NOISE_SCALE,
                           dim: int = KARMED_DIM, K: int = KARMED_ARMS,
                           n_warmup: int = KARMED_WARMUP_ARMS, max_tries: int = 1000) -> ProblemInstance:
    """Random K-armed instance resampled until Δ > 0.

    Unit-norm μ, B ~ U[0,0.5]^{d×d}, c ~ U[0,1], n_warmup arms uniform in D^w
    and the rest uniform in the unit ball.
    """
    mu = rng.normal(size=dim)
    mu = mu / np.linalg.norm(mu)
    for attempt in range(max_tries):
        B = rng.uniform(KARMED_B_RANGE[0], KARMED_B_RANGE[1], size=(dim, dim))
        c = float(rng.uniform(*KARMED_C_RANGE))
        if c <= 0.0:
            continue
        try:
            arms = draw_arm_set(B, c, 1.0, K, n_warmup, rng, others_outside=False)
        except EnvironmentContractError:
            continue
        inst = make_instance(mu, B, c, make_finite_arms(arms), R=R, S=1.0)
        if safety_gap(inst) > 0.0:
            if attempt:
                logger(f"🎲 K-armed instance accepted after {attempt + 1} draws", level="DEBUG")
            return inst
    raise EnvironmentContractError(f"no K-armed instance with positive safety gap after {max_tries} draws")


# ---------------------------------------------------------------------------
# Environment handle
# ---------------------------------------------------------------------------

class RoundTruth(NamedTuple):
    """Hidden per-round quantities used only for diagnostics"""
    x_star: np.ndarray
    opt_value: float


class RoundOutcome(NamedTuple):
    regret: float
    term1: float
    term2: float
    alpha_t: float
    safe: bool
    covered: bool   # μ inside the region of an OFU round; False when no optimist was used
    opt_value: float
    ofu: bool = False


class Environment:
    """Runtime handle around one instance: serves contexts and losses and keeps the oracle side private"""

    def __init__(self, inst: ProblemInstance, context_rng: Optional[RandomStream] = None):
        self.inst = inst
        self.public = public_view(inst)
        self.context_rng = context_rng
        self._contexts: Dict[int, np.ndarray] = {}
        self._fixed_truth: Optional[RoundTruth] = None
        if inst.action_set.kind != "contextual":
            x_star, value = optimal_safe_action(inst)
            self._fixed_truth = RoundTruth(x_star=x_star, opt_value=value)
        elif context_rng is None:
            self.context_rng = RandomStream(inst.action_set.seed)

    def arms_at(self, t: int) -> Optional[np.ndarray]:
        """Actions on offer at round t (None for a box polytope)"""
        kind = self.inst.action_set.kind
        if kind == "finite":
            return self.inst.action_set.vectors
        if kind == "box":
            return None
        if t not in self._contexts:
            # only the current round is ever needed again
            self._contexts = {t: generate_context(self.inst, t, self.context_rng)}
        return self._contexts[t]

    def truth_at(self, t: int) -> RoundTruth:
        if self._fixed_truth is not None:
            return self._fixed_truth
        arms = self.arms_at(t)
        index, value = per_round_optimum(self.inst, arms)
        return RoundTruth(x_star=arms[index].copy(), opt_value=value)

    def pull(self, x: np.ndarray, rng: RandomStream) -> float:
        return sample_loss(self.inst, x, rng)

    def is_safe(self, x: np.ndarray) -> bool:
        return is_safe(self.inst, x)

    def safety_gap(self) -> float:
        if self._fixed_truth is None:
            raise ConfigurationError("contextual instances have a per-round safety gap")
        return max(0.0, self.inst.c - constraint_value(self.inst, self._fixed_truth.x_star))

    def evaluate_round(self, t: int, x: np.ndarray, optimist: Optional[np.ndarray],
                       region: ConfidenceRegion) -> RoundOutcome:
        """Regret split, α_t, true safety and coverage for the action played at round t.

        Rounds without an optimist (exploration, fallback, oracle) take μ̃ = μ,
        so Term I is zero and Term II is the whole regret. Those rounds are
        not OFU rounds and never count as covered.
        """
        truth = self.truth_at(t)
        x = np.asarray(x, dtype=float)
        expected = float(self.inst.mu @ x)
        regret = expected - truth.opt_value
        if optimist is None:
            term1, term2 = 0.0, regret
        else:
            optimistic = float(np.asarray(optimist, dtype=float) @ x)
            term1 = expected - optimistic
            term2 = optimistic - truth.opt_value
        alpha = alpha_t(self.inst.mu, self.inst.B, self.inst.c, truth.x_star, region.gram,
                        region.effective_radius, gram_inv=region.gram_inv)
        return RoundOutcome(regret=regret, term1=term1, term2=term2, alpha_t=alpha,
                            safe=is_safe(self.inst, x),
                            covered=optimist is not None and contains(region, self.inst.mu),
                            opt_value=truth.opt_value, ofu=optimist is not None)

    def covers(self, region: ConfidenceRegion) -> bool:
        """Whether μ lies in the region (diagnostics only)"""
        return contains(region, self.inst.mu)
