# --- Policies Module ---
"""
Safe linear bandit policies: Safe-LUCB (pure exploration for T′ rounds, then
safe OFU), GSLUCB (exploration length shortened by a running lower bound on
the safety gap), the no-exploration ablation and the oracle baseline.
Also the warm-up samplers and the phase-length formulas.
"""

import math
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from config import (
    DEFAULT_GSLUCB_EVERY,
    GAP_ZERO_TOLERANCE,
    LAMBDA_MINUS_DEFLATION,
    LAMBDA_MINUS_SAMPLES,
    PHASE_EXPLORE_EXPLOIT,
    PHASE_PURE_EXPLORATION,
    POLICY_KINDS,
    REGION_KINDS,
    REJECTION_MAX_TRIES,
    SAMPLER_KINDS,
    T_PRIME_RULES,
)
from confidence import BetaSchedule, ConfidenceRegion, beta, make_beta_schedule, region_from_gram
from environment import Environment, PublicView, draw_arm_set, in_warmup_set
from linalg_core import GramState, min_eigenvalue, new_gram_state, rank1_update, spectral_norm, weighted_norm
from logger_utils import logger
from random_streams import RandomStream
from safe_opt import gap_lower_bound_karmed, ofu_finite, ofu_l1_polytope, warmup_fallback_action
from validation_utils import ConfigurationError, NoSafeActionError, NumericDomainError, SafebanError


# ---------------------------------------------------------------------------
# Warm-up samplers
# ---------------------------------------------------------------------------

class WarmupSampler(NamedTuple):
    kind: str                        # rejection | surface | warmup_arms
    max_tries: int = REJECTION_MAX_TRIES
    epsilon: Optional[float] = None  # surface radius ‖Bx‖ = ε


def make_sampler(kind: str, public: PublicView, epsilon: Optional[float] = None,
                 max_tries: int = REJECTION_MAX_TRIES) -> WarmupSampler:
    """Check that a sampler can actually draw from D^w of this instance"""
    if kind not in SAMPLER_KINDS:
        raise ConfigurationError(f"sampler must be one of {SAMPLER_KINDS}, got {kind!r}")
    action_kind = public.action_set.kind
    if action_kind != "box" and kind != "warmup_arms":
        raise ConfigurationError(f"{action_kind} action sets explore with the warmup_arms sampler, got {kind!r}")
    if action_kind == "box" and kind == "warmup_arms":
        raise ConfigurationError("box action sets explore with the rejection or surface sampler")

    if action_kind == "finite" and not np.any(in_warmup_set(public.B, public.c, public.S, public.action_set.vectors)):
        raise ConfigurationError("no arm lies in the warm-up set; pure exploration is impossible")

    if kind == "surface":
        if np.linalg.cond(public.B) > 1e12:
            raise ConfigurationError("surface sampler needs an invertible B")
        limit = public.c / public.S
        eps = limit if epsilon is None else float(epsilon)
        if not 0.0 < eps <= limit * (1 + 1e-12):
            raise ConfigurationError(f"surface epsilon must be in (0, c/S = {limit:.6g}], got {eps}")
        # the ellipsoid {εB⁻¹z : ‖z‖=1} reaches ε‖row_j(B⁻¹)‖ along axis j
        reach = eps * np.linalg.norm(np.linalg.inv(public.B), axis=1)
        box = public.action_set
        if np.any(reach > box.upper) or np.any(-reach < box.lower):
            raise ConfigurationError(f"surface sampler with epsilon={eps:.6g} leaves the action box")
        return WarmupSampler(kind=kind, max_tries=int(max_tries), epsilon=eps)

    return WarmupSampler(kind=kind, max_tries=int(max_tries))


def _rejection_batch(public: PublicView, rng: RandomStream, count: int, max_tries: int) -> np.ndarray:
    """count points uniform on D^w ∩ box by rejection from the box"""
    box = public.action_set
    accepted: List[np.ndarray] = []
    n_accepted = 0
    tries = 0
    batch = max(256, 4 * count)
    while n_accepted < count:
        if tries >= max_tries:
            raise ConfigurationError(
                f"rejection sampler exceeded {max_tries} tries; the warm-up set has negligible volume")
        size = min(batch, max_tries - tries)
        points = rng.uniform(box.lower, box.upper, size=(size, public.dim))
        tries += size
        keep = points[in_warmup_set(public.B, public.c, public.S, points)]
        accepted.append(keep)
        n_accepted += keep.shape[0]
    return np.concatenate(accepted, axis=0)[:count]


def sample_exploration_action(sampler: WarmupSampler, public: PublicView, rng: RandomStream,
                              arms: Optional[np.ndarray] = None) -> np.ndarray:
    """One random action from the warm-up set"""
    if sampler.kind == "surface":
        z = rng.normal(size=public.dim)
        z /= np.linalg.norm(z)
        return sampler.epsilon * np.linalg.solve(public.B, z)
    if sampler.kind == "rejection":
        return _rejection_batch(public, rng, 1, sampler.max_tries)[0]

    if arms is None:
        raise ConfigurationError("warmup_arms sampler needs the round's arms")
    warm = np.flatnonzero(in_warmup_set(public.B, public.c, public.S, arms))
    if warm.size == 0:
        raise ConfigurationError("no offered arm lies in the warm-up set")
    return np.asarray(arms[warm[int(rng.integers(warm.size))]], dtype=float).copy()


def lambda_minus(sampler: WarmupSampler, public: PublicView, rng: RandomStream) -> float:
    """Lower bound λ_- on λ_min(E[xxᵀ]) of the exploration distribution"""
    if sampler.kind == "surface":
        return sampler.epsilon ** 2 / (public.dim * spectral_norm(public.B) ** 2)

    if sampler.kind == "rejection":
        X = _rejection_batch(public, rng, LAMBDA_MINUS_SAMPLES, sampler.max_tries)
        estimate = LAMBDA_MINUS_DEFLATION * min_eigenvalue(X.T @ X / X.shape[0])
    elif public.action_set.kind == "finite":
        arms = public.action_set.vectors
        warm = arms[in_warmup_set(public.B, public.c, public.S, arms)]
        estimate = min_eigenvalue(warm.T @ warm / warm.shape[0])
    else:
        action_set = public.action_set
        n_contexts = max(1, LAMBDA_MINUS_SAMPLES // action_set.K)
        second_moment = np.zeros((public.dim, public.dim))
        for k in range(n_contexts):
            arms = draw_arm_set(public.B, public.c, public.S, action_set.K, action_set.n_warmup,
                                rng.fork("context", k), action_set.radius)
            warm = arms[in_warmup_set(public.B, public.c, public.S, arms)]
            second_moment += warm.T @ warm / warm.shape[0]
        estimate = LAMBDA_MINUS_DEFLATION * min_eigenvalue(second_moment / n_contexts)

    if not estimate > 0.0:
        raise ConfigurationError(f"exploration covariance is degenerate (λ_- estimate {estimate:.3e})")
    return float(estimate)


# ---------------------------------------------------------------------------
# Phase lengths
# ---------------------------------------------------------------------------

class PhaseParams(NamedTuple):
    lambda_minus: Optional[float]   # None for policies that never explore
    t_delta: Optional[int]
    horizon: int
    known_gap: Optional[float] = None
    beta_T: float = 0.0
    B_norm: float = 0.0
    L: float = 0.0
    lam: float = 1.0
    c: float = 1.0


def _ceil(value: float) -> int:
    # absorb roundoff so an exact integer does not ceil one step up
    return int(math.ceil(value - 1e-9 * max(1.0, abs(value))))


def t_delta(L: float, lambda_minus_value: float, d: int, delta: float) -> int:
    """⌈(8L²/λ_-)·ln(d/δ)⌉, at least 1"""
    if not (L > 0 and lambda_minus_value > 0 and d > 0 and 0 < delta < 1):
        raise NumericDomainError("t_delta needs L, λ_-, d > 0 and δ in (0, 1)")
    value = 8.0 * L ** 2 / lambda_minus_value * math.log(d / delta)
    return max(1, _ceil(value))


def t_big_delta(params: PhaseParams, Delta: float, beta_T: float, B_norm: float, L: float, lam: float) -> int:
    """Exploration length that puts x* inside the estimated safe set when the gap Δ is known"""
    if not Delta > 0:
        raise NumericDomainError(f"t_big_delta needs a positive gap, got {Delta}")
    lm = params.lambda_minus
    first = 8.0 * L ** 2 * B_norm ** 2 * beta_T ** 2 / (lm * Delta ** 2) - 2.0 * lam / lm
    return _ceil(max(first, params.t_delta))


def t_zero(params: PhaseParams, beta_T: float, B_norm: float, L: float, c: float) -> int:
    """Gap-free exploration length ⌈max((‖B‖Lβ_T·T / (c√(2λ_-)))^{2/3}, t_δ)⌉"""
    if not c > 0:
        raise NumericDomainError(f"t_zero needs c > 0, got {c}")
    first = (B_norm * L * beta_T * params.horizon / (c * math.sqrt(2.0 * params.lambda_minus))) ** (2.0 / 3.0)
    return _ceil(max(first, params.t_delta))


def make_phase_params(public: PublicView, sched: BetaSchedule, horizon: int, lambda_minus_value: Optional[float],
                      known_gap: Optional[float] = None) -> PhaseParams:
    t_delta_value = None
    if lambda_minus_value is not None:
        t_delta_value = t_delta(public.L, lambda_minus_value, public.dim, sched.delta)
    return PhaseParams(
        lambda_minus=lambda_minus_value,
        t_delta=t_delta_value,
        horizon=int(horizon),
        known_gap=known_gap,
        beta_T=beta(sched, max(1, int(horizon))),
        B_norm=spectral_norm(public.B),
        L=public.L,
        lam=sched.lam,
        c=public.c,
    )


def gslucb_phase_update(Delta_t: float, params: PhaseParams) -> int:
    """T′_t from the current gap lower bound: T_{Δ_t} when Δ_t > 0, else T₀"""
    if Delta_t > GAP_ZERO_TOLERANCE:
        return t_big_delta(params, Delta_t, params.beta_T, params.B_norm, params.L, params.lam)
    return t_zero(params, params.beta_T, params.B_norm, params.L, params.c)


def resolve_t_prime(rule: Union[int, str], params: PhaseParams) -> int:
    """Turn a configured T′ (integer or rule name) into a round count"""
    if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
        if rule < 0:
            raise ConfigurationError(f"t_prime must be >= 0, got {rule}")
        return int(rule)
    if rule == "t_delta":
        return params.t_delta
    if rule == "t_big_delta":
        if params.known_gap is None or not params.known_gap > 0:
            raise ConfigurationError("t_prime 't_big_delta' needs a positive known_gap")
        return t_big_delta(params, params.known_gap, params.beta_T, params.B_norm, params.L, params.lam)
    if rule == "t_zero":
        return t_zero(params, params.beta_T, params.B_norm, params.L, params.c)
    raise ConfigurationError(f"t_prime must be an integer or one of {T_PRIME_RULES}, got {rule!r}")


def regret_bound_known_gap(T: int, t_prime: int, beta_T: float, d: int, L: float,
                           lambda_minus_value: float, lam: float) -> float:
    """High-probability regret envelope of Safe-LUCB run with T′ = T_Δ"""
    explore = 2.0 * t_prime
    remaining = max(T - t_prime, 0)
    argument = 2.0 * T * L ** 2 / (d * (lambda_minus_value * t_prime + 2.0 * lam))
    return explore + 2.0 * beta_T * math.sqrt(2.0 * d * remaining * math.log(max(argument, 1.0)))


def regret_bound_worst_case(T: int, t_prime: int, beta_T: float, d: int, L: float,
                            lambda_minus_value: float, lam: float, B_norm: float, c: float) -> float:
    """Envelope without a gap assumption; adds the regret of safety"""
    remaining = max(T - t_prime, 0)
    safety = 2.0 * math.sqrt(2.0) * B_norm * L * beta_T * remaining / (
        c * math.sqrt(lambda_minus_value * t_prime + 2.0 * lam))
    return regret_bound_known_gap(T, t_prime, beta_T, d, L, lambda_minus_value, lam) + safety


# ---------------------------------------------------------------------------
# Policy state and rounds
# ---------------------------------------------------------------------------

class PolicyState(NamedTuple):
    kind: str
    phase: str
    round: int                  # rounds played so far
    gram: GramState
    beta_sched: BetaSchedule
    region_kind: str
    t_prime: int                # current exploration length T′ (T′_{t−1} for GSLUCB)


class RoundDiagnostics(NamedTuple):
    round: int
    action: np.ndarray
    loss: float
    regret: float
    term1: float
    term2: float
    alpha_t: float
    safe: bool
    phase: str
    covered: bool               # μ inside the region of an OFU round
    beta: float                 # effective radius used this round
    x_norm: float               # ‖x_t‖ in the A_t⁻¹ norm
    fallback: bool = False
    safe_count: int = -1
    gap_lower_bound: Optional[float] = None
    gap_covered: Optional[bool] = None
    ofu: bool = False           # played the optimistic choice


def oracle_policy_step(env: Environment, t: int) -> np.ndarray:
    """x* (per-round optimum for contextual instances)"""
    return env.truth_at(t).x_star.copy()


class SafeLUCB:
    """Pure exploration for T′ rounds, then OFU restricted to the estimated safe set"""

    kind = "safe_lucb"

    def __init__(self, name: str, public: PublicView, horizon: int, rng: RandomStream,
                 region_kind: str = "ell1", sampler: Optional[WarmupSampler] = None,
                 t_prime: Union[int, str] = 0, known_gap: Optional[float] = None,
                 delta: float = 0.01, lam: float = 1.0):
        if region_kind not in REGION_KINDS:
            raise ConfigurationError(f"region must be one of {REGION_KINDS}, got {region_kind!r}")
        if public.action_set.kind == "box" and region_kind != "ell1":
            raise ConfigurationError("box action sets are optimized over ell1 regions only")
        self.name = name
        self.public = public
        self.horizon = int(horizon)
        self.region_kind = region_kind
        self.explore_rng = rng.fork("explore")
        self.noise_rng = rng.fork("noise")

        explores = self._explores(t_prime)
        if sampler is None and explores:
            sampler = make_sampler("rejection" if public.action_set.kind == "box" else "warmup_arms", public)
        self.sampler = sampler
        sched = make_beta_schedule(public.R, public.dim, public.L, lam, public.S, delta)
        self.lambda_minus: Optional[float] = None
        if explores:
            self.lambda_minus = lambda_minus(sampler, public, rng.fork("lambda_minus"))
        self.params = make_phase_params(public, sched, self.horizon, self.lambda_minus, known_gap)

        resolved = self._initial_t_prime(t_prime)
        self.state = PolicyState(
            kind=self.kind,
            phase=PHASE_PURE_EXPLORATION if resolved >= 1 else PHASE_EXPLORE_EXPLOIT,
            round=0,
            gram=new_gram_state(public.dim, lam),
            beta_sched=sched,
            region_kind=region_kind,
            t_prime=resolved,
        )
        self.fallback_rounds = 0
        self.exploration_rounds = 0
        self.first_warmup: Optional[np.ndarray] = None
        self.covered_every_round = True

    def _explores(self, t_prime: Union[int, str]) -> bool:
        """Whether a pure-exploration phase (and so λ_-) is needed at all"""
        return isinstance(t_prime, str) or t_prime != 0

    def _initial_t_prime(self, t_prime: Union[int, str]) -> int:
        return resolve_t_prime(t_prime, self.params)

    # -- region ------------------------------------------------------------
    def current_region(self, t: Optional[int] = None, kind: Optional[str] = None) -> ConfidenceRegion:
        """Confidence region at the start of round t (defaults to the next round)"""
        t = self.state.round + 1 if t is None else int(t)
        return region_from_gram(self.state.gram, beta(self.state.beta_sched, t), kind or self.region_kind)

    def explores_at(self, t: int) -> bool:
        return t <= self.state.t_prime

    # -- action choice -----------------------------------------------------
    def _explore(self, arms: Optional[np.ndarray]) -> np.ndarray:
        x = sample_exploration_action(self.sampler, self.public, self.explore_rng, arms)
        if self.first_warmup is None:
            self.first_warmup = x.copy()
        return x

    def _optimize(self, region: ConfidenceRegion, arms: Optional[np.ndarray]):
        if self.public.action_set.kind == "box":
            return ofu_l1_polytope(region, self.public.B, self.public.c, self.public.action_set)
        return ofu_finite(region, self.public.B, self.public.c, arms)

    def choose(self, env: Environment, t: int, region: ConfidenceRegion,
               arms: Optional[np.ndarray]) -> Tuple[np.ndarray, Optional[np.ndarray], bool, int]:
        """(action, optimist or None, fallback flag, safe-set size)"""
        if self.explores_at(t):
            return self._explore(arms), None, False, -1
        try:
            result = self._optimize(region, arms)
            return result.action, result.optimist, False, result.safe_count
        except NoSafeActionError as e:
            self.fallback_rounds += 1
            logger(f"⚠️ {self.name} round {t}: {str(e)}; playing the warm-up fallback", level="DEBUG")
            return warmup_fallback_action(self.public, arms, self.first_warmup), None, True, 0

    def after_update(self, env: Environment, t: int, explored: bool, arms: Optional[np.ndarray]) -> Dict[str, Any]:
        return {}

    def step(self, env: Environment) -> RoundDiagnostics:
        """Play one round: choose, observe the loss, update the Gram state"""
        t = self.state.round + 1
        if t > self.horizon:
            raise SafebanError(f"{self.name}: round {t} is past the horizon {self.horizon}")
        arms = env.arms_at(t)
        region = self.current_region(t)
        explored = self.explores_at(t)
        x, optimist, fallback, safe_count = self.choose(env, t, region, arms)
        x = np.asarray(x, dtype=float)

        loss = env.pull(x, self.noise_rng)
        outcome = env.evaluate_round(t, x, optimist, region)
        x_norm = weighted_norm(x, self.state.gram.A_inv)
        phase = PHASE_PURE_EXPLORATION if explored else PHASE_EXPLORE_EXPLOIT
        if explored:
            self.exploration_rounds += 1
        elif outcome.ofu and not outcome.covered:
            self.covered_every_round = False

        self.state = self.state._replace(
            phase=phase,
            round=t,
            gram=rank1_update(self.state.gram, x, loss),
        )
        extra = self.after_update(env, t, explored, arms)
        return RoundDiagnostics(
            round=t, action=x, loss=loss, regret=outcome.regret,
            term1=outcome.term1, term2=outcome.term2, alpha_t=outcome.alpha_t,
            safe=outcome.safe, phase=phase, covered=outcome.covered,
            beta=region.effective_radius, x_norm=x_norm, fallback=fallback,
            safe_count=safe_count, ofu=outcome.ofu, **extra,
        )

    @property
    def realized_t_prime(self) -> int:
        return self.exploration_rounds

    def metadata(self) -> Dict[str, Any]:
        return {
            "policy": self.name,
            "kind": self.kind,
            "region": self.region_kind,
            "sampler": self.sampler.kind if self.sampler else None,
            "epsilon": self.sampler.epsilon if self.sampler else None,
            "lambda_minus": self.lambda_minus,
            "t_delta": self.params.t_delta,
            "t_prime_configured": self.state.t_prime if self.kind != "gslucb" else None,
            "t_prime_realized": self.realized_t_prime,
            "beta_T": self.params.beta_T,
            "fallback_rounds": self.fallback_rounds,
            "covered_every_ofu_round": self.covered_every_round,
        }


class NoExploration(SafeLUCB):
    """Safe-LUCB with T′ = 0"""

    kind = "no_exploration"

    def _explores(self, t_prime: Union[int, str]) -> bool:
        return False

    def _initial_t_prime(self, t_prime: Union[int, str]) -> int:
        return 0


class OraclePolicy(SafeLUCB):
    """Plays x* every round; regret is identically zero"""

    kind = "oracle"

    def _explores(self, t_prime: Union[int, str]) -> bool:
        return False

    def _initial_t_prime(self, t_prime: Union[int, str]) -> int:
        return 0

    def choose(self, env, t, region, arms):
        return oracle_policy_step(env, t), None, False, -1


class GSLUCB(SafeLUCB):
    """Safe-LUCB whose exploration stops once a lower confidence bound on Δ makes T_{Δ_t} small enough"""

    kind = "gslucb"

    def __init__(self, *args, gslucb_every: int = DEFAULT_GSLUCB_EVERY, **kwargs):
        self.gslucb_every = int(gslucb_every)
        if self.gslucb_every < 1:
            raise ConfigurationError(f"gslucb_every must be >= 1, got {gslucb_every}")
        super().__init__(*args, **kwargs)
        if self.public.action_set.kind != "finite":
            raise ConfigurationError("GSLUCB needs a finite arm set (the K-armed gap bound)")
        self.exploring = self.state.t_prime >= 1
        self.gap_history: List[Dict[str, Any]] = []

    def _explores(self, t_prime: Union[int, str]) -> bool:
        return True

    def _initial_t_prime(self, t_prime: Union[int, str]) -> int:
        self.t_zero = t_zero(self.params, self.params.beta_T, self.params.B_norm, self.params.L, self.params.c)
        return self.t_zero

    def explores_at(self, t: int) -> bool:
        if self.exploring and t > min(self.state.t_prime, self.t_zero):
            self.exploring = False
            logger(f"🔀 {self.name}: pure exploration ends after {t - 1} rounds", level="DEBUG")
        return self.exploring

    def after_update(self, env: Environment, t: int, explored: bool, arms: Optional[np.ndarray]) -> Dict[str, Any]:
        if not explored or (t % self.gslucb_every != 0 and t != 1):
            return {}
        region = self.current_region(t + 1, kind="ell1")
        Delta_t = gap_lower_bound_karmed(region, self.public.B, self.public.c, arms)
        t_prime = gslucb_phase_update(Delta_t, self.params)
        self.state = self.state._replace(t_prime=t_prime)
        self.gap_history.append({"round": t, "gap_lower_bound": Delta_t, "t_prime": t_prime})
        return {"gap_lower_bound": Delta_t, "gap_covered": env.covers(region)}

    def metadata(self) -> Dict[str, Any]:
        info = super().metadata()
        info["t_zero"] = self.t_zero
        info["gap_history"] = self.gap_history
        return info


POLICY_CLASSES = {
    "safe_lucb": SafeLUCB,
    "gslucb": GSLUCB,
    "no_exploration": NoExploration,
    "oracle": OraclePolicy,
}


def make_policy(kind: str, name: str, public: PublicView, horizon: int, rng: RandomStream,
                region: str = "ell1", sampler: Optional[str] = None, epsilon: Optional[float] = None,
                t_prime: Union[int, str] = 0, known_gap: Optional[float] = None,
                delta: float = 0.01, lam: float = 1.0,
                gslucb_every: int = DEFAULT_GSLUCB_EVERY) -> SafeLUCB:
    """Build a policy from its configured fields"""
    if kind not in POLICY_KINDS:
        raise ConfigurationError(f"policy kind must be one of {POLICY_KINDS}, got {kind!r}")
    sampler_spec = make_sampler(sampler, public, epsilon) if sampler else None
    kwargs = dict(region_kind=region, sampler=sampler_spec, t_prime=t_prime,
                  known_gap=known_gap, delta=delta, lam=lam)
    if kind == "gslucb":
        return GSLUCB(name, public, horizon, rng, gslucb_every=gslucb_every, **kwargs)
    return POLICY_CLASSES[kind](name, public, horizon, rng, **kwargs)
