# --- Configuration Manager Module ---
"""
Experiment configuration: JSON loading with defaults, fail-fast validation
(unknown keys are errors at every level), typed config records and the
override chain CLI flag > environment variable > config file > default.
"""

import json
import math
import os
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

from config import (
    DEFAULT_BASE_SEED,
    DEFAULT_DELTA,
    DEFAULT_GRID_RESOLUTION,
    DEFAULT_GSLUCB_EVERY,
    DEFAULT_LAMBDA,
    DEFAULT_LOG_LEVEL,
    DEFAULT_NOISE_SCALE,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_REGION_KIND,
    DEFAULT_THREADS,
    INSTANCE_KINDS,
    KARMED_ARMS,
    KARMED_DIM,
    KARMED_WARMUP_ARMS,
    NOISE_KINDS,
    POLICY_KINDS,
    REGION_KINDS,
    SAMPLER_KINDS,
    T_PRIME_RULES,
    THREADS_ENV_VAR,
)
from logger_utils import LOG_LEVELS, logger
from validation_utils import (
    ConfigurationError,
    validate_choice,
    validate_int_range,
    validate_known_keys,
    validate_positive,
    validate_probability,
)

# Snapshot at the first round after each policy's exploration phase
AFTER_EXPLORATION = "after_exploration"
# known_gap read from the instance itself (harness-side oracle)
GAP_FROM_INSTANCE = "instance"


class InstanceSpec(NamedTuple):
    kind: str
    mu: Optional[List[float]] = None
    B: Optional[List[List[float]]] = None
    c: Optional[float] = None
    R: float = DEFAULT_NOISE_SCALE
    S: Optional[float] = None
    L: Optional[float] = None
    noise: str = "gaussian"
    arms: Optional[List[List[float]]] = None
    lower: Optional[List[float]] = None
    upper: Optional[List[float]] = None
    K: int = KARMED_ARMS
    n_warmup: int = KARMED_WARMUP_ARMS
    seed: int = 0
    radius: float = 1.0
    dim: int = KARMED_DIM


class PolicySpec(NamedTuple):
    kind: str
    name: str
    region: str = DEFAULT_REGION_KIND
    sampler: Optional[str] = None
    epsilon: Optional[float] = None
    t_prime: Union[int, str] = 0
    known_gap: Union[None, float, str] = None


class ExperimentConfig(NamedTuple):
    name: str
    instance: InstanceSpec
    policies: Tuple[PolicySpec, ...]
    horizon: int
    replications: int = 1
    base_seed: int = DEFAULT_BASE_SEED
    output_dir: str = DEFAULT_OUTPUT_DIR
    snapshot_rounds: Tuple[Union[int, str], ...] = ()
    grid_resolution: int = DEFAULT_GRID_RESOLUTION
    delta: float = DEFAULT_DELTA
    lam: float = DEFAULT_LAMBDA
    log_level: str = DEFAULT_LOG_LEVEL
    gslucb_every: int = DEFAULT_GSLUCB_EVERY
    threads: int = DEFAULT_THREADS


INSTANCE_KEYS = {
    "finite": ["kind", "mu", "B", "c", "R", "S", "L", "noise", "arms"],
    "box": ["kind", "mu", "B", "c", "R", "S", "L", "noise", "lower", "upper"],
    "contextual": ["kind", "mu", "B", "c", "R", "S", "L", "noise", "K", "n_warmup", "seed", "radius"],
    "random_karmed": ["kind", "R", "noise", "K", "n_warmup", "dim"],
    "fig2": ["kind", "R", "noise"],
}
POLICY_KEYS = ["kind", "name", "region", "sampler", "epsilon", "t_prime", "known_gap"]
# JSON spells the ridge parameter "lambda"
TOP_LEVEL_KEYS = [
    "name", "instance", "policies", "horizon", "replications", "base_seed", "output_dir",
    "snapshot_rounds", "grid_resolution", "delta", "lambda", "log_level", "gslucb_every", "threads",
]


class ConfigManager:
    """Parse, validate and serialize experiment configs"""

    def __init__(self):
        self.default_config = {
            "name": "experiment",
            "replications": 1,
            "base_seed": DEFAULT_BASE_SEED,
            "output_dir": DEFAULT_OUTPUT_DIR,
            "snapshot_rounds": [],
            "grid_resolution": DEFAULT_GRID_RESOLUTION,
            "delta": DEFAULT_DELTA,
            "lambda": DEFAULT_LAMBDA,
            "log_level": DEFAULT_LOG_LEVEL,
            "gslucb_every": DEFAULT_GSLUCB_EVERY,
            "threads": DEFAULT_THREADS,
        }

    def load_config(self, path: str) -> ExperimentConfig:
        """Read a JSON config file; every problem surfaces as ConfigurationError"""
        try:
            with open(path, "r", encoding="utf-8") as f:
                raw = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path}: invalid JSON ({str(e)})")
        except OSError as e:
            raise ConfigurationError(f"{path}: cannot read config ({str(e)})")
        config = self.from_dict(raw, where=path)
        logger(f"✅ Configuration loaded from {path}")
        return config

    def from_dict(self, raw: Dict[str, Any], where: str = "config") -> ExperimentConfig:
        validate_known_keys(raw, TOP_LEVEL_KEYS, where)
        for required in ("instance", "policies", "horizon"):
            if required not in raw:
                raise ConfigurationError(f"{where}: missing required key '{required}'")
        merged = self.default_config.copy()
        merged.update(raw)

        horizon = validate_int_range(merged["horizon"], "horizon", min_val=1)
        policies_raw = merged["policies"]
        if not isinstance(policies_raw, list) or not policies_raw:
            raise ConfigurationError(f"{where}: 'policies' must be a non-empty list")
        policies = tuple(self._parse_policy(p, f"{where}.policies[{i}]") for i, p in enumerate(policies_raw))
        names = [p.name for p in policies]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"{where}: policy names must be unique, got {names}")

        snapshot_rounds = merged["snapshot_rounds"]
        if not isinstance(snapshot_rounds, list):
            raise ConfigurationError(f"{where}: 'snapshot_rounds' must be a list")
        for entry in snapshot_rounds:
            if entry != AFTER_EXPLORATION:
                validate_int_range(entry, "snapshot_rounds", min_val=1, max_val=horizon)

        log_level = str(merged["log_level"]).upper()
        validate_choice(log_level, "log_level", list(LOG_LEVELS))

        return ExperimentConfig(
            name=str(merged["name"]),
            instance=self._parse_instance(merged["instance"], f"{where}.instance"),
            policies=policies,
            horizon=horizon,
            replications=validate_int_range(merged["replications"], "replications", min_val=1),
            base_seed=validate_int_range(merged["base_seed"], "base_seed", min_val=0, max_val=2 ** 64 - 1),
            output_dir=str(merged["output_dir"]),
            snapshot_rounds=tuple(snapshot_rounds),
            grid_resolution=validate_int_range(merged["grid_resolution"], "grid_resolution", min_val=3),
            delta=validate_probability(merged["delta"], "delta"),
            lam=validate_positive(merged["lambda"], "lambda"),
            log_level=log_level,
            gslucb_every=validate_int_range(merged["gslucb_every"], "gslucb_every", min_val=1),
            threads=validate_int_range(merged["threads"], "threads", min_val=1),
        )

    def _parse_instance(self, raw: Any, where: str) -> InstanceSpec:
        if isinstance(raw, str):
            raw = {"kind": raw}
        if not isinstance(raw, dict) or "kind" not in raw:
            raise ConfigurationError(f"{where}: expected an object with a 'kind'")
        kind = validate_choice(raw["kind"], f"{where}.kind", INSTANCE_KINDS)
        validate_known_keys(raw, INSTANCE_KEYS[kind], where)
        if kind in ("finite", "box", "contextual"):
            for required in ("mu", "B", "c"):
                if required not in raw:
                    raise ConfigurationError(f"{where}: '{kind}' instances need '{required}'")
        if kind == "finite" and "arms" not in raw:
            raise ConfigurationError(f"{where}: finite instances need 'arms'")
        if kind == "box" and not ("lower" in raw and "upper" in raw):
            raise ConfigurationError(f"{where}: box instances need 'lower' and 'upper'")

        values = dict(raw)
        if "noise" in values:
            validate_choice(values["noise"], f"{where}.noise", NOISE_KINDS)
        if "R" in values:
            values["R"] = validate_positive(values["R"], f"{where}.R", allow_zero=True)
        if "c" in values:
            values["c"] = validate_positive(values["c"], f"{where}.c")
        for key in ("K", "n_warmup", "dim"):
            if key in values:
                values[key] = validate_int_range(values[key], f"{where}.{key}", min_val=1)
        if values.get("n_warmup", 1) > values.get("K", KARMED_ARMS):
            raise ConfigurationError(f"{where}: n_warmup cannot exceed K")
        return InstanceSpec(**values)

    def _parse_policy(self, raw: Any, where: str) -> PolicySpec:
        if not isinstance(raw, dict) or "kind" not in raw:
            raise ConfigurationError(f"{where}: expected an object with a 'kind'")
        validate_known_keys(raw, POLICY_KEYS, where)
        kind = validate_choice(raw["kind"], f"{where}.kind", POLICY_KINDS)
        values = dict(raw)
        values.setdefault("name", kind)
        if "region" in values:
            validate_choice(values["region"], f"{where}.region", REGION_KINDS)
        if values.get("sampler") is not None:
            validate_choice(values["sampler"], f"{where}.sampler", SAMPLER_KINDS)
        if values.get("epsilon") is not None:
            values["epsilon"] = validate_positive(values["epsilon"], f"{where}.epsilon")
        t_prime = values.get("t_prime", 0)
        if isinstance(t_prime, str):
            validate_choice(t_prime, f"{where}.t_prime", T_PRIME_RULES)
        else:
            validate_int_range(t_prime, f"{where}.t_prime", min_val=0)
        gap = values.get("known_gap")
        if gap is not None and gap != GAP_FROM_INSTANCE:
            values["known_gap"] = validate_positive(gap, f"{where}.known_gap")
        if t_prime == "t_big_delta" and gap is None:
            raise ConfigurationError(f"{where}: t_prime 't_big_delta' needs known_gap")
        return PolicySpec(**values)


def to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    """JSON-ready form of a config (inverse of ConfigManager.from_dict)"""
    instance = {k: v for k, v in cfg.instance._asdict().items()
                if k in INSTANCE_KEYS[cfg.instance.kind] and v is not None}
    policies = [{k: v for k, v in p._asdict().items() if v is not None} for p in cfg.policies]
    return {
        "name": cfg.name,
        "instance": instance,
        "policies": policies,
        "horizon": cfg.horizon,
        "replications": cfg.replications,
        "base_seed": cfg.base_seed,
        "output_dir": cfg.output_dir,
        "snapshot_rounds": list(cfg.snapshot_rounds),
        "grid_resolution": cfg.grid_resolution,
        "delta": cfg.delta,
        "lambda": cfg.lam,
        "log_level": cfg.log_level,
        "gslucb_every": cfg.gslucb_every,
        "threads": cfg.threads,
    }


def save_config(cfg: ExperimentConfig, path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(to_dict(cfg), f, indent=2, ensure_ascii=False)
            f.write("\n")
    except OSError as e:
        raise OSError(f"cannot write config to {path}: {str(e)}") from e
    logger(f"💾 Configuration saved to {path}")


def scale_config(cfg: ExperimentConfig, scale: int) -> ExperimentConfig:
    """Desk-scale copy: horizon, fixed T′ and snapshot rounds divided by a power of 10"""
    scale = validate_int_range(scale, "scale", min_val=1)
    if scale != 10 ** int(round(math.log10(scale))):
        raise ConfigurationError(f"scale must be a power of 10, got {scale}")
    if scale == 1:
        return cfg
    policies = tuple(
        p._replace(t_prime=p.t_prime // scale) if isinstance(p.t_prime, int) else p
        for p in cfg.policies
    )
    snapshots = tuple(r if r == AFTER_EXPLORATION else max(1, r // scale) for r in cfg.snapshot_rounds)
    return cfg._replace(horizon=max(1, cfg.horizon // scale), policies=policies, snapshot_rounds=snapshots)


def apply_overrides(cfg: ExperimentConfig, output_dir: Optional[str] = None, seed: Optional[int] = None,
                    replications: Optional[int] = None, threads: Optional[int] = None,
                    scale: Optional[int] = None) -> ExperimentConfig:
    """Layer CLI flags and the environment over a loaded config"""
    if scale is not None:
        cfg = scale_config(cfg, scale)
    if output_dir is not None:
        cfg = cfg._replace(output_dir=output_dir)
    if seed is not None:
        cfg = cfg._replace(base_seed=validate_int_range(seed, "seed", min_val=0, max_val=2 ** 64 - 1))
    if replications is not None:
        cfg = cfg._replace(replications=validate_int_range(replications, "reps", min_val=1))
    return cfg._replace(threads=resolve_threads(threads, cfg.threads))


def resolve_threads(cli_value: Optional[int], file_value: int = DEFAULT_THREADS) -> int:
    if cli_value is not None:
        return validate_int_range(cli_value, "threads", min_val=1)
    env_value = os.environ.get(THREADS_ENV_VAR)
    if env_value:
        if not env_value.strip().isdigit():
            raise ConfigurationError(f"{THREADS_ENV_VAR}: expected an integer, got {env_value!r}")
        return validate_int_range(int(env_value), THREADS_ENV_VAR, min_val=1)
    return file_value
