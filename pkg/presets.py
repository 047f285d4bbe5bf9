# --- Presets Module ---
"""
Ready-made experiment configs reproducing the published simulations:
regret on random 15-arm instances, the 2-D polytope run and its safe-set
snapshots.
"""

from config import (
    DEFAULT_BASE_SEED,
    DEFAULT_GRID_RESOLUTION,
    FIG2_B,
    FIG2_C,
    FIG2_HORIZON,
    FIG2_MU,
    FIG2_REPLICATIONS,
    FIG2_SNAPSHOT_ROUND,
    FIG2_T_PRIME,
    KARMED_HORIZON,
    KARMED_REPLICATIONS,
    PRESET_NAMES,
)
from config_manager import (
    AFTER_EXPLORATION,
    GAP_FROM_INSTANCE,
    ExperimentConfig,
    InstanceSpec,
    PolicySpec,
    scale_config,
)
from validation_utils import ConfigurationError


def _fig1_karmed() -> ExperimentConfig:
    policies = (
        PolicySpec(kind="safe_lucb", name="safe-lucb-known-gap", region="ell1", sampler="warmup_arms",
                   t_prime="t_big_delta", known_gap=GAP_FROM_INSTANCE),
        PolicySpec(kind="gslucb", name="gslucb", region="ell1", sampler="warmup_arms"),
        PolicySpec(kind="safe_lucb", name="safe-lucb-t-zero", region="ell1", sampler="warmup_arms",
                   t_prime="t_zero"),
    )
    return ExperimentConfig(
        name="fig1-karmed",
        instance=InstanceSpec(kind="random_karmed"),
        policies=policies,
        horizon=KARMED_HORIZON,
        replications=KARMED_REPLICATIONS,
        base_seed=DEFAULT_BASE_SEED,
        output_dir="results/fig1-karmed",
    )


def _fig2_polytope() -> ExperimentConfig:
    policies = (
        PolicySpec(kind="safe_lucb", name="safe-lucb", region="ell1", sampler="rejection", t_prime=FIG2_T_PRIME),
        PolicySpec(kind="no_exploration", name="no-exploration", region="ell1", sampler="rejection"),
    )
    return ExperimentConfig(
        name="fig2-polytope",
        instance=InstanceSpec(kind="box", mu=list(FIG2_MU), B=[list(row) for row in FIG2_B], c=FIG2_C,
                              lower=[-1.0, -1.0], upper=[1.0, 1.0]),
        policies=policies,
        horizon=FIG2_HORIZON,
        replications=FIG2_REPLICATIONS,
        base_seed=DEFAULT_BASE_SEED,
        output_dir="results/fig2-polytope",
        grid_resolution=DEFAULT_GRID_RESOLUTION,
    )


def _fig3_safesets() -> ExperimentConfig:
    base = _fig2_polytope()
    return base._replace(
        name="fig3-safesets",
        output_dir="results/fig3-safesets",
        snapshot_rounds=(AFTER_EXPLORATION, FIG2_SNAPSHOT_ROUND),
    )


_BUILDERS = {
    "fig1-karmed": _fig1_karmed,
    "fig2-polytope": _fig2_polytope,
    "fig3-safesets": _fig3_safesets,
}


def preset(name: str, scale: int = 1) -> ExperimentConfig:
    """Config for a named published experiment, optionally at desk scale"""
    if name not in _BUILDERS:
        raise ConfigurationError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    return scale_config(_BUILDERS[name](), scale)
