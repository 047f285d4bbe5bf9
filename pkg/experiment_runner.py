# --- Experiment Runner Module ---
"""
Seeded replication runner: builds instances and policies from a config,
simulates every (policy, replication) pair, isolates per-run faults and
writes CSV, JSON, SVG and report outputs in a fixed order.
"""

import multiprocessing
import os
from typing import Any, Dict, List, NamedTuple, Optional, Tuple

import numpy as np
import pandas as pd

from config import FIG2_B, FIG2_C, FIG2_MU
from config_manager import AFTER_EXPLORATION, GAP_FROM_INSTANCE, ExperimentConfig, InstanceSpec, save_config
from environment import (
    Contextual,
    Environment,
    ProblemInstance,
    make_box,
    make_finite_arms,
    make_instance,
    sample_karmed_instance,
)
from logger_utils import ensure_output_directory, logger
from performance_tracking import (
    aggregate_runs,
    emit_csv,
    generate_run_report,
    records_frame,
    summarize_policy,
    violation_count,
    write_metadata,
)
from plotting import emit_regret_svg, emit_safeset_svg
from policies import make_policy, regret_bound_known_gap, regret_bound_worst_case
from random_streams import instance_stream, replication_stream
from snapshots import SafeSetSnapshot, safe_set_snapshot, snapshot_frame
from validation_utils import (
    ConfigurationError,
    validate_matrix,
    validate_vector,
)


class RunResult(NamedTuple):
    policy_index: int
    replication: int
    records: pd.DataFrame
    metadata: Dict[str, Any]
    snapshots: List[SafeSetSnapshot]
    fault: Optional[str] = None


class ExperimentResult(NamedTuple):
    runs: List[RunResult]                    # ordered by (policy, replication)
    aggregates: Dict[str, pd.DataFrame]      # policy name → per-step regret stats
    violations: Dict[str, int]               # policy name → rounds with unsafe actions
    report: str
    output_dir: Optional[str]
    envelopes: Optional[Dict[str, Optional[float]]] = None   # policy name → mean regret bound / T

    def runs_for(self, policy_name: str) -> List[RunResult]:
        return [r for r in self.runs if r.metadata.get("policy") == policy_name]


# ---------------------------------------------------------------------------
# Instances
# ---------------------------------------------------------------------------

def build_instance(spec: InstanceSpec, base_seed: int, replication: int, grid_resolution: int) -> ProblemInstance:
    """Instance for one replication; random recipes draw from the replication's instance stream"""
    if spec.kind == "random_karmed":
        inst = sample_karmed_instance(instance_stream(base_seed, replication), R=spec.R,
                                      dim=spec.dim, K=spec.K, n_warmup=spec.n_warmup)
        return inst._replace(noise=spec.noise)
    if spec.kind == "fig2":
        box = make_box([-1.0, -1.0], [1.0, 1.0], grid_resolution)
        return make_instance(FIG2_MU, FIG2_B, FIG2_C, box, R=spec.R, noise=spec.noise)

    mu = validate_vector(spec.mu, "instance.mu")
    B = validate_matrix(spec.B, "instance.B", mu.size)
    if spec.kind == "finite":
        arms = np.asarray(spec.arms, dtype=float)
        if arms.ndim != 2 or arms.shape[1] != mu.size:
            raise ConfigurationError(f"instance.arms: expected a list of {mu.size}-vectors")
        action_set = make_finite_arms(arms)
    elif spec.kind == "box":
        action_set = make_box(validate_vector(spec.lower, "instance.lower", mu.size),
                              validate_vector(spec.upper, "instance.upper", mu.size), grid_resolution)
    else:
        action_set = Contextual(K=spec.K, n_warmup=spec.n_warmup, seed=spec.seed,
                                radius=spec.radius, dim=mu.size)
    return make_instance(mu, B, spec.c, action_set, R=spec.R, S=spec.S, L=spec.L, noise=spec.noise)


def validate_experiment(cfg: ExperimentConfig) -> None:
    """Surface configuration errors before any simulation starts"""
    inst = build_instance(cfg.instance, cfg.base_seed, 0, cfg.grid_resolution)
    if cfg.snapshot_rounds and inst.dim != 2:
        raise ConfigurationError(f"snapshot_rounds need a 2-D instance, got d = {inst.dim}")
    env = Environment(inst)
    for index, spec in enumerate(cfg.policies):
        # constructing the policy checks sampler, region and T′ rule against the instance
        _build_policy(cfg, spec, env, replication_stream(cfg.base_seed, index, 0))


def _build_policy(cfg: ExperimentConfig, spec, env: Environment, rng):
    known_gap = spec.known_gap
    if known_gap == GAP_FROM_INSTANCE:
        known_gap = env.safety_gap()
    return make_policy(spec.kind, spec.name, env.public, cfg.horizon, rng, region=spec.region,
                       sampler=spec.sampler, epsilon=spec.epsilon, t_prime=spec.t_prime,
                       known_gap=known_gap, delta=cfg.delta, lam=cfg.lam, gslucb_every=cfg.gslucb_every)


# ---------------------------------------------------------------------------
# One run
# ---------------------------------------------------------------------------

def run_single(cfg: ExperimentConfig, policy_index: int, replication: int) -> RunResult:
    """Simulate one (policy, replication) pair; faults are caught and recorded"""
    spec = cfg.policies[policy_index]
    seed_key = [cfg.base_seed, "run", policy_index, replication]
    metadata: Dict[str, Any] = {"policy": spec.name, "replication": replication, "seed_key": seed_key,
                                "base_seed": cfg.base_seed}
    diagnostics = []
    snapshots: List[SafeSetSnapshot] = []
    try:
        inst = build_instance(cfg.instance, cfg.base_seed, replication, cfg.grid_resolution)
        env = Environment(inst)
        policy = _build_policy(cfg, spec, env, replication_stream(cfg.base_seed, policy_index, replication))
        fixed_rounds = {r for r in cfg.snapshot_rounds if r != AFTER_EXPLORATION}
        want_after_exploration = AFTER_EXPLORATION in cfg.snapshot_rounds
        x_star = None if inst.action_set.kind == "contextual" else env.truth_at(1).x_star

        for t in range(1, cfg.horizon + 1):
            if want_after_exploration and not policy.explores_at(t):
                snapshots.append(safe_set_snapshot(policy, inst, cfg.grid_resolution, t, x_star))
                want_after_exploration = False
            if t in fixed_rounds:
                snapshots.append(safe_set_snapshot(policy, inst, cfg.grid_resolution, t, x_star))
            diagnostics.append(policy.step(env))

        metadata.update(policy.metadata())
        metadata["horizon"] = cfg.horizon
        metadata["instance"] = {"kind": cfg.instance.kind, "dim": inst.dim, "c": inst.c, "S": inst.S,
                                "L": inst.L, "R": inst.R, "noise": inst.noise}
        if inst.action_set.kind != "contextual":
            metadata["safety_gap"] = env.safety_gap()
        t_prime = min(policy.realized_t_prime, cfg.horizon)
        params = policy.params
        # λ_- only enters through λ_-·T′, which vanishes for policies that never explore
        lm = params.lambda_minus if params.lambda_minus is not None else 0.0
        metadata["regret_envelope"] = regret_bound_worst_case(
            cfg.horizon, t_prime, params.beta_T, inst.dim, inst.L, lm, params.lam, params.B_norm, inst.c)
        metadata["regret_envelope_known_gap"] = regret_bound_known_gap(
            cfg.horizon, t_prime, params.beta_T, inst.dim, inst.L, lm, params.lam)
        metadata["snapshots"] = [{"round": s.round, "x_star_estimated_safe": s.x_star_estimated_safe}
                                 for s in snapshots]
        records = records_frame(diagnostics)
        metadata["violation_rounds"] = violation_count(records)
        return RunResult(policy_index, replication, records, metadata, snapshots)
    except Exception as e:
        logger(f"❌ Run {spec.name} #{replication} aborted at round {len(diagnostics) + 1}: {str(e)}",
               level="ERROR")
        metadata["fault"] = f"{type(e).__name__}: {str(e)}"
        return RunResult(policy_index, replication, records_frame(diagnostics), metadata, snapshots,
                         fault=metadata["fault"])


def per_step_envelope(spec, metadata: List[Dict[str, Any]], horizon: int) -> Optional[float]:
    """Mean regret envelope over completed runs, divided by T to match the per-step curves.

    Policies told the gap get the known-gap envelope; the oracle gets none.
    """
    if spec.kind == "oracle" or not metadata or horizon < 1:
        return None
    key = "regret_envelope_known_gap" if spec.known_gap is not None else "regret_envelope"
    values = [m[key] for m in metadata if m.get(key) is not None]
    if not values:
        return None
    return float(sum(values) / len(values)) / horizon


def _run_job(job: Tuple[ExperimentConfig, int, int]) -> RunResult:
    cfg, policy_index, replication = job
    return run_single(cfg, policy_index, replication)


# ---------------------------------------------------------------------------
# Experiment
# ---------------------------------------------------------------------------

def _write_outputs(cfg: ExperimentConfig, runs: List[RunResult], aggregates: Dict[str, pd.DataFrame],
                   envelopes: Dict[str, Optional[float]]) -> None:
    out = cfg.output_dir
    if not ensure_output_directory(out):
        raise OSError(f"cannot create output directory {out}")
    save_config(cfg, os.path.join(out, "config.json"))
    for run in runs:
        name = cfg.policies[run.policy_index].name
        policy_dir = os.path.join(out, name)
        ensure_output_directory(policy_dir)
        stem = os.path.join(policy_dir, f"run_{run.replication:03d}")
        emit_csv(run.records, f"{stem}.csv")
        write_metadata(run.metadata, f"{stem}_meta.json")
        if run.snapshots:
            frame = pd.concat([snapshot_frame(s) for s in run.snapshots], ignore_index=True)
            emit_csv(frame, f"{stem}_snapshots.csv", columns=list(frame.columns))
            if run.replication == 0:
                emit_safeset_svg(run.snapshots, f"{stem}_safeset.svg", title=name)
    for name, aggregate in aggregates.items():
        emit_csv(aggregate, os.path.join(out, name, "aggregate.csv"))
    if any(len(a) for a in aggregates.values()):
        emit_regret_svg(aggregates, os.path.join(out, "regret.svg"), title=cfg.name, envelopes=envelopes)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every (policy, replication) pair and aggregate in a fixed order"""
    validate_experiment(cfg)
    jobs = [(cfg, p, r) for p in range(len(cfg.policies)) for r in range(cfg.replications)]
    logger(f"🚀 {cfg.name}: {len(cfg.policies)} policies x {cfg.replications} replications, "
           f"T = {cfg.horizon}, {cfg.threads} worker(s)")

    if cfg.threads > 1 and len(jobs) > 1:
        with multiprocessing.Pool(processes=min(cfg.threads, len(jobs))) as pool:
            runs = pool.map(_run_job, jobs, chunksize=1)
    else:
        runs = [_run_job(job) for job in jobs]

    aggregates: Dict[str, pd.DataFrame] = {}
    violations: Dict[str, int] = {}
    envelopes: Dict[str, Optional[float]] = {}
    summaries = []
    for index, spec in enumerate(cfg.policies):
        policy_runs = [r for r in runs if r.policy_index == index]
        completed = [r for r in policy_runs if r.fault is None]
        frames = [r.records for r in completed]
        aggregates[spec.name] = aggregate_runs(frames)
        violations[spec.name] = int(sum(violation_count(f) for f in frames))
        envelopes[spec.name] = per_step_envelope(spec, [r.metadata for r in completed], cfg.horizon)
        summaries.append(summarize_policy(spec.name, frames, [r.metadata for r in completed],
                                          faults=len(policy_runs) - len(completed), delta=cfg.delta))

    report_path = None
    if write:
        _write_outputs(cfg, runs, aggregates, envelopes)
        report_path = os.path.join(cfg.output_dir, "report.txt")
    report = generate_run_report(cfg.name, summaries, cfg.horizon, report_path)

    faults = sum(1 for r in runs if r.fault is not None)
    if faults:
        logger(f"⚠️ {faults} of {len(runs)} runs aborted; see run metadata", level="WARNING")
    logger(f"✅ {cfg.name} finished: violations {violations}")
    return ExperimentResult(runs=runs, aggregates=aggregates, violations=violations, report=report,
                            output_dir=cfg.output_dir if write else None, envelopes=envelopes)
