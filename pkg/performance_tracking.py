# --- Performance Tracking Module ---
"""
Per-run regret records, cross-replication aggregation, CSV/JSON emission
and the plain-text run summary report
"""

import json
import math
from typing import Any, Dict, List, NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from config import AGGREGATE_CSV_COLUMNS, CSV_SIGNIFICANT_DIGITS, RUN_CSV_COLUMNS
from logger_utils import logger

FLOAT_FORMAT = f"%.{CSV_SIGNIFICANT_DIGITS}g"


def records_frame(diagnostics: Sequence[Any]) -> pd.DataFrame:
    """RunRecord table from the per-round diagnostics of one run.

    Besides the published CSV columns the frame keeps the raw action and the
    bound-check columns (ofu, covered, beta, x_norm, fallback, gap_lower_bound).
    """
    if not diagnostics:
        return pd.DataFrame(columns=RUN_CSV_COLUMNS)
    rounds = np.array([d.round for d in diagnostics], dtype=np.int64)
    regret = np.array([d.regret for d in diagnostics], dtype=float)
    cum_regret = np.cumsum(regret)
    frame = pd.DataFrame({
        "round": rounds,
        "x": [np.asarray(d.action, dtype=float) for d in diagnostics],
        "loss": [d.loss for d in diagnostics],
        "regret": regret,
        "cum_regret": cum_regret,
        "per_step_regret": cum_regret / rounds,
        "term1": [d.term1 for d in diagnostics],
        "term2": [d.term2 for d in diagnostics],
        "alpha_t": [d.alpha_t for d in diagnostics],
        "safe": [bool(d.safe) for d in diagnostics],
        "phase": [d.phase for d in diagnostics],
        "ofu": [bool(d.ofu) for d in diagnostics],
        "covered": [bool(d.covered) for d in diagnostics],
        "beta": [d.beta for d in diagnostics],
        "x_norm": [d.x_norm for d in diagnostics],
        "fallback": [bool(d.fallback) for d in diagnostics],
        "gap_lower_bound": [np.nan if d.gap_lower_bound is None else d.gap_lower_bound for d in diagnostics],
        "gap_covered": [d.gap_covered for d in diagnostics],
    })
    return frame


def violation_count(frame: pd.DataFrame) -> int:
    """Rounds whose action broke the true constraint"""
    if frame.empty:
        return 0
    return int((~frame["safe"].astype(bool)).sum())


def aggregate_runs(frames: Sequence[pd.DataFrame], column: str = "per_step_regret") -> pd.DataFrame:
    """Per-round mean, sample std (0 for a single run) and count across replications"""
    frames = [f for f in frames if not f.empty]
    if not frames:
        return pd.DataFrame(columns=AGGREGATE_CSV_COLUMNS)
    length = min(len(f) for f in frames)
    values = np.vstack([f[column].to_numpy(dtype=float)[:length] for f in frames])
    n = values.shape[0]
    mean = values.mean(axis=0)
    std = values.std(axis=0, ddof=1) if n > 1 else np.zeros(length)
    return pd.DataFrame({
        "round": frames[0]["round"].to_numpy()[:length],
        "mean": mean,
        "std": std,
        "n": np.full(length, n, dtype=np.int64),
    })


def _format_action(x: np.ndarray) -> str:
    return ";".join(FLOAT_FORMAT % float(v) for v in np.atleast_1d(x))


def emit_csv(frame: pd.DataFrame, path: str, columns: Optional[List[str]] = None) -> str:
    """Write a run or aggregate table with a fixed column order and 12 significant digits"""
    if columns is None:
        columns = AGGREGATE_CSV_COLUMNS if "mean" in frame.columns else RUN_CSV_COLUMNS
    out = frame.reindex(columns=columns).copy() if not frame.empty else pd.DataFrame(columns=columns)
    if "x" in out.columns and not out.empty:
        out["x"] = [_format_action(x) for x in out["x"]]
    if "safe" in out.columns and not out.empty:
        out["safe"] = out["safe"].map(lambda v: "true" if v else "false")
    try:
        out.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    except OSError as e:
        raise OSError(f"cannot write CSV {path}: {str(e)}") from e
    logger(f"📝 CSV written: {path}", level="DEBUG")
    return path


def read_run_csv(path: str) -> pd.DataFrame:
    """Parse a per-run CSV back into a frame (x as float vectors)"""
    frame = pd.read_csv(path)
    if "x" in frame.columns:
        frame["x"] = [np.array([float(v) for v in str(s).split(";")]) for s in frame["x"]]
    if "safe" in frame.columns:
        frame["safe"] = frame["safe"].astype(str).str.lower() == "true"
    return frame


def _json_default(value: Any):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def write_metadata(metadata: Dict[str, Any], path: str) -> str:
    """Per-run metadata as sorted JSON"""
    try:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(metadata, f, indent=2, sort_keys=True, default=_json_default)
            f.write("\n")
    except OSError as e:
        raise OSError(f"cannot write metadata {path}: {str(e)}") from e
    return path


class PolicySummary(NamedTuple):
    policy: str
    runs: int
    faults: int
    final_mean_per_step_regret: float
    final_std_per_step_regret: float
    violation_rounds: int
    violating_runs: int
    t_prime_min: Optional[int]
    t_prime_max: Optional[int]
    fallback_rounds: int
    covered_runs: int
    coverage_threshold: int
    mean_regret_envelope: Optional[float]


def coverage_threshold(runs: int, delta: float, level: float = 0.01) -> int:
    """Smallest covered-run count still consistent with per-run coverage ≥ 1−δ at the given test level"""
    if runs <= 0:
        return 0
    return int(stats.binom.ppf(level, runs, 1.0 - delta))


def summarize_policy(name: str, frames: Sequence[pd.DataFrame], metadata: Sequence[Dict[str, Any]],
                     faults: int, delta: float) -> PolicySummary:
    aggregate = aggregate_runs(frames)
    violations = [violation_count(f) for f in frames]
    t_primes = [m["t_prime_realized"] for m in metadata if m.get("t_prime_realized") is not None]
    envelopes = [m["regret_envelope"] for m in metadata if m.get("regret_envelope") is not None]
    covered = sum(1 for m in metadata if m.get("covered_every_ofu_round"))
    return PolicySummary(
        policy=name,
        runs=len(frames),
        faults=faults,
        final_mean_per_step_regret=float(aggregate["mean"].iloc[-1]) if len(aggregate) else math.nan,
        final_std_per_step_regret=float(aggregate["std"].iloc[-1]) if len(aggregate) else math.nan,
        violation_rounds=int(sum(violations)),
        violating_runs=int(sum(1 for v in violations if v > 0)),
        t_prime_min=min(t_primes) if t_primes else None,
        t_prime_max=max(t_primes) if t_primes else None,
        fallback_rounds=int(sum(m.get("fallback_rounds", 0) for m in metadata)),
        covered_runs=covered,
        coverage_threshold=coverage_threshold(len(metadata), delta),
        mean_regret_envelope=float(np.mean(envelopes)) if envelopes else None,
    )


def generate_run_report(name: str, summaries: Sequence[PolicySummary], horizon: int, path: Optional[str] = None) -> str:
    """Plain-text summary of an experiment; written to path when given"""
    report = []
    report.append("=" * 60)
    report.append(f"📊 SAFE BANDIT RUN REPORT: {name}")
    report.append("=" * 60)
    report.append(f"Horizon: {horizon}")
    report.append("")

    for s in summaries:
        report.append(f"🎯 {s.policy}")
        report.append("-" * 30)
        report.append(f"Runs: {s.runs} (faults: {s.faults})")
        report.append(f"Final per-step regret: {s.final_mean_per_step_regret:.6g} ± {s.final_std_per_step_regret:.6g}")
        if s.mean_regret_envelope is not None:
            report.append(f"Mean regret envelope: {s.mean_regret_envelope:.6g}")
        status = "NONE ✅" if s.violation_rounds == 0 else f"{s.violation_rounds} rounds in {s.violating_runs} runs ❌"
        report.append(f"Constraint violations: {status}")
        if s.t_prime_min is not None:
            report.append(f"Exploration rounds T′: {s.t_prime_min}..{s.t_prime_max}")
        report.append(f"Fallback rounds: {s.fallback_rounds}")
        verdict = "✅" if s.covered_runs >= s.coverage_threshold else "⚠️"
        report.append(f"Runs with μ covered every OFU round: {s.covered_runs}/{s.runs} "
                      f"(binomial threshold {s.coverage_threshold}) {verdict}")
        report.append("")

    report.append("=" * 60)
    report_text = "\n".join(report) + "\n"

    if path:
        try:
            with open(path, "w", encoding="utf-8") as f:
                f.write(report_text)
            logger(f"📊 Run report saved: {path}")
        except OSError as e:
            logger(f"⚠️ Could not save report: {str(e)}", level="WARNING")
    return report_text
