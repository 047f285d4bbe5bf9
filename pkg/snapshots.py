# --- Safe-Set Snapshot Module ---
"""
Rasterized views of the safe sets of a 2-D instance at a given round:
the estimated safe set of a policy, the true safe set and the warm-up set.
"""

from typing import NamedTuple, Optional

import numpy as np
import pandas as pd

from environment import ProblemInstance, in_warmup_set, optimal_safe_action
from safe_opt import safe_mask
from validation_utils import UnsupportedDimensionError


class SafeSetSnapshot(NamedTuple):
    round: int
    policy: str
    axis_x: np.ndarray
    axis_y: np.ndarray
    estimated: np.ndarray   # res x res, [i, j] ↔ (axis_x[j], axis_y[i])
    truth: np.ndarray
    warmup: np.ndarray
    x_star: np.ndarray
    x_star_estimated_safe: bool

    @property
    def resolution(self) -> int:
        return self.axis_x.size


def _plot_bounds(inst: ProblemInstance):
    action_set = inst.action_set
    if action_set.kind == "box":
        return action_set.lower, action_set.upper
    if action_set.kind == "finite":
        corners = action_set.vectors
    else:
        corners = np.array([[-action_set.radius] * 2, [action_set.radius] * 2])
    extent = float(np.max(np.abs(corners)))
    return np.array([-extent, -extent]), np.array([extent, extent])


def safe_set_snapshot(policy, inst: ProblemInstance, grid_resolution: int,
                      t: Optional[int] = None, x_star: Optional[np.ndarray] = None) -> SafeSetSnapshot:
    """Membership grids over D₀ for the region the policy holds at the start of round t"""
    if inst.dim != 2:
        raise UnsupportedDimensionError(f"safe-set snapshots are 2-D only, instance has d = {inst.dim}")
    t = policy.state.round + 1 if t is None else int(t)
    lower, upper = _plot_bounds(inst)
    axis_x = np.linspace(lower[0], upper[0], grid_resolution)
    axis_y = np.linspace(lower[1], upper[1], grid_resolution)
    mesh_x, mesh_y = np.meshgrid(axis_x, axis_y)
    points = np.stack([mesh_x.ravel(), mesh_y.ravel()], axis=1)

    region = policy.current_region(t)
    shape = (grid_resolution, grid_resolution)
    estimated = safe_mask(region, inst.B, inst.c, points).reshape(shape)
    truth = ((points @ (inst.B.T @ inst.mu)) <= inst.c).reshape(shape)
    warmup = in_warmup_set(inst.B, inst.c, inst.S, points).reshape(shape)

    if x_star is None:
        x_star = optimal_safe_action(inst)[0] if inst.action_set.kind != "contextual" else np.zeros(2)
    star_safe = bool(safe_mask(region, inst.B, inst.c, np.asarray(x_star, dtype=float))[0])
    return SafeSetSnapshot(round=t, policy=policy.name, axis_x=axis_x, axis_y=axis_y,
                           estimated=estimated, truth=truth, warmup=warmup,
                           x_star=np.asarray(x_star, dtype=float), x_star_estimated_safe=star_safe)


def snapshot_frame(snapshot: SafeSetSnapshot) -> pd.DataFrame:
    """Long-format table of a snapshot, one row per grid cell"""
    mesh_x, mesh_y = np.meshgrid(snapshot.axis_x, snapshot.axis_y)
    return pd.DataFrame({
        "round": snapshot.round,
        "x1": mesh_x.ravel(),
        "x2": mesh_y.ravel(),
        "truth": snapshot.truth.ravel(),
        "warmup": snapshot.warmup.ravel(),
        "estimated": snapshot.estimated.ravel(),
    })


def snapshot_from_frame(frame: pd.DataFrame, policy: str = "") -> SafeSetSnapshot:
    """Rebuild a snapshot from snapshot_frame output"""
    axis_x = np.unique(frame["x1"].to_numpy())
    axis_y = np.unique(frame["x2"].to_numpy())
    shape = (axis_y.size, axis_x.size)
    return SafeSetSnapshot(
        round=int(frame["round"].iloc[0]) if len(frame) else 0,
        policy=policy,
        axis_x=axis_x,
        axis_y=axis_y,
        estimated=frame["estimated"].to_numpy(dtype=bool).reshape(shape),
        truth=frame["truth"].to_numpy(dtype=bool).reshape(shape),
        warmup=frame["warmup"].to_numpy(dtype=bool).reshape(shape),
        x_star=np.full(2, np.nan),
        x_star_estimated_safe=False,
    )
