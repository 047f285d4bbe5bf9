# --- Plotting Module ---
"""
SVG rendering: per-step regret curves with a ±1 std band and 2-D safe-set
rasters. Output bytes depend only on the data.
"""

from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use("agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from config import PLOT_MAX_POINTS  # noqa: E402
from logger_utils import logger  # noqa: E402
from snapshots import SafeSetSnapshot, snapshot_from_frame  # noqa: E402
from validation_utils import ConfigurationError  # noqa: E402

plt.rcParams["svg.hashsalt"] = "safeban"
plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["font.size"] = 9
plt.rcParams["lines.linewidth"] = 1.0
plt.rcParams["axes.linewidth"] = 0.75

# Layer colors, drawn in order: D₀, true safe set, estimates by snapshot order
LAYER_COLORS = {
    "action_set": (0.0, 0.0, 0.0),
    "truth": (0.2, 0.4, 0.9),
    "warmup": (0.95, 0.75, 0.2),
}
ESTIMATE_COLORS = [(0.85, 0.15, 0.15), (0.2, 0.7, 0.3), (0.6, 0.3, 0.7), (0.1, 0.6, 0.7)]


def decimate_indices(n: int, max_points: int = PLOT_MAX_POINTS) -> np.ndarray:
    """Uniformly spaced row indices, first and last kept, at most max_points"""
    if n <= max_points:
        return np.arange(n)
    return np.unique(np.linspace(0, n - 1, max_points).round().astype(np.int64))


def _save_svg(fig, path: str) -> None:
    try:
        fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    except OSError as e:
        raise OSError(f"cannot write SVG {path}: {str(e)}") from e
    finally:
        plt.close(fig)
    logger(f"📝 SVG written: {path}", level="DEBUG")


def emit_regret_svg(aggregates: Dict[str, pd.DataFrame], path: str, title: str = "",
                    envelopes: Optional[Dict[str, Optional[float]]] = None) -> Dict[str, int]:
    """Mean per-step regret per policy with a shaded ±1 std band and dotted bound/T lines.

    Returns the plotted point count per policy.
    """
    if not aggregates or all(len(a) == 0 for a in aggregates.values()):
        raise ConfigurationError("nothing to plot: every aggregate is empty")
    fig, ax = plt.subplots(figsize=(5, 3.5))
    counts = {}
    colors = {}
    for name, frame in aggregates.items():
        if len(frame) == 0:
            continue
        keep = decimate_indices(len(frame))
        rounds = frame["round"].to_numpy()[keep]
        mean = frame["mean"].to_numpy(dtype=float)[keep]
        std = frame["std"].to_numpy(dtype=float)[keep]
        line, = ax.plot(rounds, mean, label=name)
        colors[name] = line.get_color()
        ax.fill_between(rounds, mean - std, mean + std, alpha=0.25, color=line.get_color(), linewidth=0)
        counts[name] = int(keep.size)
    if envelopes:
        # envelopes above the data range stay off-axis; the legend still lists them
        limits = ax.get_ylim()
        for name, value in envelopes.items():
            if name in colors and value is not None and np.isfinite(value):
                ax.axhline(value, linestyle=":", linewidth=0.75, color=colors[name],
                           label=f"{name} bound/T = {value:.3g}")
        ax.set_ylim(limits)
    ax.set_xlabel("round t")
    ax.set_ylabel("per-step regret")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", frameon=False)
    ax.grid(True, alpha=0.3)
    _save_svg(fig, path)
    return counts


def safeset_raster(snapshots: Sequence[SafeSetSnapshot]) -> np.ndarray:
    """RGB image (res x res x 3) layering D₀, the true safe set, the warm-up set and each estimate"""
    if not snapshots:
        raise ConfigurationError("nothing to plot: no snapshots")
    res_y, res_x = snapshots[0].truth.shape
    image = np.empty((res_y, res_x, 3))
    image[:] = LAYER_COLORS["action_set"]
    image[snapshots[0].truth] = LAYER_COLORS["truth"]
    # estimates shrink over rounds; draw the latest first so earlier ones stay visible
    for k in reversed(range(len(snapshots))):
        image[snapshots[k].estimated] = ESTIMATE_COLORS[k % len(ESTIMATE_COLORS)]
    image[snapshots[0].warmup & ~np.any([s.estimated for s in snapshots], axis=0)] = LAYER_COLORS["warmup"]
    return image


def emit_safeset_svg(snapshots: Sequence[SafeSetSnapshot], path: str, title: str = "") -> np.ndarray:
    """Safe-set raster as SVG; returns the raster drawn"""
    image = safeset_raster(snapshots)
    first = snapshots[0]
    extent = [first.axis_x[0], first.axis_x[-1], first.axis_y[0], first.axis_y[-1]]
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.imshow(image, origin="lower", extent=extent, interpolation="nearest")
    for k, snapshot in enumerate(snapshots):
        if np.all(np.isfinite(snapshot.x_star)):
            ax.plot(*snapshot.x_star, marker="*", color="white", markersize=8)
        ax.plot([], [], "s", color=ESTIMATE_COLORS[k % len(ESTIMATE_COLORS)], label=f"estimate t={snapshot.round}")
    ax.plot([], [], "s", color=LAYER_COLORS["truth"], label="true safe set")
    ax.plot([], [], "s", color=LAYER_COLORS["warmup"], label="warm-up set")
    ax.set_xlabel("x₁")
    ax.set_ylabel("x₂")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=7, frameon=True)
    _save_svg(fig, path)
    return image


def plot_from_csv(in_path: str, out_path: str, kind: str = "regret") -> None:
    """Render an emitted CSV: aggregate/run tables as regret curves, snapshot tables as rasters"""
    try:
        frame = pd.read_csv(in_path)
    except FileNotFoundError:
        raise ConfigurationError(f"input CSV not found: {in_path}")
    if kind == "regret":
        if "mean" not in frame.columns:
            if "per_step_regret" not in frame.columns:
                raise ConfigurationError(f"{in_path}: not a run or aggregate CSV")
            frame = pd.DataFrame({"round": frame["round"], "mean": frame["per_step_regret"], "std": 0.0})
        emit_regret_svg({"regret": frame}, out_path)
    elif kind == "safeset":
        if not {"x1", "x2", "estimated"} <= set(frame.columns):
            raise ConfigurationError(f"{in_path}: not a safe-set snapshot CSV")
        snapshots = [snapshot_from_frame(group) for _, group in frame.groupby("round", sort=True)]
        emit_safeset_svg(snapshots, out_path)
    else:
        raise ConfigurationError(f"plot kind must be 'regret' or 'safeset', got {kind!r}")
    logger(f"📝 Plot written: {out_path}")
