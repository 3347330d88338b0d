"""Trajectory figures: three orthographic projections side by side.

Renders any subset of three layers (sampled target points, ground
truth, prediction) onto XY / XZ / YZ panes with metric axes and a
legend, and writes an SVG. Headless backend; no display needed.
"""

from __future__ import annotations

from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import EmptyInput
from .trajectory import Trajectory

_PROJECTIONS = (("x", "y", 0, 1), ("x", "z", 0, 2), ("y", "z", 1, 2))

SAMPLE_COLOR = "#8a8a8a"
GT_COLOR = "#2a9d2a"
PRED_COLOR = "#d9661a"


def _as_xyz(arr) -> np.ndarray:
    xyz = getattr(arr, "xyz", arr)
    return np.asarray(xyz, dtype=np.float64).reshape(-1, 3)


def plot_projections(path, pred: Optional[Trajectory] = None,
                     gt: Optional[Trajectory] = None,
                     samples=None, title: Optional[str] = None) -> None:
    """Write an SVG of the given layers; at least one must be non-empty.

    Args:
        path: output file; the suffix picks the format, .svg intended.
        pred: predicted trajectory (or a list of them), drawn as lines.
        gt: ground-truth trajectory, drawn as a line.
        samples: (n, 3) array or PointSet of raw target returns,
            drawn as small dots.

    Raises:
        EmptyInput: nothing to draw.
    """
    preds = [] if pred is None else \
        ([pred] if isinstance(pred, Trajectory) else list(pred))
    layers = []
    if samples is not None and len(_as_xyz(samples)):
        layers.append(("samples", _as_xyz(samples)))
    if gt is not None and len(gt.t):
        layers.append(("ground truth", _as_xyz(gt)))
    for i, p in enumerate(preds):
        if len(p.t):
            name = "prediction" if len(preds) == 1 else f"prediction {i + 1}"
            layers.append((name, _as_xyz(p)))
    if not layers:
        raise EmptyInput("no non-empty layer to plot")

    pred_cycle = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.5))
    for ax, (h_name, v_name, h, v) in zip(axes, _PROJECTIONS):
        n_pred = 0
        for name, xyz in layers:
            if name == "samples":
                ax.scatter(xyz[:, h], xyz[:, v], s=4, c=SAMPLE_COLOR,
                           label=name, rasterized=False, linewidths=0)
            elif name == "ground truth":
                ax.plot(xyz[:, h], xyz[:, v], color=GT_COLOR, lw=1.6, label=name)
            else:
                color = PRED_COLOR if n_pred == 0 else pred_cycle[n_pred % len(pred_cycle)]
                ax.plot(xyz[:, h], xyz[:, v], color=color, lw=1.2,
                        ls="--", label=name)
                n_pred += 1
        ax.set_xlabel(f"{h_name} [m]")
        ax.set_ylabel(f"{v_name} [m]")
        ax.set_title(f"{h_name.upper()}{v_name.upper()} projection")
        ax.set_aspect("equal", adjustable="datalim")
        ax.grid(True, lw=0.3, alpha=0.5)
    handles, names = axes[0].get_legend_handles_labels()
    fig.legend(handles, names, loc="lower center", ncol=len(names), frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout(rect=(0, 0.06, 1, 1))
    fig.savefig(path)
    plt.close(fig)
