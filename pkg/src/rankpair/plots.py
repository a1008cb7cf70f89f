"""Figure rendering for experiment reports.

Every report path that writes delimited output also renders PNG figures
next to it (disable with ``--no-figures`` on the CLI). The CSV stays the
canonical, byte-stable artifact; figures are a readable view of the same
numbers. The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import NMS_IOU_THRESH, NMS_SCORE_THRESH

DPI = 120


def render_run_figures(trajectory, out_dir) -> list[Path]:
    """Loss/gradient and ranking-quality curves for one training run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(trajectory.step, trajectory.loss, color="tab:blue", label="loss")
    ax.set_xlabel("step")
    ax.set_ylabel("loss", color="tab:blue")
    ax.tick_params(axis="y", labelcolor="tab:blue")
    twin = ax.twinx()
    twin.plot(trajectory.step, trajectory.grad_norm, color="tab:red", alpha=0.7, label="gradient norm")
    twin.set_ylabel("gradient norm", color="tab:red")
    twin.tick_params(axis="y", labelcolor="tab:red")
    ax.set_title("Training loss and gradient norm")
    fig.tight_layout()
    path = out / "loss_curve.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(7, 4.2))
    ax.plot(trajectory.step, trajectory.ap, label="AP")
    ax.plot(trajectory.step, trajectory.pcc, label="PCC")
    ax.plot(trajectory.step, trajectory.scc, label="SCC")
    ax.plot(trajectory.step, trajectory.kcc, label="KCC")
    ax.set_xlabel("step")
    ax.set_ylabel("metric")
    ax.set_ylim(-1.05, 1.05)
    ax.legend(loc="lower right")
    ax.set_title("Ranking quality over training")
    fig.tight_layout()
    path = out / "ranking_quality.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    paths.append(path)
    return paths


def render_sweep_figure(rows, param: str, out_dir) -> Path:
    """Final metrics as a function of the swept parameter."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x = np.arange(len(rows))
    labels = [str(row["value"]) for row in rows]
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for key in ("ap", "coco_ap", "pcc", "scc", "kcc"):
        ax.plot(x, [row[key] for row in rows], marker="o", label=key)
    ax.set_xticks(x)
    ax.set_xticklabels(labels)
    ax.set_xlabel(param)
    ax.set_ylabel("final metric")
    ax.legend(loc="best")
    ax.set_title(f"Sweep over {param}")
    fig.tight_layout()
    path = out / "sweep.png"
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return path


def render_nms_figure(boxes, scores, kept, out_path) -> Path:
    """Boxes before/after suppression: kept solid, suppressed dashed."""
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
    kept = set(int(k) for k in kept)
    fig, ax = plt.subplots(figsize=(5, 5))
    for i, (box, score) in enumerate(zip(boxes, scores)):
        keep = i in kept
        rect = plt.Rectangle(
            (box[0], box[1]),
            box[2] - box[0],
            box[3] - box[1],
            fill=False,
            linewidth=2 if keep else 1.2,
            linestyle="-" if keep else "--",
            edgecolor="tab:green" if keep else "tab:gray",
        )
        ax.add_patch(rect)
        ax.annotate(
            f"{i}: {score:.2f}" + (" kept" if keep else ""),
            (box[0], box[3]),
            fontsize=8,
            va="bottom",
        )
    lo = min(boxes[:, 0].min(), boxes[:, 1].min()) - 0.2
    hi = max(boxes[:, 2].max(), boxes[:, 3].max()) + 0.2
    ax.set_xlim(lo, hi)
    ax.set_ylim(lo, hi)
    ax.set_aspect("equal")
    ax.set_title(
        f"NMS demo (score >= {NMS_SCORE_THRESH}, suppress IoU > {NMS_IOU_THRESH})"
    )
    fig.tight_layout()
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_path, dpi=DPI)
    plt.close(fig)
    return out_path
