"""Experiment plumbing: synthetic scenes, toy training, gradient checks.

A scenario drops ground-truth boxes on a unit-square canvas, surrounds each
with jittered candidate boxes (a spread of IoUs) plus rejection-sampled
disjoint background boxes, runs the configured assigner to fix roles, and
then trains the raw logit array (optionally the boxes too) by plain
gradient descent on the configured ranking loss. Trajectory metrics — AP
and the score/IoU correlations — always come from the evaluation module,
never from the loss being trained, so they stay an independent yardstick.

Everything is deterministic given the config: one seeded generator drives
geometry and logit init in a fixed draw order, training itself uses no
randomness, and report files are byte-stable across reruns.
"""

from __future__ import annotations

import json
import math
import os
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np
from scipy.special import expit

from .assign import (
    AssignerConfig,
    arps,
    assigner_config_from_dict,
    assigner_config_to_dict,
    iou_threshold_assign,
    paa_star_assign,
)
from .errors import ConfigError, DivergenceError, UndefinedMetricError
from .evaluation import (
    DEFAULT_CORRELATION_IOU_FLOOR,
    EvalReport,
    average_precision,
    correlations,
    detection_report,
)
from .geometry import giou_loss_with_grad, iou_matrix
from .rankloss import (
    DetectionInstance,
    LossConfig,
    Role,
    ape_loss,
    build_pair_plan,
    evaluate_pair_plan,
    loss_config_from_dict,
    loss_config_to_dict,
    plain_negative_sets,
)

#: Environment variable overriding the scenario seed for a CLI run.
SEED_ENV_VAR = "RANKPAIR_SEED"

#: Background boxes get this side range and must be fully disjoint from
#: every ground truth; placement gives up after this many rejections.
BACKGROUND_SIDE_RANGE = (0.05, 0.2)
BACKGROUND_MAX_ATTEMPTS = 1000

#: Finite-difference step for gradient checking.
FD_STEP = 1e-5

#: Gradient check: when both analytic and numeric norms sit below this,
#: the pair counts as exactly zero rather than a relative-error sample.
FD_ZERO_NORM = 1e-9

TRAJECTORY_COLUMNS = ("step", "loss", "grad_norm", "ap", "pcc", "scc", "kcc")


@dataclass(frozen=True)
class TrainerConfig:
    learning_rate: float = 0.5
    steps: int = 200
    loc_loss_weight: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.learning_rate) and self.learning_rate > 0.0):
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if int(self.steps) < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))
        if not (np.isfinite(self.loc_loss_weight) and self.loc_loss_weight >= 0.0):
            raise ConfigError(f"loc_loss_weight must be >= 0, got {self.loc_loss_weight}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one synthetic training run."""

    seed: int = 7
    n_gts: int = 4
    candidates_per_gt: int = 10
    n_background: int = 20
    logit_init: str = "zeros"  # "zeros" | "gaussian"
    logit_init_sigma: float = 0.0
    box_noise: float = 0.2
    loss: LossConfig = field(default_factory=LossConfig)
    assigner: AssignerConfig = field(default_factory=AssignerConfig)
    trainer: TrainerConfig = field(default_factory=TrainerConfig)
    correlation_iou_floor: float = DEFAULT_CORRELATION_IOU_FLOOR

    def __post_init__(self):
        if int(self.n_gts) < 1 or int(self.candidates_per_gt) < 1:
            raise ConfigError("n_gts and candidates_per_gt must be >= 1")
        if int(self.n_background) < 0:
            raise ConfigError("n_background must be >= 0")
        if self.logit_init not in ("zeros", "gaussian"):
            raise ConfigError(f"logit_init must be 'zeros' or 'gaussian', got {self.logit_init!r}")
        if not (np.isfinite(self.logit_init_sigma) and self.logit_init_sigma >= 0.0):
            raise ConfigError("logit_init_sigma must be >= 0")
        if not (np.isfinite(self.box_noise) and self.box_noise >= 0.0):
            raise ConfigError("box_noise must be >= 0")
        if not 0.0 <= self.correlation_iou_floor < 1.0:
            raise ConfigError("correlation_iou_floor must lie in [0, 1)")


def scenario_from_dict(obj: Mapping) -> ScenarioConfig:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"scenario config must be an object, got {type(obj).__name__}")
    allowed = {
        "seed",
        "n_gts",
        "candidates_per_gt",
        "n_background",
        "logit_init",
        "box_noise",
        "loss",
        "assigner",
        "trainer",
        "correlation_iou_floor",
    }
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown scenario config fields {sorted(unknown)}")
    init = obj.get("logit_init", "zeros")
    if init == "zeros":
        kind, sigma = "zeros", 0.0
    elif isinstance(init, Mapping) and set(init) == {"gaussian"}:
        inner = init["gaussian"]
        if not isinstance(inner, Mapping) or set(inner) - {"sigma"}:
            raise ConfigError(f"gaussian logit_init takes only a 'sigma' field, got {inner!r}")
        kind, sigma = "gaussian", float(inner.get("sigma", 1.0))
    else:
        raise ConfigError(f"logit_init must be 'zeros' or {{'gaussian': {{'sigma': s}}}}, got {init!r}")
    trainer_obj = obj.get("trainer", {})
    if not isinstance(trainer_obj, Mapping) or set(trainer_obj) - {
        "learning_rate",
        "steps",
        "loc_loss_weight",
    }:
        raise ConfigError(f"bad trainer config {trainer_obj!r}")
    trainer = TrainerConfig(
        learning_rate=float(trainer_obj.get("learning_rate", 0.5)),
        steps=int(trainer_obj.get("steps", 200)),
        loc_loss_weight=float(trainer_obj.get("loc_loss_weight", 0.0)),
    )
    try:
        return ScenarioConfig(
            seed=int(obj.get("seed", 7)),
            n_gts=int(obj.get("n_gts", 4)),
            candidates_per_gt=int(obj.get("candidates_per_gt", 10)),
            n_background=int(obj.get("n_background", 20)),
            logit_init=kind,
            logit_init_sigma=sigma,
            box_noise=float(obj.get("box_noise", 0.2)),
            loss=loss_config_from_dict(obj.get("loss", {})),
            assigner=assigner_config_from_dict(obj.get("assigner", {})),
            trainer=trainer,
            correlation_iou_floor=float(obj.get("correlation_iou_floor", DEFAULT_CORRELATION_IOU_FLOOR)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scenario config: {exc}") from exc


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    init = "zeros" if cfg.logit_init == "zeros" else {"gaussian": {"sigma": cfg.logit_init_sigma}}
    return {
        "seed": cfg.seed,
        "n_gts": cfg.n_gts,
        "candidates_per_gt": cfg.candidates_per_gt,
        "n_background": cfg.n_background,
        "logit_init": init,
        "box_noise": cfg.box_noise,
        "loss": loss_config_to_dict(cfg.loss),
        "assigner": assigner_config_to_dict(cfg.assigner),
        "trainer": {
            "learning_rate": cfg.trainer.learning_rate,
            "steps": cfg.trainer.steps,
            "loc_loss_weight": cfg.trainer.loc_loss_weight,
        },
        "correlation_iou_floor": cfg.correlation_iou_floor,
    }


def _sample_gt_boxes(rng: np.random.Generator, n: int) -> np.ndarray:
    sides = rng.uniform(0.1, 0.4, n)
    frac = rng.uniform(size=(n, 2))
    centers = sides[:, None] / 2.0 + frac * (1.0 - sides[:, None])
    half = sides[:, None] / 2.0
    return np.concatenate([centers - half, centers + half], axis=1)


def _sample_candidate_boxes(
    rng: np.random.Generator, gt_boxes: np.ndarray, per_gt: int, noise: float
) -> np.ndarray:
    n = gt_boxes.shape[0]
    sides = gt_boxes[:, 2] - gt_boxes[:, 0]
    centers = (gt_boxes[:, :2] + gt_boxes[:, 2:]) / 2.0
    offsets = rng.normal(0.0, 1.0, (n, per_gt, 2)) * (noise * sides)[:, None, None]
    factors = np.exp(rng.normal(0.0, 1.0, (n, per_gt)) * noise)
    cand_centers = centers[:, None, :] + offsets
    cand_half = (sides[:, None] * factors / 2.0)[:, :, None]
    boxes = np.concatenate([cand_centers - cand_half, cand_centers + cand_half], axis=2)
    return boxes.reshape(n * per_gt, 4)


def _disjoint_from_all(box: np.ndarray, gts: np.ndarray) -> bool:
    iw = np.minimum(box[2], gts[:, 2]) - np.maximum(box[0], gts[:, 0])
    ih = np.minimum(box[3], gts[:, 3]) - np.maximum(box[1], gts[:, 1])
    return bool(np.all((iw <= 0.0) | (ih <= 0.0)))


def _sample_background_boxes(rng: np.random.Generator, gts: np.ndarray, n: int) -> np.ndarray:
    lo, hi = BACKGROUND_SIDE_RANGE
    boxes = np.empty((n, 4))
    for k in range(n):
        for _ in range(BACKGROUND_MAX_ATTEMPTS):
            side = rng.uniform(lo, hi)
            frac = rng.uniform(size=2)
            center = side / 2.0 + frac * (1.0 - side)
            box = np.array(
                [center[0] - side / 2, center[1] - side / 2, center[0] + side / 2, center[1] + side / 2]
            )
            if _disjoint_from_all(box, gts):
                boxes[k] = box
                break
        else:
            raise ConfigError(
                f"could not place background box {k} disjoint from {gts.shape[0]} "
                f"ground truths in {BACKGROUND_MAX_ATTEMPTS} attempts"
            )
    return boxes


def generate_instance(cfg: ScenarioConfig) -> DetectionInstance:
    """Build one synthetic detection instance, deterministically per seed.

    Draw order is fixed (ground truths, candidate jitter, background
    placement, logit init) so identical configs yield identical instances.
    The configured assigner fixes roles; ignored samples are dropped;
    negatives store a localization score of 0.
    """
    rng = np.random.default_rng(cfg.seed)
    gts = _sample_gt_boxes(rng, cfg.n_gts)
    cands = _sample_candidate_boxes(rng, gts, cfg.candidates_per_gt, cfg.box_noise)
    background = _sample_background_boxes(rng, gts, cfg.n_background)
    all_boxes = np.concatenate([cands, background], axis=0)
    n = all_boxes.shape[0]
    if cfg.logit_init == "zeros":
        logits = np.zeros(n)
    else:
        logits = rng.normal(0.0, cfg.logit_init_sigma, n)

    ious = iou_matrix(all_boxes, gts)
    best = ious.max(axis=1)
    group = ious.argmax(axis=1)
    group[best == 0.0] = -1  # background (and any fully detached candidate)

    if cfg.assigner.assigner in ("iou_threshold", "arps"):
        outcome = iou_threshold_assign(
            all_boxes, gts, cfg.assigner.pos_thresh, cfg.assigner.neg_thresh
        )
    else:
        outcome = paa_star_assign(expit(logits), best, group, cfg.assigner.seed)

    keep = np.sort(np.concatenate([outcome.positives, outcome.negatives]))
    is_pos = np.zeros(n, dtype=bool)
    is_pos[outcome.positives] = True
    roles = np.where(is_pos[keep], Role.POSITIVE, Role.NEGATIVE)
    inst_ious = np.where(is_pos, outcome.ious, 0.0)[keep]
    instance_ids = np.where(is_pos, outcome.matched_gt, -1)[keep]
    return DetectionInstance(
        logits=logits[keep],
        roles=roles,
        ious=inst_ious,
        instance_ids=instance_ids,
        pred_boxes=all_boxes[keep],
        gt_boxes=gts,
    )


@dataclass
class TrainingTrajectory:
    """Per-step training metrics; row 0 is the untouched initial state."""

    step: np.ndarray
    loss: np.ndarray
    grad_norm: np.ndarray
    ap: np.ndarray
    pcc: np.ndarray
    scc: np.ndarray
    kcc: np.ndarray

    def __post_init__(self):
        n = self.step.size
        for name in TRAJECTORY_COLUMNS:
            if getattr(self, name).size != n:
                raise ValueError("trajectory columns must be aligned")

    def __len__(self) -> int:
        return int(self.step.size)

    def row(self, i: int) -> dict:
        return {name: getattr(self, name)[i] for name in TRAJECTORY_COLUMNS}

    def to_csv(self, path) -> Path:
        """Write the trajectory as UTF-8 CSV with LF endings.

        Floats are serialized with `repr` (shortest round-trip form), so
        identical runs produce byte-identical files.
        """
        path = Path(path)
        lines = [",".join(TRAJECTORY_COLUMNS)]
        for i in range(len(self)):
            cells = [str(int(self.step[i]))]
            cells += [repr(float(getattr(self, name)[i])) for name in TRAJECTORY_COLUMNS[1:]]
            lines.append(",".join(cells))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        return path


def _safe_correlations(scores: np.ndarray, ious: np.ndarray) -> tuple[float, float, float]:
    # Trajectory rows must exist even when the correlation is undefined
    # (constant scores at init, a single positive); record NaN there.
    if scores.size < 2:
        return math.nan, math.nan, math.nan
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return correlations(scores, ious)
    except UndefinedMetricError:
        return math.nan, math.nan, math.nan


def _recompute_positive_ious(inst: DetectionInstance) -> None:
    # Box training moves pred boxes, so positives' localization scores drift.
    pos = inst.positives
    for u in pos:
        g = int(inst.instance_ids[u])
        if g < 0:
            continue
        row = iou_matrix(inst.pred_boxes[int(u)][None, :], inst.gt_boxes[g][None, :])
        inst.ious[int(u)] = row[0, 0]


def train_toy(inst: DetectionInstance, cfg: ScenarioConfig) -> TrainingTrajectory:
    """Plain gradient descent on the instance's logits (and optionally boxes).

    Mutates ``inst`` in place and returns ``steps + 1`` metric rows: each
    row is measured before the corresponding update, and the last row is
    the final state. Pair sets follow the assigner choice — the plain
    negative sets for ``iou_threshold``, adaptive sets otherwise — and are
    rebuilt per step only when box training changes the localization
    scores. A non-finite loss or an inverted predicted box aborts with the
    offending step index.
    """
    pos = inst.positives
    if pos.size == 0:
        raise ConfigError("training needs at least one positive sample")
    trainer = cfg.trainer
    train_boxes = trainer.loc_loss_weight > 0.0 and inst.pred_boxes is not None
    if train_boxes and inst.gt_boxes is None:
        raise ConfigError("box training needs gt_boxes on the instance")
    adaptive = cfg.assigner.assigner != "iou_threshold"
    sets = arps(inst) if adaptive else plain_negative_sets(inst)

    n_rows = trainer.steps + 1
    cols = {name: np.empty(n_rows) for name in TRAJECTORY_COLUMNS[1:]}
    steps_col = np.arange(n_rows)

    for step in range(n_rows):
        if train_boxes and step > 0:
            _recompute_positive_ious(inst)
            if adaptive:
                sets = arps(inst)
        loss, gvec = ape_loss(inst, sets, cfg.loss)
        grads = gvec.grads
        box_grads = None
        if train_boxes:
            box_grads = np.zeros_like(inst.pred_boxes)
            loc_total = 0.0
            for u in pos:
                u = int(u)
                g = int(inst.instance_ids[u])
                if g < 0:
                    continue
                pb = inst.pred_boxes[u]
                if not (pb[2] > pb[0] and pb[3] > pb[1] and np.all(np.isfinite(pb))):
                    raise DivergenceError(f"predicted box {u} degenerated at step {step}", step=step)
                l_u, g_u = giou_loss_with_grad(pb, inst.gt_boxes[g])
                loc_total += l_u
                box_grads[u] = trainer.loc_loss_weight * g_u / pos.size
            loss = loss + trainer.loc_loss_weight * loc_total / pos.size
        if not np.isfinite(loss):
            raise DivergenceError(f"non-finite loss at step {step}", step=step)

        scores = expit(inst.logits)
        cols["loss"][step] = loss
        sq = float(np.dot(grads, grads))
        if box_grads is not None:
            sq += float(np.sum(box_grads * box_grads))
        cols["grad_norm"][step] = math.sqrt(sq)
        cols["ap"][step] = average_precision(scores, inst.roles == Role.POSITIVE)
        pcc, scc, kcc = _safe_correlations(scores[pos], inst.ious[pos])
        cols["pcc"][step] = pcc
        cols["scc"][step] = scc
        cols["kcc"][step] = kcc

        if step == trainer.steps:
            break
        inst.logits = inst.logits - trainer.learning_rate * grads
        if train_boxes:
            inst.pred_boxes = inst.pred_boxes - trainer.learning_rate * box_grads
    return TrainingTrajectory(step=steps_col, **cols)


def random_instance(
    rng: np.random.Generator,
    max_positives: int = 20,
    max_negatives: int = 200,
    logit_scale: float = 1.5,
) -> DetectionInstance:
    """A random role/score/IoU layout for property tests and gradient checks."""
    n_pos = int(rng.integers(1, max_positives + 1))
    n_neg = int(rng.integers(1, max_negatives + 1))
    n = n_pos + n_neg
    roles = np.zeros(n, dtype=np.int64)
    roles[rng.permutation(n)[:n_pos]] = Role.POSITIVE
    ious = np.where(roles == Role.POSITIVE, rng.uniform(0.05, 0.95, n), 0.0)
    return DetectionInstance(logits=rng.normal(0.0, logit_scale, n), roles=roles, ious=ious)


@dataclass
class GradCheckReport:
    """Worst-case relative errors of analytic vs central-difference gradients."""

    loss_max_rel_error: Optional[float]
    giou_max_rel_error: Optional[float]
    trials: int
    skipped: bool = False
    notice: Optional[str] = None

    @property
    def max_rel_error(self) -> float:
        parts = [v for v in (self.loss_max_rel_error, self.giou_max_rel_error) if v is not None]
        return max(parts) if parts else math.nan


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    na = float(np.linalg.norm(analytic))
    nf = float(np.linalg.norm(numeric))
    scale = max(na, nf)
    if scale < FD_ZERO_NORM:
        return 0.0
    return float(np.linalg.norm(analytic - numeric)) / scale


def _fd_loss_gradient(logits: np.ndarray, plan, cfg: LossConfig, h: float) -> np.ndarray:
    fd = np.empty_like(logits)
    for i in range(logits.size):
        bumped = logits.copy()
        bumped[i] = logits[i] + h
        up, _ = evaluate_pair_plan(bumped, plan, cfg)
        bumped[i] = logits[i] - h
        down, _ = evaluate_pair_plan(bumped, plan, cfg)
        fd[i] = (up - down) / (2.0 * h)
    return fd


def _random_box_pair(rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    while True:
        x1, y1 = rng.uniform(0.0, 0.6, 2)
        w, hgt = rng.uniform(0.1, 0.4, 2)
        gt = np.array([x1, y1, x1 + w, y1 + hgt])
        pred = gt + rng.normal(0.0, 0.15, 4)
        if pred[2] - pred[0] < 0.02 or pred[3] - pred[1] < 0.02:
            continue
        # Stay clear of the min/max switch points so central differences
        # probe a smooth neighborhood.
        if np.any(np.abs(pred - gt) < 1e-3):
            continue
        return pred, gt


def grad_check(
    cfg: Optional[LossConfig] = None,
    trials: int = 100,
    seed: int = 0,
    fd_step: float = FD_STEP,
    check_loss: bool = True,
    check_boxes: bool = True,
) -> GradCheckReport:
    """Compare closed-form gradients against central finite differences.

    The ranking-loss check freezes each instance's pair plan (membership
    and balance constants) and differentiates that frozen function — the
    exact object the closed-form gradients describe. With
    ``detach_balance=False`` the configured loss is not differentiable
    through its balance constant, so the loss check is skipped with a
    notice. The box check probes the GIoU loss gradient on random
    non-degenerate box pairs.
    """
    if int(trials) < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    cfg = cfg if cfg is not None else LossConfig()
    rng = np.random.default_rng(seed)
    report = GradCheckReport(None, None, trials=int(trials))
    if check_loss:
        if not cfg.detach_balance:
            report.skipped = True
            report.notice = (
                "loss gradient check skipped: not differentiable through BC "
                "(detach_balance is false)"
            )
        else:
            worst = 0.0
            for _ in range(int(trials)):
                # Moderate logit spread keeps the CE log-complement clamp
                # inactive, so the probed objective is smooth everywhere.
                inst = random_instance(
                    rng, max_positives=6, max_negatives=18, logit_scale=0.75
                )
                plan = build_pair_plan(inst, arps(inst), cfg)
                _, gvec = evaluate_pair_plan(inst.logits, plan, cfg)
                fd = _fd_loss_gradient(inst.logits, plan, cfg, fd_step)
                worst = max(worst, _relative_error(gvec.grads, fd))
            report.loss_max_rel_error = worst
    if check_boxes:
        worst = 0.0
        for _ in range(int(trials)):
            pred, gt = _random_box_pair(rng)
            _, grad = giou_loss_with_grad(pred, gt)
            fd = np.empty(4)
            for i in range(4):
                bumped = pred.copy()
                bumped[i] = pred[i] + fd_step
                up, _ = giou_loss_with_grad(bumped, gt)
                bumped[i] = pred[i] - fd_step
                down, _ = giou_loss_with_grad(bumped, gt)
                fd[i] = (up - down) / (2.0 * fd_step)
            worst = max(worst, _relative_error(grad, fd))
        report.giou_max_rel_error = worst
    return report


def _apply_seed_env(cfg: ScenarioConfig) -> ScenarioConfig:
    value = os.environ.get(SEED_ENV_VAR)
    if value is None:
        return cfg
    try:
        return replace(cfg, seed=int(value))
    except ValueError:
        raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {value!r}") from None


def _load_scenario(config: Union[ScenarioConfig, Mapping, str, Path]) -> ScenarioConfig:
    if isinstance(config, ScenarioConfig):
        return _apply_seed_env(config)
    if isinstance(config, Mapping):
        return _apply_seed_env(scenario_from_dict(config))
    path = Path(config)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return _apply_seed_env(scenario_from_dict(obj))


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8", newline="\n")
    return path


def run_experiment(
    config: Union[ScenarioConfig, Mapping, str, Path],
    out_dir,
    make_figures: bool = True,
) -> dict:
    """Run one scenario end to end and write its report files.

    Produces ``trajectory.csv`` (one metric row per step) and
    ``summary.json`` (final evaluation report, config echo, library
    version) under ``out_dir``, plus rendered figures unless disabled.
    The ``RANKPAIR_SEED`` environment variable, when set, overrides the
    configured seed.
    """
    cfg = _load_scenario(config)
    inst = generate_instance(cfg)
    trajectory = train_toy(inst, cfg)
    report = detection_report(
        inst.pred_boxes,
        expit(inst.logits),
        inst.gt_boxes,
        correlation_iou_floor=cfg.correlation_iou_floor,
    )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = trajectory.to_csv(out / "trajectory.csv")
    from . import __version__

    summary = {
        "report": report.to_dict(),
        "config": scenario_to_dict(cfg),
        "version": __version__,
    }
    json_path = _write_json(out / "summary.json", summary)
    figures = []
    if make_figures:
        from . import plots

        figures = plots.render_run_figures(trajectory, out)
    return {
        "trajectory_csv": csv_path,
        "summary_json": json_path,
        "figures": figures,
        "summary": summary,
        "trajectory": trajectory,
    }


def _set_config_path(obj: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    if not all(keys):
        raise ConfigError(f"bad sweep parameter path {dotted!r}")
    node = obj
    for key in keys[:-1]:
        if not isinstance(node, dict) or key not in node:
            raise ConfigError(f"sweep parameter path {dotted!r} not found in config")
        node = node[key]
    if not isinstance(node, dict):
        raise ConfigError(f"sweep parameter path {dotted!r} does not end in an object field")
    node[keys[-1]] = value


def sweep_experiment(
    config: Union[Mapping, str, Path],
    param: str,
    values: Sequence,
    out_dir,
    make_figures: bool = True,
) -> list:
    """Re-run one scenario with ``param`` (dotted JSON path) swept over
    ``values``; writes one ``sweep.csv`` row per setting with the final
    trajectory metrics and the box-level AP."""
    if isinstance(config, Mapping):
        base = dict(config)
        base = json.loads(json.dumps(base))  # deep copy via round-trip
    else:
        path = Path(config)
        try:
            base = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not values:
        raise ConfigError("sweep needs at least one value")
    rows = []
    for value in values:
        obj = json.loads(json.dumps(base))
        _set_config_path(obj, param, value)
        cfg = _apply_seed_env(scenario_from_dict(obj))
        inst = generate_instance(cfg)
        trajectory = train_toy(inst, cfg)
        report = detection_report(
            inst.pred_boxes,
            expit(inst.logits),
            inst.gt_boxes,
            correlation_iou_floor=cfg.correlation_iou_floor,
        )
        last = len(trajectory) - 1
        rows.append(
            {
                "param": param,
                "value": value,
                "loss": float(trajectory.loss[last]),
                "ap": float(trajectory.ap[last]),
                "coco_ap": report.ap,
                "pcc": float(trajectory.pcc[last]),
                "scc": float(trajectory.scc[last]),
                "kcc": float(trajectory.kcc[last]),
            }
        )
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = ["param", "value", "loss", "ap", "coco_ap", "pcc", "scc", "kcc"]
    lines = [",".join(header)]
    for row in rows:
        cells = [row["param"], json.dumps(row["value"])]
        cells += [repr(float(row[k])) for k in header[2:]]
        lines.append(",".join(cells))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    if make_figures:
        from . import plots

        plots.render_sweep_figure(rows, param, out)
    return rows


def evaluate_detections_file(path, correlation_iou_floor: float = DEFAULT_CORRELATION_IOU_FLOOR) -> EvalReport:
    """Score a JSON detections file: ``{"pred_boxes": [[x1,y1,x2,y2],...],
    "pred_scores": [...], "gt_boxes": [[...]]}``."""
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read detections file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"detections file {path} is not valid JSON: {exc}") from exc
    required = {"pred_boxes", "pred_scores", "gt_boxes"}
    if not isinstance(obj, Mapping) or not required <= set(obj):
        raise ConfigError(f"detections file must contain fields {sorted(required)}")
    return detection_report(
        obj["pred_boxes"],
        obj["pred_scores"],
        obj["gt_boxes"],
        correlation_iou_floor=correlation_iou_floor,
    )
