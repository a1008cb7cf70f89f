"""Candidate assignment and ranking-pair selection.

Three ways to decide who ranks against whom:

* ``arps`` — adaptive ranking pair selection: each positive's pair set is
  all negatives plus every positive with a strictly lower localization
  score, so sloppier boxes must also be out-scored;
* ``iou_threshold_assign`` — the classic two-threshold positive/negative
  split against ground-truth boxes, with an ignore band in between;
* ``paa_star_assign`` — probabilistic assignment: per ground-truth 0-1
  normalization of ranking and localization scores, a hand-rolled
  two-component diagonal-covariance GMM fit by EM, and a
  maximum-responsibility split into positives and negatives.

Everything here is deterministic: ties break toward lower indices, the GMM
initializes from the extreme points of each group, and per-group results
merge in ascending group order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import ConfigError, DegenerateInputError
from .geometry import iou_matrix
from .rankloss import DetectionInstance, Role

#: Two-threshold split defaults: at/above the first → positive, below the
#: second → negative, in between → ignored.
DEFAULT_POS_THRESH = 0.5
DEFAULT_NEG_THRESH = 0.4

#: EM stopping rule: quit when the log-likelihood improves by less than
#: this, or after this many iterations.
GMM_TOL = 1e-6
GMM_MAX_ITERS = 100

#: Per-dimension variance floor keeping tiny clusters from collapsing.
GMM_VARIANCE_FLOOR = 1e-6

ASSIGNER_NAMES = ("iou_threshold", "arps", "paa_star")


@dataclass
class AdaptiveNegativeSets:
    """Per-positive ranking pair sets: positive index -> ascending indices."""

    sets: dict

    def __getitem__(self, u: int) -> np.ndarray:
        return self.sets[int(u)]

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def items(self):
        return self.sets.items()


def arps(inst: DetectionInstance) -> AdaptiveNegativeSets:
    """Adaptive ranking pair selection.

    For every positive ``u``: all negatives, plus each other positive whose
    localization score is strictly below ``u``'s. Equal-IoU positives never
    pair with each other. Sets come back in ascending index order.
    """
    pos_mask = inst.roles == Role.POSITIVE
    neg_mask = ~pos_mask
    idx = np.arange(len(inst))
    sets = {}
    for u in np.nonzero(pos_mask)[0]:
        take = neg_mask | (pos_mask & (inst.ious < inst.ious[u]))
        take[u] = False
        sets[int(u)] = idx[take]
    return AdaptiveNegativeSets(sets)


@dataclass
class AssignerOutcome:
    """A positive/negative/ignored partition of candidate samples.

    ``responsibilities`` is ``(n, 2)`` with columns (negative, positive)
    summing to 1 per sample; hard assigners emit one-hot rows and put
    (0.5, 0.5) on ignored samples. ``matched_gt`` holds the ground-truth
    (group) index backing each positive, -1 elsewhere; ``ious`` the
    localization score the decision was based on.
    """

    positives: np.ndarray
    negatives: np.ndarray
    ignored: np.ndarray
    responsibilities: np.ndarray
    matched_gt: np.ndarray
    ious: np.ndarray

    def __post_init__(self):
        self.positives = np.asarray(self.positives, dtype=np.int64).reshape(-1)
        self.negatives = np.asarray(self.negatives, dtype=np.int64).reshape(-1)
        self.ignored = np.asarray(self.ignored, dtype=np.int64).reshape(-1)
        self.responsibilities = np.asarray(self.responsibilities, dtype=np.float64)
        self.matched_gt = np.asarray(self.matched_gt, dtype=np.int64).reshape(-1)
        self.ious = np.asarray(self.ious, dtype=np.float64).reshape(-1)
        n = self.matched_gt.size
        groups = [self.positives, self.negatives, self.ignored]
        merged = np.concatenate(groups)
        if merged.size != n or not np.array_equal(np.sort(merged), np.arange(n)):
            raise ValueError("positives/negatives/ignored must partition all samples")
        if self.responsibilities.shape != (n, 2):
            raise ValueError("responsibilities must have shape (n, 2)")
        sums = self.responsibilities.sum(axis=1)
        if np.any(self.responsibilities < 0.0) or np.any(np.abs(sums - 1.0) > 1e-9):
            raise ValueError("responsibilities must be a per-sample distribution")


def iou_threshold_assign(
    anchor_boxes,
    gt_boxes,
    pos_thresh: float = DEFAULT_POS_THRESH,
    neg_thresh: float = DEFAULT_NEG_THRESH,
) -> AssignerOutcome:
    """Two-threshold assignment against ground-truth boxes.

    A sample is positive iff its best IoU over ground truths is at or above
    ``pos_thresh`` (matched to the argmax ground truth, ties to the lower
    index), negative iff strictly below ``neg_thresh``, and ignored in
    between. With no ground truths everything is negative.
    """
    if not 0.0 <= neg_thresh <= pos_thresh <= 1.0:
        raise ConfigError(
            f"need 0 <= neg_thresh <= pos_thresh <= 1, got ({pos_thresh}, {neg_thresh})"
        )
    anchors = np.asarray(anchor_boxes, dtype=np.float64).reshape(-1, 4)
    gts = np.asarray(gt_boxes, dtype=np.float64).reshape(-1, 4)
    n = anchors.shape[0]
    if gts.shape[0] == 0:
        return AssignerOutcome(
            positives=np.empty(0, dtype=np.int64),
            negatives=np.arange(n),
            ignored=np.empty(0, dtype=np.int64),
            responsibilities=np.tile([1.0, 0.0], (n, 1)),
            matched_gt=np.full(n, -1, dtype=np.int64),
            ious=np.zeros(n),
        )
    ious = iou_matrix(anchors, gts)
    best = ious.max(axis=1)
    arg = ious.argmax(axis=1)
    pos_mask = best >= pos_thresh
    neg_mask = best < neg_thresh
    ign_mask = ~pos_mask & ~neg_mask
    resp = np.full((n, 2), 0.5)
    resp[pos_mask] = (0.0, 1.0)
    resp[neg_mask] = (1.0, 0.0)
    return AssignerOutcome(
        positives=np.nonzero(pos_mask)[0],
        negatives=np.nonzero(neg_mask)[0],
        ignored=np.nonzero(ign_mask)[0],
        responsibilities=resp,
        matched_gt=np.where(pos_mask, arg, -1),
        ious=best,
    )


def normalize_per_instance(values, instance_ids) -> np.ndarray:
    """Min-max normalize ``values`` within each instance group.

    Each group maps its min to 0 and max to 1; a constant group maps to 0.5
    everywhere (committing to neither end). Output is invariant to positive
    affine transforms of any single group's inputs.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    ids = np.asarray(instance_ids).reshape(-1)
    if values.size != ids.size:
        raise ValueError("values and instance_ids must be aligned")
    out = np.empty_like(values)
    for g in np.unique(ids):
        m = ids == g
        lo = values[m].min()
        hi = values[m].max()
        out[m] = 0.5 if hi == lo else (values[m] - lo) / (hi - lo)
    return out


@dataclass
class GmmModel:
    """A fitted two-component diagonal-covariance 2-D Gaussian mixture."""

    weights: np.ndarray  # (2,)
    means: np.ndarray  # (2, 2)
    variances: np.ndarray  # (2, 2) diagonal entries
    log_likelihood: float
    iterations: int
    log_likelihood_trace: np.ndarray = field(default_factory=lambda: np.empty(0))

    def _log_joint(self, points: np.ndarray) -> np.ndarray:
        # (n, 2): log w_k + log N(x | mu_k, diag(var_k)) per component.
        x = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        d2 = (x[:, None, :] - self.means[None, :, :]) ** 2 / self.variances[None, :, :]
        log_norm = np.log(2.0 * np.pi * self.variances).sum(axis=1)
        return np.log(self.weights)[None, :] - 0.5 * (d2.sum(axis=2) + log_norm[None, :])

    def score(self, points) -> float:
        """Total log-likelihood of ``points`` under the mixture."""
        lj = self._log_joint(points)
        return float(np.sum(np.logaddexp(lj[:, 0], lj[:, 1])))

    def responsibilities(self, points) -> np.ndarray:
        """Per-point posterior component probabilities, shape ``(n, 2)``."""
        lj = self._log_joint(points)
        total = np.logaddexp(lj[:, 0], lj[:, 1])
        return np.exp(lj - total[:, None])


def gmm_fit_two_component(points, seed: int = 0) -> GmmModel:
    """Fit a two-component diagonal GMM to 2-D points by EM.

    Initialization is deterministic — components anchor at the points with
    the minimal and maximal coordinate sum (the natural "two ends" of
    score space) — so the fit ignores ``seed``; the parameter is accepted
    for configuration compatibility. EM stops when the log-likelihood
    improves by under ``GMM_TOL`` or after ``GMM_MAX_ITERS`` iterations, and
    the per-iteration log-likelihoods are kept on the model.
    """
    del seed  # deterministic init; kept for interface stability
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(pts)):
        raise DegenerateInputError("GMM input points must be finite")
    if np.unique(pts, axis=0).shape[0] < 2:
        raise DegenerateInputError("GMM fitting needs at least 2 distinct points")
    sums = pts.sum(axis=1)
    means = np.stack([pts[np.argmin(sums)], pts[np.argmax(sums)]])
    variances = np.tile(np.maximum(pts.var(axis=0), GMM_VARIANCE_FLOOR), (2, 1))
    weights = np.array([0.5, 0.5])
    model = GmmModel(weights, means, variances, -np.inf, 0)
    trace = []
    prev = -np.inf
    for it in range(1, GMM_MAX_ITERS + 1):
        lj = model._log_joint(pts)
        total = np.logaddexp(lj[:, 0], lj[:, 1])
        ll = float(np.sum(total))
        trace.append(ll)
        model.log_likelihood = ll
        model.iterations = it
        if ll - prev < GMM_TOL:
            break
        prev = ll
        resp = np.exp(lj - total[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        model.means = (resp.T @ pts) / nk[:, None]
        sq = (pts[:, None, :] - model.means[None, :, :]) ** 2
        model.variances = np.maximum(
            np.einsum("nk,nkd->kd", resp, sq) / nk[:, None], GMM_VARIANCE_FLOOR
        )
        w = nk / pts.shape[0]
        w = np.clip(w, 1e-12, 1.0 - 1e-12)
        model.weights = w / w.sum()
    model.log_likelihood_trace = np.asarray(trace)
    return model


def paa_star_assign(rank_scores, loc_scores, instance_ids, seed: int = 0) -> AssignerOutcome:
    """Probabilistic assignment over per-group normalized score pairs.

    Per ground-truth group (``instance_ids`` >= 0): 0-1 normalize the
    ranking and localization scores within the group, fit a two-component
    GMM to the resulting 2-D points, call the component with the larger
    mean coordinate sum the positive cluster, and assign each candidate by
    maximum responsibility (exact ties go negative). Groups with fewer than
    two distinct points skip the GMM: their highest combined normalized
    score goes positive, the rest negative. Samples with a negative group
    id never enter clustering and are negative outright. Groups are
    independent, merged in ascending group order.
    """
    rank = np.asarray(rank_scores, dtype=np.float64).reshape(-1)
    loc = np.asarray(loc_scores, dtype=np.float64).reshape(-1)
    ids = np.asarray(instance_ids, dtype=np.int64).reshape(-1)
    if not (rank.size == loc.size == ids.size):
        raise ValueError("rank_scores, loc_scores, instance_ids must be aligned")
    n = rank.size
    resp = np.tile([1.0, 0.0], (n, 1))
    pos_mask = np.zeros(n, dtype=bool)
    for g in np.unique(ids):
        if g < 0:
            continue
        m = np.nonzero(ids == g)[0]
        nr = normalize_per_instance(rank[m], np.zeros(m.size))
        nl = normalize_per_instance(loc[m], np.zeros(m.size))
        pts = np.stack([nr, nl], axis=1)
        if np.unique(pts, axis=0).shape[0] < 2:
            best = int(np.argmax(nr + nl))
            resp[m] = (1.0, 0.0)
            resp[m[best]] = (0.0, 1.0)
            pos_mask[m[best]] = True
            continue
        model = gmm_fit_two_component(pts, seed)
        pos_comp = int(np.argmax(model.means.sum(axis=1)))
        r = model.responsibilities(pts)
        r_pos = r[:, pos_comp]
        resp[m, 0] = 1.0 - r_pos
        resp[m, 1] = r_pos
        pos_mask[m] = r_pos > 0.5
    return AssignerOutcome(
        positives=np.nonzero(pos_mask)[0],
        negatives=np.nonzero(~pos_mask)[0],
        ignored=np.empty(0, dtype=np.int64),
        responsibilities=resp,
        matched_gt=np.where(pos_mask, ids, -1),
        ious=loc,
    )


@dataclass(frozen=True)
class AssignerConfig:
    """Which assigner drives role selection, plus its knobs.

    ``iou_threshold`` pairs every positive with the plain negative set;
    ``arps`` uses the same threshold split but adaptive pair sets;
    ``paa_star`` replaces the threshold split with GMM clustering (and also
    uses adaptive pair sets).
    """

    assigner: str = "arps"
    pos_thresh: float = DEFAULT_POS_THRESH
    neg_thresh: float = DEFAULT_NEG_THRESH
    seed: int = 7

    def __post_init__(self):
        if self.assigner not in ASSIGNER_NAMES:
            raise ConfigError(f"assigner must be one of {ASSIGNER_NAMES}, got {self.assigner!r}")
        if not 0.0 <= self.neg_thresh <= self.pos_thresh <= 1.0:
            raise ConfigError(
                f"need 0 <= neg_thresh <= pos_thresh <= 1, got "
                f"({self.pos_thresh}, {self.neg_thresh})"
            )


def assigner_config_from_dict(obj: Mapping) -> AssignerConfig:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"assigner config must be an object, got {type(obj).__name__}")
    allowed = {"assigner", "pos_thresh", "neg_thresh", "seed"}
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown assigner config fields {sorted(unknown)}")
    return AssignerConfig(
        assigner=obj.get("assigner", "arps"),
        pos_thresh=float(obj.get("pos_thresh", DEFAULT_POS_THRESH)),
        neg_thresh=float(obj.get("neg_thresh", DEFAULT_NEG_THRESH)),
        seed=int(obj.get("seed", 7)),
    )


def assigner_config_to_dict(cfg: AssignerConfig) -> dict:
    return {
        "assigner": cfg.assigner,
        "pos_thresh": cfg.pos_thresh,
        "neg_thresh": cfg.neg_thresh,
        "seed": cfg.seed,
    }
