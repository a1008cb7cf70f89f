"""Pairwise ranking losses over detection candidate sets.

Forward values and closed-form gradients for the ranking-loss family:

* ``precision_loss`` — per-positive error mass over negatives, normalized
  by the positive's soft rank (self-inclusive, so a perfectly ranked
  positive scores 0);
* ``error_driven_gradients`` — prescribed (non-differentiated) updates:
  each pair's distance value, scaled by the positive's rank, pushes the
  pair apart;
* ``pairwise_error_loss`` — the generalized per-positive pairwise error
  with a configurable balance constant (rank sum or valid-negative count);
* ``ape_loss`` — adaptive pairwise error: a weighted mean of per-positive
  pairwise errors over caller-supplied pair sets (e.g. from
  ``assign.arps``), with margin filtering and top-q truncation applied
  per positive.

There is no autograd here. Per pair ``(u, v)`` only the distance term
``D(logit_v - logit_u)`` carries gradient; the balance constant is treated
as a constant during differentiation (``detach_balance``). The
``build_pair_plan`` / ``evaluate_pair_plan`` pair exposes that frozen view
directly: a plan pins pair membership and balance values at one point, and
evaluating the plan at perturbed logits is exactly the function the
returned gradients differentiate — which is what finite-difference checks
must probe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Mapping, Optional, Union

import numpy as np

from .distance import CeSigmoid, DistanceFunction, distance_from_dict, distance_to_dict
from .errors import ConfigError, DegenerateDenominatorError

#: Margin for the valid-negative filter: a pair counts only when the
#: candidate outscores the positive by more than this.
DEFAULT_VALID_NEG_THRESHOLD = 0.25

#: Per-positive cap on pair-set size; beyond this, only the highest-scoring
#: candidates are kept.
DEFAULT_MAX_PAIRS_Q = 100_000


class Role(IntEnum):
    NEGATIVE = 0
    POSITIVE = 1


@dataclass
class DetectionInstance:
    """One scored candidate set: logits, roles, and localization scores.

    ``ious`` holds each sample's localization score against its matched
    ground truth; negatives carry 0 by convention. ``instance_ids`` groups
    samples by ground-truth object (-1 = unmatched); ``pred_boxes`` /
    ``gt_boxes`` are optional geometry for box-aware workflows.
    """

    logits: np.ndarray
    roles: np.ndarray
    ious: np.ndarray
    instance_ids: Optional[np.ndarray] = None
    pred_boxes: Optional[np.ndarray] = None
    gt_boxes: Optional[np.ndarray] = None

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64).reshape(-1)
        self.roles = np.asarray(self.roles, dtype=np.int64).reshape(-1)
        self.ious = np.asarray(self.ious, dtype=np.float64).reshape(-1)
        n = self.logits.size
        if n == 0:
            raise ValueError("a detection instance needs at least one sample")
        if self.instance_ids is None:
            self.instance_ids = np.full(n, -1, dtype=np.int64)
        else:
            self.instance_ids = np.asarray(self.instance_ids, dtype=np.int64).reshape(-1)
        if not (self.roles.size == self.ious.size == self.instance_ids.size == n):
            raise ValueError("logits, roles, ious, instance_ids must be aligned")
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("logits must be finite")
        if not np.all((self.roles == Role.NEGATIVE) | (self.roles == Role.POSITIVE)):
            raise ValueError("roles must be 0 (negative) or 1 (positive)")
        if not np.all((self.ious >= 0.0) & (self.ious <= 1.0)):
            raise ValueError("ious must lie in [0, 1]")
        if self.pred_boxes is not None:
            self.pred_boxes = np.asarray(self.pred_boxes, dtype=np.float64).reshape(-1, 4)
            if self.pred_boxes.shape[0] != n:
                raise ValueError("pred_boxes must be aligned with logits")
        if self.gt_boxes is not None:
            self.gt_boxes = np.asarray(self.gt_boxes, dtype=np.float64).reshape(-1, 4)

    def __len__(self) -> int:
        return int(self.logits.size)

    @property
    def positives(self) -> np.ndarray:
        return np.nonzero(self.roles == Role.POSITIVE)[0]

    @property
    def negatives(self) -> np.ndarray:
        return np.nonzero(self.roles == Role.NEGATIVE)[0]

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.roles == Role.POSITIVE))


@dataclass
class GradientVector:
    """Per-sample gradient entries aligned with an instance's logits."""

    grads: np.ndarray

    def __post_init__(self):
        self.grads = np.asarray(self.grads, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(self.grads)):
            raise ValueError("gradient entries must be finite")

    def norm(self) -> float:
        return float(np.linalg.norm(self.grads))


@dataclass(frozen=True)
class RankSum:
    """Balance by the positive's soft rank in the whole instance.

    The rank is 1 (self) plus the sum of the bounded rank comparator over
    every other sample; see ``rank_sum_balance``.
    """


@dataclass(frozen=True)
class ValidNegativeCount:
    """Balance by the number of margin-valid pairs (score gap > threshold)."""

    threshold: float = DEFAULT_VALID_NEG_THRESHOLD

    def __post_init__(self):
        if not (np.isfinite(self.threshold) and self.threshold >= 0.0):
            raise ConfigError(f"valid-negative threshold must be >= 0, got {self.threshold}")


BalanceConstant = Union[RankSum, ValidNegativeCount]


def balance_from_dict(obj) -> BalanceConstant:
    if obj == "rank_sum":
        return RankSum()
    if isinstance(obj, Mapping) and set(obj) == {"valid_neg_count"}:
        inner = obj["valid_neg_count"]
        if not isinstance(inner, Mapping) or set(inner) - {"T"}:
            raise ConfigError(f"valid_neg_count takes only a 'T' field, got {inner!r}")
        return ValidNegativeCount(float(inner.get("T", DEFAULT_VALID_NEG_THRESHOLD)))
    raise ConfigError(f"unknown balance config {obj!r}")


def balance_to_dict(balance: BalanceConstant):
    if isinstance(balance, RankSum):
        return "rank_sum"
    if isinstance(balance, ValidNegativeCount):
        return {"valid_neg_count": {"T": balance.threshold}}
    raise ConfigError(f"unknown balance variant {balance!r}")


@dataclass(frozen=True)
class LossConfig:
    """Configuration for the pairwise-error family.

    ``max_pairs_q`` of None means unlimited. ``positive_weights``, when
    given, must align with the instance's positives in ascending index
    order. ``include_self_rank`` toggles the +1 self term in the rank-sum
    balance (and is on by default so a perfectly ranked positive has a
    well-defined zero loss).
    """

    distance: DistanceFunction = field(default_factory=CeSigmoid)
    balance: BalanceConstant = field(default_factory=RankSum)
    max_pairs_q: Optional[int] = DEFAULT_MAX_PAIRS_Q
    detach_balance: bool = True
    positive_weights: Optional[np.ndarray] = None
    include_self_rank: bool = True

    def __post_init__(self):
        if self.max_pairs_q is not None:
            q = int(self.max_pairs_q)
            if q < 1:
                raise ConfigError(f"max_pairs_q must be >= 1 or None, got {self.max_pairs_q}")
            object.__setattr__(self, "max_pairs_q", q)
        if isinstance(self.distance, CeSigmoid) and not self.detach_balance:
            # The CE distance grows without bound, so an attached balance has
            # no closed-form gradient here; the config is rejected outright.
            raise ConfigError("the ce_sigmoid distance requires detach_balance=true")
        if self.positive_weights is not None:
            w = np.asarray(self.positive_weights, dtype=np.float64).reshape(-1)
            if not np.all(np.isfinite(w)) or np.any(w < 0.0):
                raise ConfigError("positive_weights must be finite and >= 0")
            object.__setattr__(self, "positive_weights", w)


def loss_config_from_dict(obj: Mapping) -> LossConfig:
    if not isinstance(obj, Mapping):
        raise ConfigError(f"loss config must be an object, got {type(obj).__name__}")
    allowed = {"distance", "balance", "q", "detach_balance"}
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown loss config fields {sorted(unknown)}")
    distance = distance_from_dict(obj["distance"]) if "distance" in obj else CeSigmoid()
    balance = balance_from_dict(obj["balance"]) if "balance" in obj else RankSum()
    q = obj.get("q", DEFAULT_MAX_PAIRS_Q)
    return LossConfig(
        distance=distance,
        balance=balance,
        max_pairs_q=None if q is None else int(q),
        detach_balance=bool(obj.get("detach_balance", True)),
    )


def loss_config_to_dict(cfg: LossConfig) -> dict:
    return {
        "distance": distance_to_dict(cfg.distance),
        "balance": balance_to_dict(cfg.balance),
        "q": cfg.max_pairs_q,
        "detach_balance": cfg.detach_balance,
    }


def _check_positive_index(inst: DetectionInstance, u: int) -> int:
    u = int(u)
    if not 0 <= u < len(inst):
        raise ValueError(f"sample index {u} out of range for instance of size {len(inst)}")
    if inst.roles[u] != Role.POSITIVE:
        raise ValueError(f"sample {u} is not a positive")
    return u


def rank_sum_balance(
    u: int, inst: DetectionInstance, distance: DistanceFunction, include_self: bool = True
) -> float:
    """Soft rank of positive ``u`` within the whole instance.

    Sums the distance's bounded rank comparator over every other sample
    (for the CE distance that comparator is the underlying sigmoid), plus 1
    for the sample itself when ``include_self``.
    """
    comp = distance.rank_comparator(inst.logits - inst.logits[u])
    total = float(np.sum(comp)) - float(comp[u])
    return 1.0 + total if include_self else total


def valid_negative_filter(u: int, inst: DetectionInstance, candidates, threshold: float) -> np.ndarray:
    """Keep only candidates that outscore ``u`` by strictly more than ``threshold``."""
    if not (np.isfinite(threshold) and threshold >= 0.0):
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    cand = np.asarray(candidates, dtype=np.int64).reshape(-1)
    keep = inst.logits[cand] - inst.logits[u] > threshold
    return cand[keep]


def top_q_truncate(u: int, inst: DetectionInstance, candidates, q: int) -> np.ndarray:
    """The ``q`` highest-scoring candidates, returned in ascending index order.

    Score ties break toward the lower index, so the result is deterministic.
    """
    if int(q) < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    cand = np.sort(np.asarray(candidates, dtype=np.int64).reshape(-1))
    if cand.size <= int(q):
        return cand
    order = np.argsort(-inst.logits[cand], kind="stable")
    return np.sort(cand[order[: int(q)]])


def _balance_value(u: int, inst: DetectionInstance, pairs: np.ndarray, cfg: LossConfig) -> float:
    if isinstance(cfg.balance, RankSum):
        return rank_sum_balance(u, inst, cfg.distance, cfg.include_self_rank)
    return float(valid_negative_filter(u, inst, pairs, cfg.balance.threshold).size)


def precision_loss(
    u: int,
    inst: DetectionInstance,
    distance: DistanceFunction,
    include_self_rank: bool = True,
) -> float:
    """Per-positive precision-style loss in [0, 1].

    Error mass of negatives ranked around ``u`` over the total mass at or
    above ``u``: ``num / (1 + den_pos + num)`` with ``num`` summing
    ``D(logit_v - logit_u)`` over negatives and ``den_pos`` over other
    positives. Zero exactly when ``u`` cleanly outranks every other sample.
    """
    u = _check_positive_index(inst, u)
    diffs = inst.logits - inst.logits[u]
    vals = distance.value(diffs)
    neg_mask = inst.roles == Role.NEGATIVE
    pos_mask = ~neg_mask
    pos_mask[u] = False
    num = float(np.sum(vals[neg_mask]))
    den_pos = float(np.sum(vals[pos_mask]))
    denom = (1.0 if include_self_rank else 0.0) + den_pos + num
    if denom == 0.0:
        if num == 0.0:
            return 0.0
        raise DegenerateDenominatorError(f"zero rank mass for positive {u}")
    return num / denom


def _pair_sets(pairs) -> Mapping:
    # Accept either a mapping {positive index -> candidate indices} or any
    # object exposing one as `.sets` (e.g. assign.AdaptiveNegativeSets).
    return getattr(pairs, "sets", pairs)


def error_driven_gradients(
    inst: DetectionInstance,
    distance: DistanceFunction,
    pairs,
    include_self_rank: bool = True,
) -> tuple[float, GradientVector]:
    """Prescribed ranking updates: distance values, not derivatives.

    For each positive ``u`` and its pair set, every pair contributes
    ``D(logit_v - logit_u) / ranksum(u)`` to ``v`` and the negated total to
    ``u``, so each pair set's contributions cancel. The returned loss is
    the mean ``precision_loss`` over positives. Only the bounded distances
    make sense here; the CE distance is rejected.
    """
    if isinstance(distance, CeSigmoid):
        raise ConfigError("error-driven updates take a bounded distance (piecewise_step or sigmoid)")
    pos = inst.positives
    if pos.size == 0:
        raise ValueError("error-driven updates need at least one positive")
    sets = _pair_sets(pairs)
    grads = np.zeros(len(inst))
    losses = np.empty(pos.size)
    for k, u in enumerate(pos):
        u = int(u)
        losses[k] = precision_loss(u, inst, distance, include_self_rank)
        try:
            pu = np.asarray(sets[u], dtype=np.int64).reshape(-1)
        except KeyError:
            raise ValueError(f"pair sets must cover every positive; missing {u}") from None
        if pu.size == 0:
            continue
        bc = rank_sum_balance(u, inst, distance, include_self_rank)
        per_pair = distance.value(inst.logits[pu] - inst.logits[u]) / bc
        np.add.at(grads, pu, per_pair)
        grads[u] -= float(np.sum(per_pair))
    return float(np.mean(losses)), GradientVector(grads)


def pairwise_error_loss(
    u: int, inst: DetectionInstance, pairs_u, cfg: LossConfig
) -> tuple[float, np.ndarray]:
    """Generalized per-positive pairwise error and its gradient contributions.

    Loss is ``sum_v D(logit_v - logit_u) / BC`` over the (margin-filtered,
    under a valid-negative-count balance) pair set. The returned array is a
    full-length gradient contribution vector: ``+D'(x)/BC`` at each pair and
    the negated sum at ``u``; the balance constant never carries gradient.
    An empty pair set — or a zero balance with zero error mass — gives
    exactly 0.
    """
    u = _check_positive_index(inst, u)
    pairs = np.asarray(pairs_u, dtype=np.int64).reshape(-1)
    if isinstance(cfg.balance, ValidNegativeCount):
        pairs = valid_negative_filter(u, inst, pairs, cfg.balance.threshold)
    contrib = np.zeros(len(inst))
    if pairs.size == 0:
        return 0.0, contrib
    bc = _balance_value(u, inst, pairs, cfg)
    x = inst.logits[pairs] - inst.logits[u]
    num = float(np.sum(cfg.distance.value(x)))
    if bc == 0.0:
        if num == 0.0:
            return 0.0, contrib
        raise DegenerateDenominatorError(
            f"zero balance constant with error mass {num} for positive {u}"
        )
    per_pair = cfg.distance.grad(x) / bc
    np.add.at(contrib, pairs, per_pair)
    contrib[u] -= float(np.sum(per_pair))
    return num / bc, contrib


@dataclass
class PairPlan:
    """Frozen pair selection: membership, balances, and weights pinned at one point.

    Evaluating a plan at perturbed logits differentiates only the distance
    terms — the exact function the closed-form gradients describe.
    """

    positives: np.ndarray  # ascending positive indices
    pairs: list  # per-positive index arrays, post filter/truncation
    balances: np.ndarray  # frozen balance constant per positive
    weights: np.ndarray  # per-positive loss weight
    n_samples: int


def build_pair_plan(inst: DetectionInstance, a_sets, cfg: LossConfig) -> PairPlan:
    """Resolve pair sets against ``cfg``: margin-filter, truncate to the top
    ``q`` scores, and pin each positive's balance constant at the current
    logits."""
    pos = inst.positives
    if pos.size == 0:
        raise ValueError("pair plans need at least one positive")
    sets = _pair_sets(a_sets)
    if cfg.positive_weights is not None and cfg.positive_weights.size != pos.size:
        raise ConfigError(
            f"positive_weights has {cfg.positive_weights.size} entries "
            f"for {pos.size} positives"
        )
    weights = (
        np.ones(pos.size) if cfg.positive_weights is None else cfg.positive_weights.copy()
    )
    pairs = []
    balances = np.empty(pos.size)
    for k, u in enumerate(pos):
        u = int(u)
        try:
            p = np.asarray(sets[u], dtype=np.int64).reshape(-1)
        except KeyError:
            raise ValueError(f"pair sets must cover every positive; missing {u}") from None
        if isinstance(cfg.balance, ValidNegativeCount):
            p = valid_negative_filter(u, inst, p, cfg.balance.threshold)
        if cfg.max_pairs_q is not None and p.size > cfg.max_pairs_q:
            p = top_q_truncate(u, inst, p, cfg.max_pairs_q)
        pairs.append(p)
        balances[k] = _balance_value(u, inst, p, cfg)
    return PairPlan(
        positives=pos, pairs=pairs, balances=balances, weights=weights, n_samples=len(inst)
    )


def evaluate_pair_plan(logits, plan: PairPlan, cfg: LossConfig) -> tuple[float, GradientVector]:
    """Loss and gradients of a frozen plan at the given logits.

    Per positive: ``w_u * sum_v D(logit_v - logit_u) / BC_u`` with ``BC_u``
    taken from the plan; the total is averaged over the plan's positives.
    Accumulation runs in ascending positive order, so the result is
    deterministic regardless of how callers parallelize upstream.
    """
    logits = np.asarray(logits, dtype=np.float64).reshape(-1)
    if logits.size != plan.n_samples:
        raise ValueError("logits do not match the plan's instance size")
    grads = np.zeros(plan.n_samples)
    total = 0.0
    for u, p, bc, w in zip(plan.positives, plan.pairs, plan.balances, plan.weights):
        if p.size == 0:
            continue
        x = logits[p] - logits[int(u)]
        num = float(np.sum(cfg.distance.value(x)))
        if bc == 0.0:
            if num == 0.0:
                continue
            raise DegenerateDenominatorError(
                f"zero balance constant with error mass {num} for positive {int(u)}"
            )
        total += w * (num / bc)
        per_pair = w * cfg.distance.grad(x) / bc
        np.add.at(grads, p, per_pair)
        grads[int(u)] -= float(np.sum(per_pair))
    n_pos = int(plan.positives.size)
    return total / n_pos, GradientVector(grads / n_pos)


def ape_loss(inst: DetectionInstance, a_sets, cfg: LossConfig) -> tuple[float, GradientVector]:
    """Adaptive pairwise error: weighted mean per-positive pairwise error.

    ``a_sets`` maps each positive to its pair set (typically from
    ``assign.arps``, where lower-IoU positives join the negatives). Pair
    sets are margin-filtered and truncated per ``cfg`` before evaluation;
    the loss is ``mean_u w_u * pairwise_error(u)`` over all positives and
    the gradient vector aggregates every per-pair contribution.
    """
    plan = build_pair_plan(inst, a_sets, cfg)
    return evaluate_pair_plan(inst.logits, plan, cfg)


def plain_negative_sets(inst: DetectionInstance) -> dict:
    """The non-adaptive pairing: every positive paired with all negatives."""
    neg = inst.negatives
    return {int(u): neg.copy() for u in inst.positives}
