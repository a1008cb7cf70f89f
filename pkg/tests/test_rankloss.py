"""Tests for the pairwise ranking loss: per-positive precision terms, the
error-driven update path, frozen pair plans, and the closed-form gradients."""

import numpy as np
import pytest

from rankpair.distance import CeSigmoid, PiecewiseStep, Sigmoid
from rankpair.errors import ConfigError, DegenerateDenominatorError
from rankpair.rankloss import (
    DEFAULT_MAX_PAIRS_Q,
    DEFAULT_VALID_NEG_THRESHOLD,
    DetectionInstance,
    GradientVector,
    LossConfig,
    RankSum,
    Role,
    ValidNegativeCount,
    ape_loss,
    balance_from_dict,
    balance_to_dict,
    build_pair_plan,
    error_driven_gradients,
    evaluate_pair_plan,
    loss_config_from_dict,
    loss_config_to_dict,
    pairwise_error_loss,
    plain_negative_sets,
    precision_loss,
    rank_sum_balance,
    top_q_truncate,
    valid_negative_filter,
)


def _instance(logits, roles, ious=None):
    logits = np.asarray(logits, dtype=float)
    roles = np.asarray(roles, dtype=int)
    if ious is None:
        ious = np.where(roles == 1, 0.9, 0.0)
    return DetectionInstance(logits=logits, roles=roles, ious=ious)


class TestDetectionInstance:
    def test_valid_construction(self):
        inst = _instance([0.5, -0.5], [1, 0])
        assert len(inst) == 2
        assert inst.n_pos == 1
        np.testing.assert_array_equal(inst.instance_ids, [-1, -1])
        np.testing.assert_array_equal(inst.positives, [0])
        np.testing.assert_array_equal(inst.negatives, [1])

    def test_role_values(self):
        assert Role.NEGATIVE == 0
        assert Role.POSITIVE == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            DetectionInstance(logits=np.array([]), roles=np.array([]), ious=np.array([]))

    def test_bad_roles_rejected(self):
        with pytest.raises(ValueError):
            _instance([0.5, -0.5], [1, 2])

    def test_bad_iou_rejected(self):
        with pytest.raises(ValueError):
            _instance([0.5, -0.5], [1, 0], ious=[1.5, 0.0])

    def test_non_finite_logit_rejected(self):
        with pytest.raises(ValueError):
            _instance([np.nan, 0.0], [1, 0])

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            DetectionInstance(
                logits=np.zeros(3), roles=np.array([1, 0]), ious=np.array([0.9, 0.0])
            )

    def test_misaligned_pred_boxes_rejected(self):
        with pytest.raises(ValueError):
            DetectionInstance(
                logits=np.zeros(2),
                roles=np.array([1, 0]),
                ious=np.array([0.9, 0.0]),
                pred_boxes=np.zeros((3, 4)),
            )


class TestGradientVector:
    def test_norm(self):
        vec = GradientVector(np.array([3.0, 4.0]))
        assert vec.norm() == 5.0

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            GradientVector(np.array([np.inf, 0.0]))


class TestPrecisionLoss:
    def test_lone_positive_no_error(self):
        inst = _instance([2.0], [1])
        assert precision_loss(0, inst, PiecewiseStep(0.5)) == 0.0

    def test_equal_logit_fixture(self):
        # One positive and one negative tied on logit: the ramp comparator
        # sits at 1/2, so the term is 0.5 / (1 + 0.5).
        inst = _instance([0.0, 0.0], [1, 0])
        assert precision_loss(0, inst, PiecewiseStep(0.5)) == pytest.approx(1 / 3, abs=1e-15)

    def test_wide_margin_saturates(self):
        inst = _instance([10.0, -10.0], [1, 0])
        assert precision_loss(0, inst, PiecewiseStep(0.5)) == 0.0
        inst_bad = _instance([-10.0, 10.0], [1, 0])
        assert precision_loss(0, inst_bad, PiecewiseStep(0.5)) == pytest.approx(
            0.5, abs=1e-15
        )

    def test_other_positives_enter_denominator_only(self):
        # A higher-ranked positive adds rank mass but no error mass.
        inst = _instance([0.0, 0.0, 0.0], [1, 1, 0])
        value = precision_loss(0, inst, PiecewiseStep(0.5))
        # num = 0.5 (the negative), den_pos = 0.5 (the other positive).
        assert value == pytest.approx(0.5 / (1.0 + 0.5 + 0.5), abs=1e-15)

    def test_non_positive_index_rejected(self):
        inst = _instance([0.0, 0.0], [1, 0])
        with pytest.raises(ValueError):
            precision_loss(1, inst, PiecewiseStep(0.5))

    def test_out_of_range_index_rejected(self):
        inst = _instance([0.0, 0.0], [1, 0])
        with pytest.raises(ValueError):
            precision_loss(5, inst, PiecewiseStep(0.5))

    def test_without_self_rank_zero_over_zero_is_zero(self):
        inst = _instance([2.0], [1])
        assert precision_loss(0, inst, PiecewiseStep(0.5), include_self_rank=False) == 0.0

    def test_shift_invariance(self):
        rng = np.random.default_rng(7)
        logits = rng.normal(size=8)
        roles = np.array([1, 1, 0, 0, 1, 0, 0, 0])
        inst = _instance(logits, roles)
        shifted = _instance(logits + 3.25, roles)
        for u in np.flatnonzero(roles == 1):
            a = precision_loss(int(u), inst, Sigmoid(8.0))
            b = precision_loss(int(u), shifted, Sigmoid(8.0))
            assert a == pytest.approx(b, rel=1e-12)

    def test_bounded_below_one(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            roles = rng.integers(0, 2, n)
            roles[0] = 1
            inst = _instance(rng.normal(size=n), roles)
            for u in np.flatnonzero(roles == 1):
                v = precision_loss(int(u), inst, Sigmoid(8.0))
                assert 0.0 <= v < 1.0


class TestRankSumBalance:
    def test_matches_manual_sum(self):
        inst = _instance([0.3, 0.7, -0.2, 0.1], [1, 0, 0, 1])
        dist = Sigmoid(8.0)
        for u in (0, 3):
            comp = dist.rank_comparator(inst.logits - inst.logits[u])
            expected = comp.sum() - comp[u] + 1.0
            assert rank_sum_balance(u, inst, dist) == pytest.approx(expected, rel=1e-15)

    def test_self_term_toggle(self):
        inst = _instance([0.3, 0.7], [1, 0])
        dist = Sigmoid(8.0)
        with_self = rank_sum_balance(0, inst, dist, include_self=True)
        without = rank_sum_balance(0, inst, dist, include_self=False)
        assert with_self == pytest.approx(without + 1.0, rel=1e-15)

    def test_singleton_instance(self):
        inst = _instance([2.0], [1])
        assert rank_sum_balance(0, inst, PiecewiseStep(0.5)) == 1.0

    def test_ce_uses_bounded_comparator(self):
        # Rank counting under the CE distance runs through the sigmoid, so
        # the balance matches the plain sigmoid's.
        inst = _instance([0.0, 1.0, -1.0], [1, 0, 0])
        a = rank_sum_balance(0, inst, CeSigmoid(8.0))
        b = rank_sum_balance(0, inst, Sigmoid(8.0))
        assert a == b


class TestErrorDrivenGradients:
    def test_equal_logit_fixture(self):
        # Positive and negative tied at 0: loss 1/3, the positive pulled up
        # and the negative pushed down by the same 1/3.
        inst = _instance([0.0, 0.0], [1, 0])
        loss, vec = error_driven_gradients(inst, PiecewiseStep(0.5), plain_negative_sets(inst))
        assert loss == pytest.approx(1 / 3, abs=1e-15)
        np.testing.assert_allclose(vec.grads, [-1 / 3, 1 / 3], atol=1e-15)

    def test_perfect_ordering_all_zero(self):
        inst = _instance([5.0, 4.0, -5.0, -6.0], [1, 1, 0, 0])
        loss, vec = error_driven_gradients(inst, PiecewiseStep(0.5), plain_negative_sets(inst))
        assert loss == 0.0
        np.testing.assert_array_equal(vec.grads, np.zeros(4))

    def test_gradient_sums_to_zero(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            n = int(rng.integers(2, 20))
            roles = rng.integers(0, 2, n)
            roles[int(rng.integers(0, n))] = 1
            inst = _instance(rng.normal(size=n), roles)
            _, vec = error_driven_gradients(inst, Sigmoid(8.0), plain_negative_sets(inst))
            assert abs(vec.grads.sum()) <= 1e-12

    def test_loss_is_mean_of_precision_terms(self):
        rng = np.random.default_rng(29)
        roles = np.array([1, 0, 1, 0, 0, 1, 0])
        inst = _instance(rng.normal(size=7), roles)
        loss, _ = error_driven_gradients(inst, Sigmoid(8.0), plain_negative_sets(inst))
        terms = [
            precision_loss(int(u), inst, Sigmoid(8.0)) for u in np.flatnonzero(roles == 1)
        ]
        assert loss == pytest.approx(np.mean(terms), rel=1e-12)

    def test_update_magnitudes_scale_with_rank_sum(self):
        # Each pair contributes D(x) / ranksum(u) to its candidate.
        inst = _instance([0.0, 0.2, -0.1], [1, 0, 0])
        dist = Sigmoid(8.0)
        _, vec = error_driven_gradients(inst, dist, plain_negative_sets(inst))
        bc = rank_sum_balance(0, inst, dist)
        expected_1 = dist.value(inst.logits[1] - inst.logits[0]) / bc
        expected_2 = dist.value(inst.logits[2] - inst.logits[0]) / bc
        assert vec.grads[1] == pytest.approx(expected_1, rel=1e-12)
        assert vec.grads[2] == pytest.approx(expected_2, rel=1e-12)
        assert vec.grads[0] == pytest.approx(-(expected_1 + expected_2), rel=1e-12)

    def test_ce_comparator_rejected(self):
        inst = _instance([0.0, 0.0], [1, 0])
        with pytest.raises(ConfigError):
            error_driven_gradients(inst, CeSigmoid(8.0), plain_negative_sets(inst))

    def test_missing_pair_set_rejected(self):
        inst = _instance([0.0, 0.0], [1, 0])
        with pytest.raises(ValueError):
            error_driven_gradients(inst, PiecewiseStep(0.5), {})

    def test_no_positives_rejected(self):
        inst = _instance([0.0, 0.0], [0, 0])
        with pytest.raises(ValueError):
            error_driven_gradients(inst, PiecewiseStep(0.5), {})


class TestValidNegativeFilter:
    def test_keeps_only_candidates_above_margin(self):
        inst = _instance([0.0, 0.5, 0.3, 0.25, -1.0], [1, 0, 0, 0, 0])
        kept = valid_negative_filter(0, inst, np.array([1, 2, 3, 4]), threshold=0.25)
        # Strict: a gap of exactly 0.25 does not survive.
        np.testing.assert_array_equal(kept, [1, 2])

    def test_monotone_shrink_in_threshold(self):
        rng = np.random.default_rng(31)
        logits = rng.normal(size=12)
        roles = np.zeros(12, dtype=int)
        roles[0] = 1
        inst = _instance(logits, roles)
        neg = np.arange(1, 12)
        sizes = [
            valid_negative_filter(0, inst, neg, threshold=t).size
            for t in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0]
        ]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))

    def test_beyond_max_gap_empties(self):
        inst = _instance([0.0, 5.0, 3.0], [1, 0, 0])
        kept = valid_negative_filter(0, inst, np.array([1, 2]), threshold=100.0)
        assert kept.size == 0

    def test_negative_threshold_rejected(self):
        inst = _instance([0.0, 0.0], [1, 0])
        with pytest.raises(ValueError):
            valid_negative_filter(0, inst, np.array([1]), threshold=-0.1)


class TestTopQTruncate:
    def test_tie_fixture(self):
        # Two-way tie at 0.9: stable selection keeps the earlier index.
        inst = _instance([0.1, 0.9, 0.5, 0.9], [1, 0, 0, 0])
        picked = top_q_truncate(0, inst, np.arange(4), 2)
        np.testing.assert_array_equal(picked, [1, 3])

    def test_q_at_least_size_is_identity(self):
        inst = _instance([0.0, 0.3, 0.2, 0.1, 0.4, 0.5, 0.6, 0.7], [1, 0, 0, 0, 0, 0, 0, 0])
        idx = np.array([4, 2, 7])
        np.testing.assert_array_equal(top_q_truncate(0, inst, idx, 3), [2, 4, 7])
        np.testing.assert_array_equal(top_q_truncate(0, inst, idx, 50), [2, 4, 7])

    def test_result_sorted_ascending(self):
        rng = np.random.default_rng(41)
        inst = _instance(rng.normal(size=30), np.r_[1, np.zeros(29, dtype=int)])
        picked = top_q_truncate(0, inst, np.arange(1, 30), 5)
        assert picked.size == 5
        assert np.all(np.diff(picked) > 0)

    def test_keeps_largest(self):
        inst = _instance([0.0, 0.1, 0.8, 0.3, 0.9, 0.2], [1, 0, 0, 0, 0, 0])
        picked = top_q_truncate(0, inst, np.arange(1, 6), 2)
        np.testing.assert_array_equal(picked, [2, 4])

    def test_bad_q_rejected(self):
        inst = _instance([0.0, 0.1], [1, 0])
        with pytest.raises(ValueError):
            top_q_truncate(0, inst, np.array([1]), 0)


class TestPairwiseErrorLoss:
    def test_empty_pair_set_zero(self):
        inst = _instance([2.0], [1])
        loss, contrib = pairwise_error_loss(0, inst, np.array([], dtype=int), LossConfig())
        assert loss == 0.0
        np.testing.assert_array_equal(contrib, np.zeros(1))

    def test_closed_form_gradient_on_positive(self):
        # With a frozen balance, d loss / d logit_u = -(sum of slopes) / BC.
        inst = _instance([0.3, 0.6, -0.1], [1, 0, 0])
        cfg = LossConfig(distance=CeSigmoid(8.0))
        loss, contrib = pairwise_error_loss(0, inst, np.array([1, 2]), cfg)
        x = inst.logits[[1, 2]] - inst.logits[0]
        bc = rank_sum_balance(0, inst, cfg.distance)
        slopes = cfg.distance.grad(x)
        assert contrib[0] == pytest.approx(-slopes.sum() / bc, rel=1e-12)
        np.testing.assert_allclose(contrib[[1, 2]], slopes / bc, rtol=1e-12)
        assert loss == pytest.approx(cfg.distance.value(x).sum() / bc, rel=1e-12)

    def test_count_balance_filters_pairs(self):
        inst = _instance([0.0, 0.5, 0.3], [1, 0, 0])
        dist = CeSigmoid(8.0)
        wide = LossConfig(distance=dist, balance=ValidNegativeCount(0.25))
        tight = LossConfig(distance=dist, balance=ValidNegativeCount(0.4))
        loss_wide, _ = pairwise_error_loss(0, inst, np.array([1, 2]), wide)
        loss_tight, _ = pairwise_error_loss(0, inst, np.array([1, 2]), tight)
        # Both negatives clear the 0.25 margin; only one clears 0.4.
        assert loss_wide == pytest.approx(dist.value(np.array([0.5, 0.3])).sum() / 2, rel=1e-12)
        assert loss_tight == pytest.approx(float(dist.value(0.5)), rel=1e-12)

    def test_margin_beyond_max_gap_gives_zero(self):
        inst = _instance([0.0, 0.5, 0.3], [1, 0, 0])
        cfg = LossConfig(distance=CeSigmoid(8.0), balance=ValidNegativeCount(10.0))
        loss, contrib = pairwise_error_loss(0, inst, np.array([1, 2]), cfg)
        assert loss == 0.0
        np.testing.assert_array_equal(contrib, np.zeros(3))

    def test_live_rank_sum_never_degenerate(self):
        # The self term keeps the denominator >= 1 even when the positive is
        # fully misranked.
        inst = _instance([0.0, 10.0], [1, 0])
        cfg = LossConfig(distance=PiecewiseStep(0.5))
        loss, _ = pairwise_error_loss(0, inst, np.array([1]), cfg)
        assert loss == pytest.approx(0.5, abs=1e-15)


class TestPairPlan:
    def test_build_records_membership_and_balance(self):
        inst = _instance([0.5, 0.8, -0.3, 0.1], [1, 0, 0, 1])
        cfg = LossConfig(distance=CeSigmoid(8.0))
        plan = build_pair_plan(inst, plain_negative_sets(inst), cfg)
        np.testing.assert_array_equal(plan.positives, [0, 3])
        assert plan.n_samples == 4
        for row, u in enumerate(plan.positives):
            np.testing.assert_array_equal(plan.pairs[row], [1, 2])
            assert plan.balances[row] == pytest.approx(
                rank_sum_balance(int(u), inst, cfg.distance), rel=1e-15
            )

    def test_truncation_applies_per_positive(self):
        inst = _instance([0.0, 0.9, 0.5, 0.9, 0.1], [1, 0, 0, 0, 0])
        cfg = LossConfig(distance=CeSigmoid(8.0), max_pairs_q=2)
        plan = build_pair_plan(inst, plain_negative_sets(inst), cfg)
        np.testing.assert_array_equal(plan.pairs[0], [1, 3])

    def test_evaluate_differentiates_only_distances(self):
        # The plan pins membership and balance; finite differences on the
        # frozen evaluation must match the analytic gradients.
        inst = _instance([0.5, 0.8, -0.3], [1, 0, 0])
        cfg = LossConfig(distance=CeSigmoid(8.0))
        plan = build_pair_plan(inst, plain_negative_sets(inst), cfg)
        base, vec = evaluate_pair_plan(inst.logits, plan, cfg)
        moved, _ = evaluate_pair_plan(inst.logits + np.array([0.1, 0.0, 0.0]), plan, cfg)
        assert moved != base
        eps = 1e-6
        for k in range(3):
            bump = np.zeros(3)
            bump[k] = eps
            hi, _ = evaluate_pair_plan(inst.logits + bump, plan, cfg)
            lo, _ = evaluate_pair_plan(inst.logits - bump, plan, cfg)
            fd = (hi - lo) / (2 * eps)
            assert vec.grads[k] == pytest.approx(fd, abs=1e-8)

    def test_positive_weights_validated(self):
        inst = _instance([0.5, 0.8], [1, 0])
        cfg = LossConfig(distance=CeSigmoid(8.0), positive_weights=np.array([0.5, 0.5]))
        with pytest.raises(ConfigError):
            build_pair_plan(inst, plain_negative_sets(inst), cfg)

    def test_weighted_mean(self):
        inst = _instance([0.5, 0.8, -0.3, 0.1], [1, 0, 0, 1])
        dist = CeSigmoid(8.0)
        sets = plain_negative_sets(inst)
        flat = LossConfig(distance=dist)
        terms = [
            pairwise_error_loss(int(u), inst, sets[int(u)], flat)[0] for u in (0, 3)
        ]
        base, _ = ape_loss(inst, sets, flat)
        assert base == pytest.approx(np.mean(terms), rel=1e-12)
        skewed_cfg = LossConfig(distance=dist, positive_weights=np.array([1.0, 0.0]))
        skewed, _ = ape_loss(inst, sets, skewed_cfg)
        # Weight mass sits entirely on positive 0; the mean still divides by
        # the number of positives.
        assert skewed == pytest.approx(terms[0] / 2.0, rel=1e-12)

    def test_frozen_zero_balance_detected(self):
        # Freeze a plan where the positive sits far above its negative: the
        # ramp comparator contributes 0 and the self term is disabled, so the
        # pinned balance is 0. Pushing the negative above the positive then
        # creates error mass over a zero denominator.
        inst = _instance([5.0, -5.0], [1, 0])
        cfg = LossConfig(distance=PiecewiseStep(0.5), include_self_rank=False)
        plan = build_pair_plan(inst, plain_negative_sets(inst), cfg)
        assert plan.balances[0] == 0.0
        base, vec = evaluate_pair_plan(inst.logits, plan, cfg)
        assert base == 0.0
        with pytest.raises(DegenerateDenominatorError):
            evaluate_pair_plan(np.array([-5.0, 5.0]), plan, cfg)

    def test_logit_size_mismatch_rejected(self):
        inst = _instance([0.5, 0.8], [1, 0])
        cfg = LossConfig()
        plan = build_pair_plan(inst, plain_negative_sets(inst), cfg)
        with pytest.raises(ValueError):
            evaluate_pair_plan(np.zeros(3), plan, cfg)

    def test_no_positives_rejected(self):
        inst = _instance([0.5, 0.8], [0, 0])
        with pytest.raises(ValueError):
            build_pair_plan(inst, {}, LossConfig())


class TestApeLoss:
    def test_matches_plan_evaluation(self):
        rng = np.random.default_rng(61)
        roles = np.array([1, 0, 0, 1, 0, 0, 0, 1])
        inst = _instance(rng.normal(size=8), roles)
        cfg = LossConfig(distance=CeSigmoid(8.0))
        sets = plain_negative_sets(inst)
        loss, vec = ape_loss(inst, sets, cfg)
        plan = build_pair_plan(inst, sets, cfg)
        loss2, vec2 = evaluate_pair_plan(inst.logits, plan, cfg)
        assert loss == loss2
        np.testing.assert_array_equal(vec.grads, vec2.grads)

    def test_two_positive_hand_trace(self):
        # Two positives scored 0.9 and 0.5 paired against each other (as the
        # adaptive sets do when a weaker positive joins the negatives). Each
        # pair's comparator at gap +-0.4 enters against balance 1 + S(gap).
        dist = Sigmoid(8.0)
        inst = DetectionInstance(
            logits=np.array([0.9, 0.5]),
            roles=np.array([1, 1]),
            ious=np.array([0.9, 0.9]),
        )
        loss, _ = ape_loss(inst, {0: [1], 1: [0]}, LossConfig(distance=dist))
        s_hi = 1.0 / (1.0 + np.exp(8.0 * 0.4))  # S(-3.2), seen by the leader
        s_lo = 1.0 / (1.0 + np.exp(-8.0 * 0.4))  # S(+3.2), seen by the trailer
        term_hi = s_hi / (1.0 + s_hi)
        term_lo = s_lo / (1.0 + s_lo)
        assert loss == pytest.approx(0.5 * (term_hi + term_lo), rel=1e-10)

    def test_shift_invariance(self):
        rng = np.random.default_rng(67)
        roles = np.array([1, 0, 1, 0, 0, 0])
        logits = rng.normal(size=6)
        cfg = LossConfig(distance=CeSigmoid(8.0))
        a, _ = ape_loss(_instance(logits, roles), plain_negative_sets(_instance(logits, roles)), cfg)
        shifted = _instance(logits + 11.0, roles)
        b, _ = ape_loss(shifted, plain_negative_sets(shifted), cfg)
        assert a == pytest.approx(b, rel=1e-12)

    def test_gradient_sums_to_zero(self):
        rng = np.random.default_rng(71)
        for _ in range(30):
            n = int(rng.integers(2, 16))
            roles = rng.integers(0, 2, n)
            roles[int(rng.integers(0, n))] = 1
            inst = _instance(rng.normal(size=n), roles)
            _, vec = ape_loss(inst, plain_negative_sets(inst), LossConfig(distance=CeSigmoid(8.0)))
            assert abs(vec.grads.sum()) <= 1e-12

    def test_plain_negative_sets_shape(self):
        inst = _instance([0.5, -0.5, 0.2], [1, 0, 1])
        sets = plain_negative_sets(inst)
        assert set(sets) == {0, 2}
        np.testing.assert_array_equal(sets[0], [1])
        np.testing.assert_array_equal(sets[2], [1])


class TestLossConfig:
    def test_defaults(self):
        cfg = LossConfig()
        assert isinstance(cfg.distance, CeSigmoid)
        assert isinstance(cfg.balance, RankSum)
        assert cfg.max_pairs_q == DEFAULT_MAX_PAIRS_Q
        assert cfg.detach_balance is True
        assert cfg.include_self_rank is True
        assert cfg.positive_weights is None

    def test_ce_requires_detached_balance(self):
        with pytest.raises(ConfigError):
            LossConfig(distance=CeSigmoid(8.0), detach_balance=False)

    def test_bounded_distance_allows_attached_balance(self):
        cfg = LossConfig(distance=Sigmoid(8.0), detach_balance=False)
        assert cfg.detach_balance is False

    def test_bad_q_rejected(self):
        with pytest.raises(ConfigError):
            LossConfig(max_pairs_q=0)

    def test_unlimited_q_allowed(self):
        assert LossConfig(max_pairs_q=None).max_pairs_q is None

    def test_negative_weight_rejected(self):
        with pytest.raises(ConfigError):
            LossConfig(positive_weights=np.array([1.0, -0.5]))

    def test_dict_round_trip(self):
        cfg = LossConfig(distance=PiecewiseStep(0.25), max_pairs_q=64)
        rebuilt = loss_config_from_dict(loss_config_to_dict(cfg))
        assert isinstance(rebuilt.distance, PiecewiseStep)
        assert rebuilt.distance.delta == 0.25
        assert rebuilt.max_pairs_q == 64

    def test_count_balance_round_trip(self):
        cfg = LossConfig(
            distance=Sigmoid(4.0), balance=ValidNegativeCount(0.5), max_pairs_q=None
        )
        rebuilt = loss_config_from_dict(loss_config_to_dict(cfg))
        assert isinstance(rebuilt.balance, ValidNegativeCount)
        assert rebuilt.balance.threshold == 0.5
        assert rebuilt.max_pairs_q is None

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            loss_config_from_dict({"distance": {"type": "ce_sigmoid"}, "mystery": 1})

    def test_balance_dict_forms(self):
        assert isinstance(balance_from_dict("rank_sum"), RankSum)
        bal = balance_from_dict({"valid_neg_count": {"T": 0.75}})
        assert isinstance(bal, ValidNegativeCount)
        assert bal.threshold == 0.75
        assert balance_to_dict(RankSum()) == "rank_sum"
        with pytest.raises(ConfigError):
            balance_from_dict("nope")
        with pytest.raises(ConfigError):
            balance_from_dict({"valid_neg_count": {"T": 0.5, "extra": 1}})

    def test_negative_count_threshold_rejected(self):
        with pytest.raises(ConfigError):
            ValidNegativeCount(-0.5)

    def test_default_constants(self):
        assert DEFAULT_VALID_NEG_THRESHOLD == 0.25
        assert DEFAULT_MAX_PAIRS_Q == 100_000
