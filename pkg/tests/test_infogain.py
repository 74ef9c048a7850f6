import math

import numpy as np
import pytest

from igp.infogain import (
    SoftLabel,
    aggregated_belief,
    degenerate_rejection_count,
    entropy,
    entropy_rows,
    expected_igp,
    info_gain,
    masked_label,
    normalize_accept,
    normalize_reject,
    pseudo_label,
    reset_degenerate_rejection_count,
)

from .conftest import random_soft_label
from .oracles import brute_force_info_gain

S1 = [0.5, 0.25, 0.25]
S2 = [0.4, 0.3, 0.3]


class TestEntropy:
    def test_uniform_is_log2_c(self):
        for c in range(2, 9):
            assert entropy([1 / c] * c) == pytest.approx(math.log2(c), abs=1e-12)

    def test_one_hot_is_zero(self):
        assert entropy([1.0, 0.0, 0.0]) == 0.0

    def test_hand_computed_values(self):
        assert entropy(S1) == pytest.approx(1.5, abs=1e-12)
        assert entropy([0.5, 0.5]) == pytest.approx(1.0, abs=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="sums to"):
            entropy([0.5, 0.4])
        with pytest.raises(ValueError, match="negative"):
            entropy([1.2, -0.2])
        with pytest.raises(ValueError, match="non-finite"):
            entropy([np.nan, 1.0])

    def test_entropy_rows_clamps_and_renormalizes(self):
        rows = np.array([[0.5, 0.5, 0.0], [-0.1, 0.6, 0.5]])
        got = entropy_rows(rows)
        assert got[0] == pytest.approx(1.0, abs=1e-12)
        # second row clamps to [0, 0.6, 0.5] then renormalizes
        p = np.array([0.0, 0.6, 0.5]) / 1.1
        assert got[1] == pytest.approx(entropy(p), abs=1e-12)


class TestSoftLabel:
    def test_rejected_must_have_zero_mass(self):
        with pytest.raises(ValueError, match="zero probability"):
            SoftLabel(np.array([0.5, 0.3, 0.2]), frozenset({0}))

    def test_cannot_reject_every_class(self):
        with pytest.raises(ValueError):
            SoftLabel.uniform(3, rejected={0, 1, 2})

    def test_probs_are_immutable(self):
        lab = SoftLabel(np.array(S1))
        with pytest.raises(ValueError):
            lab.probs[0] = 0.9

    def test_hard_detection(self):
        assert SoftLabel.one_hot(4, 2).hard
        assert not SoftLabel(np.array(S1)).hard

    def test_uniform_respects_rejections(self):
        lab = SoftLabel.uniform(4, rejected={1})
        assert lab.probs.tolist() == [1 / 3, 0.0, 1 / 3, 1 / 3]


class TestPseudoLabel:
    def test_argmax(self):
        assert pseudo_label(SoftLabel(np.array(S1))) == 0

    def test_tie_breaks_to_lowest_id(self):
        assert pseudo_label(SoftLabel(np.array([0.3, 0.4, 0.3]))) == 1
        assert pseudo_label(SoftLabel(np.array([0.4, 0.4, 0.2]))) == 0

    def test_after_rejection(self):
        lab = normalize_reject(SoftLabel(np.array([0.5, 0.3, 0.2])), 0)
        assert pseudo_label(lab) == 1


class TestNormalization:
    def test_accept_collapses_to_one_hot(self):
        lab = normalize_accept(SoftLabel(np.array([0.5, 0.3, 0.2])), 0)
        assert lab.probs.tolist() == [1.0, 0.0, 0.0]
        assert lab.hard

    def test_reject_renormalizes_conditionally(self):
        lab = normalize_reject(SoftLabel(np.array([0.5, 0.3, 0.2])), 0)
        assert lab.rejected == {0}
        assert abs(lab.probs[1] - 0.6) <= 1e-12
        assert abs(lab.probs[2] - 0.4) <= 1e-12
        assert not lab.hard

    def test_reject_accumulates_and_eliminates(self):
        lab = SoftLabel(np.array([0.5, 0.3, 0.2]))
        lab = normalize_reject(lab, 0)
        lab = normalize_reject(lab, pseudo_label(lab))
        assert lab.hard
        assert lab.probs.tolist() == [0.0, 0.0, 1.0]
        assert lab.rejected == {0, 1}

    def test_uniform_variant_discards_ranking(self):
        lab = normalize_reject(SoftLabel(np.array([0.5, 0.3, 0.2])), 0, uniform=True)
        assert lab.probs.tolist() == [0.0, 0.5, 0.5]

    def test_reject_on_hard_label_errors(self):
        with pytest.raises(ValueError, match="hard"):
            normalize_reject(SoftLabel.one_hot(3, 1), 1)

    def test_double_reject_errors(self):
        lab = normalize_reject(SoftLabel(np.array([0.5, 0.3, 0.2])), 0)
        with pytest.raises(ValueError, match="already rejected"):
            normalize_reject(lab, 0)

    def test_accept_rejected_class_errors(self):
        lab = normalize_reject(SoftLabel(np.array([0.5, 0.3, 0.2])), 0)
        with pytest.raises(ValueError, match="already rejected"):
            normalize_accept(lab, 0)

    def test_operations_do_not_mutate(self):
        lab = SoftLabel(np.array([0.5, 0.3, 0.2]))
        normalize_reject(lab, 0)
        normalize_accept(lab, 0)
        assert lab.probs.tolist() == [0.5, 0.3, 0.2]
        assert lab.rejected == frozenset()


class TestMaskedLabel:
    def test_conditions_on_rejections(self):
        lab = masked_label([0.5, 0.3, 0.2], rejected={0})
        assert lab.probs[0] == 0.0
        assert lab.probs[1] == pytest.approx(0.6, abs=1e-12)

    def test_zero_mass_falls_back_to_uniform_with_counter(self):
        reset_degenerate_rejection_count()
        lab = masked_label([0.0, 0.0, 1.0], rejected={2})
        assert lab.probs.tolist() == [0.5, 0.5, 0.0]
        assert degenerate_rejection_count() == 1
        reset_degenerate_rejection_count()

    def test_saturated_prediction_stays_queryable(self):
        lab = masked_label([1.0, 0.0, 0.0])
        assert not lab.hard
        assert pseudo_label(lab) == 0
        assert lab.probs[0] > 1 - 1e-8


class TestInfoGain:
    def test_matches_brute_force_on_random_labels(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            c = int(rng.integers(2, 8))
            lab = random_soft_label(rng, c)
            assert info_gain(lab) == pytest.approx(
                brute_force_info_gain(lab), abs=1e-12
            )

    def test_reference_values(self):
        assert info_gain(SoftLabel(np.array(S1))) == pytest.approx(1.0, abs=1e-3)
        assert info_gain(SoftLabel(np.array(S2))) == pytest.approx(0.971, abs=1e-3)

    def test_higher_entropy_does_not_imply_higher_gain(self):
        h1, h2 = entropy(S1), entropy(S2)
        assert h2 > h1
        assert info_gain(SoftLabel(np.array(S1))) > info_gain(SoftLabel(np.array(S2)))

    def test_hard_label_errors(self):
        with pytest.raises(ValueError, match="hard"):
            info_gain(SoftLabel.one_hot(3, 0))

    def test_uniform_reject_variant(self):
        lab = SoftLabel(np.array([0.5, 0.3, 0.2]))
        expected = entropy(lab.probs) - 0.5 * entropy([0.0, 0.5, 0.5])
        assert info_gain(lab, uniform_reject=True) == pytest.approx(expected, abs=1e-12)


class TestAggregatedBelief:
    def test_hand_computed_mixture(self):
        ann = {
            4: SoftLabel.one_hot(2, 0),
            9: SoftLabel(np.array([0.25, 0.75])),
        }
        influences = {4: 0.5, 9: 0.25}
        q = aggregated_belief(0, ann, influences, 2)
        # 0.5*[1,0] + 0.25*[0.25,0.75] + 0.25*[0.5,0.5]
        assert q == pytest.approx([0.6875, 0.3125], abs=1e-12)

    def test_no_annotations_is_uniform(self):
        q = aggregated_belief(0, {}, {}, 4)
        assert q.tolist() == [0.25] * 4

    def test_mass_above_one_errors(self):
        ann = {1: SoftLabel.one_hot(2, 0), 2: SoftLabel.one_hot(2, 1)}
        with pytest.raises(ValueError, match="exceeds 1"):
            aggregated_belief(0, ann, {1: 0.7, 2: 0.5}, 2)

    def test_result_is_distribution(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            c = int(rng.integers(2, 6))
            ann = {i: random_soft_label(rng, c) for i in range(3)}
            w = rng.random(3)
            w = w / w.sum() * rng.random()
            q = aggregated_belief(0, ann, dict(enumerate(w)), c)
            assert q.sum() == pytest.approx(1.0, abs=1e-9)
            assert q.min() >= 0


class TestExpectedIgp:
    def test_approximate_mode_hand_computed(self):
        candidate = SoftLabel(np.array([0.7, 0.2, 0.1]))
        belief = np.array([1 / 3, 1 / 3, 1 / 3])
        w = 0.4
        shifted = belief + w * (candidate.probs - belief)
        expected = entropy(belief) - entropy(shifted)
        got = expected_igp(candidate, w, belief, mode="approximate")
        assert got == pytest.approx(expected, abs=1e-12)

    def test_exact_mode_is_branch_expectation(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            c = int(rng.integers(2, 6))
            candidate = random_soft_label(rng, c)
            belief = np.full(c, 1.0 / c)
            w = float(rng.random())
            guess = pseudo_label(candidate)
            p = float(candidate.probs[guess])
            accept = np.zeros(c)
            accept[guess] = 1.0
            reject = normalize_reject(candidate, guess).probs
            base = entropy(belief)
            uniform = np.full(c, 1.0 / c)
            expected = p * (base - entropy(belief + w * (accept - uniform))) + (
                1 - p
            ) * (base - entropy(belief + w * (reject - uniform)))
            got = expected_igp(candidate, w, belief, mode="exact")
            assert got == pytest.approx(expected, abs=1e-9)

    def test_prior_contribution_is_replaced(self):
        candidate = SoftLabel(np.array([0.1, 0.9]))
        prior = np.array([0.9, 0.1])
        belief = np.array([0.62, 0.38])  # uniform + 0.3*(prior - uniform)
        got = expected_igp(candidate, 0.3, belief, prior=prior, mode="approximate")
        shifted = belief + 0.3 * (candidate.probs - prior)
        assert got == pytest.approx(entropy(belief) - entropy(shifted), abs=1e-12)

    def test_gain_can_be_negative(self):
        # Candidate leans against a confident belief, dragging it toward
        # the maximum-entropy point.
        candidate = SoftLabel(np.array([0.1, 0.9]))
        belief = np.array([0.95, 0.05])
        assert expected_igp(candidate, 0.5, belief, mode="approximate") < 0

    def test_influence_out_of_range_errors(self):
        with pytest.raises(ValueError, match="influence"):
            expected_igp(SoftLabel(np.array([0.5, 0.5])), 1.5, np.array([0.5, 0.5]))
