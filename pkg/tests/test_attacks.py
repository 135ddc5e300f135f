"""Attack algorithms: exact spec traces, guarantees, and shared properties.

All indices are zero-based here; the promoted/reference alternatives from
worked examples are translated accordingly.
"""

import warnings
from contextlib import contextmanager

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pcmanip.attacks import (
    ALPHA_HIGH,
    ALPHA_LOW,
    ATTACKS,
    AttackConfig,
    PromotionNotGuaranteedWarning,
    attack_advanced,
    attack_basic,
    attack_naive,
    draw_alpha,
    select_targets,
)
from pcmanip.core import build_matrix, consistent_from_weights, priorities, priority_gmm
from pcmanip.errors import PromotedEqualsReferenceError

from conftest import make_reciprocal

seeds = st.integers(0, 2**32 - 1)
orders = st.integers(3, 9)
algos = st.sampled_from(sorted(ATTACKS))


def c3() -> "np.ndarray":
    return build_matrix([[1, 2, 2], [0.5, 1, 1], [0.5, 1, 1]])


@contextmanager
def promotion_warning_ok():
    """Property tests run the naive attack with arbitrary alphas; whether
    its advisory fires depends on the drawn matrix, so just silence it."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PromotionNotGuaranteedWarning)
        yield


class TestAttackConfig:
    def test_promoted_equals_reference(self):
        with pytest.raises(PromotedEqualsReferenceError):
            AttackConfig(p=1, r=1, alpha=2.0)

    def test_alpha_positive(self):
        with pytest.raises(ValueError):
            AttackConfig(p=0, r=1, alpha=0.0)
        with pytest.raises(ValueError):
            AttackConfig(p=0, r=1, alpha=-3.0)

    def test_method_checked(self):
        with pytest.raises(ValueError):
            AttackConfig(p=0, r=1, alpha=2.0, method="median")
        assert AttackConfig(p=0, r=1, alpha=2.0).method == "gmm"

    def test_out_of_range_indices(self):
        cfg = AttackConfig(p=5, r=0, alpha=2.0)
        with pytest.raises(IndexError):
            attack_naive(c3(), cfg)

    def test_draw_alpha_range(self):
        rng = np.random.default_rng(0)
        vals = [draw_alpha(rng) for _ in range(500)]
        assert all(ALPHA_LOW <= v < ALPHA_HIGH for v in vals)
        assert max(vals) > 4.5 and min(vals) < 1.5


class TestNaive:
    def test_exact_substitution(self):
        cfg = AttackConfig(p=1, r=0, alpha=3.0)
        out = attack_naive(c3(), cfg)
        np.testing.assert_allclose(
            out.attacked.values, [[1, 1 / 3, 2], [3, 1, 3], [0.5, 1 / 3, 1]]
        )
        assert out.algorithm == "naive"
        assert out.steps_taken == 2
        assert sorted(out.modified_pairs) == [(0, 1), (1, 0), (1, 2), (2, 1)]

    def test_modified_pair_count(self):
        C = make_reciprocal(6, 42)
        with pytest.warns(PromotionNotGuaranteedWarning):
            out = attack_naive(C, AttackConfig(p=2, r=0, alpha=1.2))
        assert len(out.modified_pairs) == 2 * (6 - 1)
        assert out.steps_taken == 5

    def test_gmm_promotion_example(self):
        C = consistent_from_weights(np.array([0.4, 0.1, 0.2, 0.2, 0.1]))
        alpha = 5.0  # max entry is 0.4 / 0.1 = 4
        out = attack_naive(C, AttackConfig(p=1, r=0, alpha=alpha))
        assert priority_gmm(out.attacked).ranking[0] == 1
        assert out.success

    def test_warning_when_alpha_small(self):
        C = c3()
        with pytest.warns(PromotionNotGuaranteedWarning):
            attack_naive(C, AttackConfig(p=1, r=0, alpha=2.0))

    def test_no_warning_when_alpha_dominates(self, recwarn):
        attack_naive(c3(), AttackConfig(p=1, r=0, alpha=3.0))
        assert not any(
            isinstance(w.message, PromotionNotGuaranteedWarning) for w in recwarn.list
        )

    @given(orders, seeds)
    def test_gmm_argmax_property(self, n, seed):
        C = make_reciprocal(n, seed)
        alpha = float(np.max(C.values)) * 1.01
        out = attack_naive(C, AttackConfig(p=n - 1, r=0, alpha=alpha))
        assert priority_gmm(out.attacked).ranking[0] == n - 1


class TestBasic:
    def test_exact_hand_trace(self):
        cfg = AttackConfig(p=1, r=2, alpha=2.0)
        out = attack_basic(c3(), cfg)
        np.testing.assert_allclose(
            out.attacked.values, [[1, 1, 2], [1, 1, 2], [0.5, 0.5, 1]]
        )
        assert out.steps_taken == 2

    def test_alpha_one_copies_reference_row(self):
        C = make_reciprocal(5, 9)
        out = attack_basic(C, AttackConfig(p=3, r=1, alpha=1.0))
        A = out.attacked.values
        for i in range(5):
            if i not in (1, 3):
                assert A[3, i] == C.values[1, i]
        # Row p is now proportional to row r, so their weights tie up to
        # the alpha factor; with alpha=1 the two rows rank equally.
        w = priority_gmm(out.attacked).weights
        assert w[3] == pytest.approx(w[1], rel=1e-9)

    def test_gmm_weight_increases(self):
        C = make_reciprocal(6, 77)
        before = priority_gmm(C).weights
        r = int(np.argmax(before))
        p = (r + 1) % 6
        out = attack_basic(C, AttackConfig(p=p, r=r, alpha=3.0))
        after = priority_gmm(out.attacked).weights
        assert after[p] > before[p]

    @given(orders, seeds)
    def test_row_is_scaled_reference(self, n, seed):
        C = make_reciprocal(n, seed)
        alpha = 2.5
        out = attack_basic(C, AttackConfig(p=0, r=n - 1, alpha=alpha))
        A = out.attacked.values
        for i in range(n):
            if i in (0, n - 1):
                continue
            assert A[0, i] == pytest.approx(alpha * C.values[n - 1, i], rel=1e-15)
        assert A[0, n - 1] == pytest.approx(alpha, rel=1e-15)


class TestAdvanced:
    def test_stops_after_first_update(self):
        # Near-tied weights with a strong alpha: one entry update flips the
        # ranking, so exactly one pair (plus its reciprocal) changes.
        C = consistent_from_weights(np.array([0.26, 0.25, 0.24, 0.25]))
        out = attack_advanced(C, AttackConfig(p=1, r=0, alpha=5.0))
        assert out.steps_taken == 1
        assert out.success
        assert out.modified_pairs == [(1, 0), (0, 1)]
        # Entries beyond the stop index are untouched.
        assert out.attacked.values[1, 2] == C.values[1, 2]
        assert out.attacked.values[1, 3] == C.values[1, 3]

    def test_failure_runs_all_steps(self):
        # A dominant reference and alpha < 1 cannot flip the ranking even
        # after the whole row is rewritten.
        C = consistent_from_weights(np.array([0.9, 0.03, 0.03, 0.04]))
        cfg = AttackConfig(p=1, r=0, alpha=0.5)
        out = attack_advanced(C, cfg)
        assert out.steps_taken == 3
        assert not out.success
        w = priority_gmm(out.attacked).weights
        assert w[1] < w[0]

    def test_failed_advance_equals_basic(self):
        C = consistent_from_weights(np.array([0.9, 0.03, 0.03, 0.04]))
        adv = attack_advanced(C, AttackConfig(p=1, r=0, alpha=0.5))
        bas = attack_basic(C, AttackConfig(p=1, r=0, alpha=0.5))
        np.testing.assert_array_equal(adv.attacked.values, bas.attacked.values)
        assert adv.modified_pairs == bas.modified_pairs

    def test_promoted_equals_reference(self):
        with pytest.raises(PromotedEqualsReferenceError):
            attack_advanced(c3(), AttackConfig(p=2, r=2, alpha=2.0))

    @given(orders, seeds, st.sampled_from(["evm", "gmm"]))
    def test_stop_postcondition(self, n, seed, method):
        C = make_reciprocal(n, seed)
        w = priorities(C, method).weights
        r = int(np.argmax(w))
        p = (r + 1) % n
        out = attack_advanced(C, AttackConfig(p=p, r=r, alpha=4.0, method=method))
        w2 = priorities(out.attacked, method).weights
        if out.success:
            assert w2[p] > w2[r]
        else:
            assert out.steps_taken == n - 1

    @given(orders, seeds)
    def test_steps_bounded(self, n, seed):
        C = make_reciprocal(n, seed)
        out = attack_advanced(C, AttackConfig(p=0, r=1, alpha=2.0))
        assert 1 <= out.steps_taken <= n - 1
        assert len(out.modified_pairs) == 2 * out.steps_taken


class TestSharedProperties:
    @given(algos, orders, seeds)
    def test_output_is_valid_reciprocal(self, algo, n, seed):
        C = make_reciprocal(n, seed)
        with promotion_warning_ok():
            out = ATTACKS[algo](C, AttackConfig(p=1, r=0, alpha=1.5))
        rebuilt = build_matrix(out.attacked.values)
        np.testing.assert_array_equal(rebuilt.values, out.attacked.values)

    @given(algos, orders, seeds)
    def test_locality(self, algo, n, seed):
        C = make_reciprocal(n, seed)
        p = n - 1
        with promotion_warning_ok():
            out = ATTACKS[algo](C, AttackConfig(p=p, r=0, alpha=1.5))
        diff = out.attacked.values != C.values
        diff[p, :] = False
        diff[:, p] = False
        assert not diff.any()

    @given(algos, orders, seeds)
    def test_modified_pairs_in_row_col_p(self, algo, n, seed):
        C = make_reciprocal(n, seed)
        with promotion_warning_ok():
            out = ATTACKS[algo](C, AttackConfig(p=2, r=0, alpha=1.3))
        for i, j in out.modified_pairs:
            assert (i == 2 or j == 2) and i != j


class TestSelectTargets:
    def test_reference_is_argmax(self):
        C = consistent_from_weights(np.array([0.6, 0.3, 0.1]))
        rng = np.random.default_rng(0)
        r, p = select_targets(C, rng)
        assert r == 0
        assert p in (1, 2)

    def test_tie_broken_by_lowest_index(self):
        C = build_matrix(np.ones((4, 4)))
        r, _ = select_targets(C, np.random.default_rng(3))
        assert r == 0

    def test_deterministic_given_stream(self):
        C = make_reciprocal(5, 1234)
        a = select_targets(C, np.random.default_rng(42))
        b = select_targets(C, np.random.default_rng(42))
        assert a == b

    @given(orders, seeds)
    def test_p_never_equals_r(self, n, seed):
        C = make_reciprocal(n, seed)
        r, p = select_targets(C, np.random.default_rng(seed))
        assert p != r
        assert 0 <= p < n

    def test_p_covers_all_other_indices(self):
        C = consistent_from_weights(np.array([0.1, 0.2, 0.4, 0.3]))
        rng = np.random.default_rng(5)
        seen = {select_targets(C, rng)[1] for _ in range(200)}
        assert seen == {0, 1, 3}
