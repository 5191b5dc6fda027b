import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskselect.core import (
    DataError,
    DimensionError,
    LabelRangeError,
    LogLoss,
    Mask,
    MeanSquaredError,
    SelectionError,
    apply_mask,
    evaluate_loss,
    mask_support,
    select_columns,
)


class TestEvaluateLoss:
    def test_mse_identical_vectors_is_zero(self):
        assert evaluate_loss(np.array([1.0, 2.0]), np.array([1.0, 2.0]), MeanSquaredError()) == 0.0

    def test_mse_hand_computed(self):
        # ((0-1)^2 + (1-1)^2) / 2
        loss = evaluate_loss(np.array([0.0, 1.0]), np.array([1.0, 1.0]), MeanSquaredError())
        assert loss == pytest.approx(0.5)

    def test_log_loss_clips_hard_one(self):
        loss = evaluate_loss(np.array([[1.0, 0.0]]), np.array([0]), LogLoss(epsilon=1e-15))
        assert loss == pytest.approx(-math.log(1.0 - 1e-15))
        assert loss == pytest.approx(1e-15, rel=1e-2)

    def test_log_loss_true_class_probability(self):
        probs = np.array([[0.25, 0.75], [0.5, 0.5]])
        expected = -(math.log(0.75) + math.log(0.5)) / 2
        assert evaluate_loss(probs, np.array([1, 0]), LogLoss()) == pytest.approx(expected)

    def test_length_mismatch_raises(self):
        with pytest.raises(DimensionError):
            evaluate_loss(np.array([1.0, 2.0]), np.array([1.0]), MeanSquaredError())

    def test_empty_inputs_raise(self):
        with pytest.raises(DimensionError):
            evaluate_loss(np.array([]), np.array([]), MeanSquaredError())

    def test_label_out_of_range_raises(self):
        with pytest.raises(LabelRangeError):
            evaluate_loss(np.array([[0.4, 0.6]]), np.array([2]), LogLoss())

    @given(
        st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30),
        st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=30),
    )
    def test_mse_non_negative(self, preds, targets):
        n = min(len(preds), len(targets))
        loss = evaluate_loss(np.array(preds[:n]), np.array(targets[:n]), MeanSquaredError())
        assert loss >= 0.0


class TestMask:
    def test_rejects_non_binary(self):
        with pytest.raises(DataError):
            Mask(np.array([0, 2, 1]))

    def test_zeroed_twice_raises(self):
        mask = Mask(np.array([1, 1]))
        once = mask.zeroed(0)
        with pytest.raises(SelectionError):
            once.zeroed(0)

    def test_appendix_example_zeroes_second_column(self):
        mask = Mask(np.array([1, 0, 1]))
        X = np.array([[11.0, 12.0, 13.0], [21.0, 22.0, 23.0]])
        out = apply_mask(X, mask)
        assert np.array_equal(out, np.array([[11.0, 0.0, 13.0], [21.0, 0.0, 23.0]]))

    def test_all_ones_is_identity(self):
        X = np.arange(12, dtype=float).reshape(3, 4)
        assert np.array_equal(apply_mask(X, Mask.all_ones(4)), X)

    def test_all_zeros_annihilates(self):
        X = np.arange(12, dtype=float).reshape(3, 4)
        assert np.array_equal(apply_mask(X, Mask(np.zeros(4))), np.zeros((3, 4)))

    def test_apply_mask_does_not_modify_input(self):
        X = np.ones((2, 3))
        apply_mask(X, Mask(np.array([0, 1, 0])))
        assert np.array_equal(X, np.ones((2, 3)))

    def test_mask_length_mismatch(self):
        with pytest.raises(DimensionError):
            apply_mask(np.ones((2, 3)), Mask(np.array([1, 0])))

    def test_support_examples(self):
        assert mask_support(Mask(np.array([1, 0, 1]))).tolist() == [0, 2]
        assert mask_support(Mask.all_ones(4)).tolist() == [0, 1, 2, 3]
        assert mask_support(Mask(np.zeros(3))).tolist() == []

    @given(st.lists(st.sampled_from([0, 1]), min_size=1, max_size=40))
    def test_support_size_is_l0_norm(self, bits):
        mask = Mask(np.array(bits))
        assert mask_support(mask).size == sum(bits)
        assert mask.n_active == sum(bits)

    @given(
        st.integers(1, 8),
        st.integers(1, 6),
        st.lists(st.sampled_from([0, 1]), min_size=8, max_size=8),
        st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60)
    def test_apply_mask_idempotent(self, n_rows, unused, bits, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n_rows, 8))
        mask = Mask(np.array(bits))
        once = apply_mask(X, mask)
        assert np.array_equal(apply_mask(once, mask), once)


class TestSelectColumns:
    def test_selects_requested_columns(self):
        X = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        assert np.array_equal(select_columns(X, [0, 2]), np.array([[1.0, 3.0], [4.0, 6.0]]))

    def test_all_indices_is_identity(self):
        X = np.arange(6, dtype=float).reshape(2, 3)
        assert np.array_equal(select_columns(X, [0, 1, 2]), X)

    def test_middle_column(self):
        X = np.array([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        masked = apply_mask(X, Mask(np.array([0, 1, 0])))
        assert np.array_equal(select_columns(X, [1]), masked[:, [1]])

    def test_unsorted_input_returns_ascending(self):
        X = np.arange(8, dtype=float).reshape(2, 4)
        assert np.array_equal(select_columns(X, [3, 0]), X[:, [0, 3]])

    def test_empty_selection_raises(self):
        with pytest.raises(SelectionError):
            select_columns(np.ones((2, 3)), [])

    def test_out_of_range_raises(self):
        with pytest.raises(SelectionError):
            select_columns(np.ones((2, 3)), [3])

    def test_duplicate_indices_raise(self):
        with pytest.raises(SelectionError):
            select_columns(np.ones((2, 3)), [1, 1])

    @given(
        st.integers(1, 6),
        st.lists(st.sampled_from([0, 1]), min_size=1, max_size=10).filter(lambda b: sum(b) > 0),
        st.integers(0, 2**32 - 1),
    )
    @settings(max_examples=60)
    def test_equals_apply_mask_with_zero_columns_dropped(self, n_rows, bits, seed):
        rng = np.random.default_rng(seed)
        X = rng.standard_normal((n_rows, len(bits)))
        mask = Mask(np.array(bits))
        support = mask_support(mask)
        via_select = select_columns(X, support)
        via_mask = apply_mask(X, mask)[:, support]
        assert np.array_equal(via_select, via_mask)
