import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgevo import auc_score

from oracles import auc_by_pair_counting


def test_perfect_separation_is_one():
    assert auc_score([0, 0, 1, 1], [0.1, 0.2, 0.8, 0.9]) == 1.0


def test_inverted_separation_is_zero():
    assert auc_score([1, 1, 0, 0], [0.1, 0.2, 0.8, 0.9]) == 0.0


def test_hand_worked_example():
    # positives at 0.8 and 0.4, negatives at 0.6 and 0.2:
    # pairs won = (0.8>0.6) + (0.8>0.2) + (0.4>0.2) = 3 of 4
    assert auc_score([1, 0, 1, 0], [0.8, 0.6, 0.4, 0.2]) == 0.75


def test_all_tied_scores_is_half():
    assert auc_score([1, 0, 1, 0, 1], np.full(5, 0.3)) == 0.5


def test_partial_ties_count_half():
    # one win (0.9 > 0.5), one tie at 0.5 -> (1 + 0.5) / 2
    assert auc_score([1, 1, 0], [0.9, 0.5, 0.5]) == 0.75


@given(st.lists(st.tuples(st.integers(0, 1),
                          st.floats(-100, 100, allow_nan=False)),
                min_size=2, max_size=60))
@settings(max_examples=150, deadline=None)
def test_matches_pair_counting_oracle(pairs):
    labels = np.array([p[0] for p in pairs])
    scores = np.array([p[1] for p in pairs])
    if labels.sum() in (0, len(labels)):
        labels[0] = 1 - labels[0]
    assert auc_score(labels, scores) == pytest.approx(
        auc_by_pair_counting(labels, scores), abs=1e-12)


def test_random_scores_near_half():
    rng = np.random.default_rng(0)
    labels = rng.integers(0, 2, size=10_000)
    scores = rng.normal(size=10_000)
    assert abs(auc_score(labels, scores) - 0.5) < 0.02


def test_score_shift_invariance():
    rng = np.random.default_rng(1)
    labels = rng.integers(0, 2, size=50)
    labels[:2] = [0, 1]
    scores = rng.normal(size=50)
    assert auc_score(labels, scores) == auc_score(labels, scores + 10.0)


def test_single_class_raises():
    with pytest.raises(ValueError, match="positive and a|one positive"):
        auc_score([1, 1, 1], [0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="positive"):
        auc_score([0, 0], [0.1, 0.2])


def test_bad_shapes_raise():
    with pytest.raises(ValueError):
        auc_score([1, 0, 1], [0.5, 0.5])
    with pytest.raises(ValueError):
        auc_score([], [])
    with pytest.raises(ValueError):
        auc_score([[1, 0]], [[0.5, 0.4]])


def test_nonbinary_labels_raise():
    with pytest.raises(ValueError, match="0 or 1"):
        auc_score([1, 2, 0], [0.1, 0.2, 0.3])
