import numpy as np
import pytest
from sklearn.base import clone

from sgevo import (
    PatternPredictor,
    SubgraphPredictor,
    make_periodic_blocks,
    make_triadic_closure,
)


SMALL = dict(snapshots=3, k=5, dim=8, blocks=1, heads=1, epochs=1,
             pairs_per_snapshot=40, batch_size=16, alpha=0.05,
             test_pairs=30, seed=0)

PATTERN_SMALL = dict(k=5, dim=8, blocks=1, heads=1, epochs=1,
                     pairs_per_snapshot=400, batch_size=32, alpha=0.05,
                     test_pairs=60, seed=0)


@pytest.fixture(scope="module")
def fitted_structure():
    graph = make_triadic_closure(num_nodes=40, T=3, seed=0)
    return SubgraphPredictor(**SMALL).fit(graph), graph


@pytest.fixture(scope="module")
def fitted_pattern():
    graph = make_periodic_blocks(blocks=12, T=10, seed=0)
    return PatternPredictor(pattern="densify", **PATTERN_SMALL).fit(graph), graph


# ----- scikit-learn API conventions ------------------------------------------------

def test_get_params_round_trips():
    est = SubgraphPredictor(**SMALL)
    params = est.get_params()
    assert params["dim"] == 8 and params["snapshots"] == 3
    est.set_params(dim=16)
    assert est.get_params()["dim"] == 16


def test_clone_copies_hyperparameters_only(fitted_structure):
    est, _ = fitted_structure
    fresh = clone(est)
    assert fresh.get_params() == est.get_params()
    assert not hasattr(fresh, "model_")


def test_constructor_does_not_validate():
    # bad values surface at fit time, per the estimator contract
    est = SubgraphPredictor(dim=-1)
    assert est.dim == -1
    with pytest.raises(ValueError, match="dim"):
        est.fit(make_triadic_closure(num_nodes=40, T=3, seed=0))


def test_pattern_get_params_includes_pattern_args():
    est = PatternPredictor(pattern="densify", pattern_params={"threshold": 1})
    params = est.get_params()
    assert params["pattern"] == "densify"
    assert params["pattern_params"] == {"threshold": 1}


# ----- structure estimator -----------------------------------------------------------

def test_structure_fit_sets_state(fitted_structure):
    est, _ = fitted_structure
    assert hasattr(est, "model_") and hasattr(est, "history_")
    assert est.test_auc_ == est.history_[-1].auc
    assert est.score() == est.test_auc_
    assert len(est.snapshots_) == 3


def test_structure_predict_proba_shapes(fitted_structure):
    est, _ = fitted_structure
    probs = est.predict_proba([[0, 1, 2], [3, 4]])
    assert probs[0].shape == (3, 3) and probs[1].shape == (2, 2)
    for p in probs:
        assert np.all((p >= 0) & (p <= 1))
        assert np.array_equal(p, p.T)


def test_structure_predict_thresholds(fitted_structure):
    est, _ = fitted_structure
    hard = est.predict([[0, 1, 2]], threshold=0.0)[0]
    off = np.ones((3, 3)) - np.eye(3)
    assert np.array_equal(hard * off, off)  # every off-diagonal prob > 0
    none = est.predict([[0, 1, 2]], threshold=1.0)[0]
    assert not np.any(none)


def test_structure_predict_on_chosen_snapshot(fitted_structure):
    est, _ = fitted_structure
    early = est.predict_proba([[0, 1, 2]], snapshot=est.snapshots_[0])[0]
    late = est.predict_proba([[0, 1, 2]])[0]
    assert early.shape == late.shape


def test_structure_rejects_bad_node_sets(fitted_structure):
    est, _ = fitted_structure
    with pytest.raises(ValueError, match="duplicates"):
        est.predict_proba([[1, 1, 2]])
    with pytest.raises(ValueError, match="node_sets"):
        est.predict_proba([[0, 1, 2, 3, 4, 5]])  # larger than k
    with pytest.raises(ValueError, match="node_sets"):
        est.predict_proba([[-1, 2]])
    with pytest.raises(ValueError, match="node_sets"):
        est.predict_proba([[0, 10_000]])


# ----- pattern estimator ---------------------------------------------------------------

def test_pattern_fit_sets_state(fitted_pattern):
    est, _ = fitted_pattern
    assert est.model_.task == "pattern"
    assert est.score() == est.history_[-1].auc
    assert len(est.test_pairs_) == len(est.test_labels_)


def test_pattern_predict_proba_vector(fitted_pattern):
    est, _ = fitted_pattern
    probs = est.predict_proba([[0, 1, 2], [6, 7, 8, 9]])
    assert probs.shape == (2,)
    assert np.all((probs >= 0) & (probs <= 1))
    hard = est.predict([[0, 1, 2], [6, 7, 8, 9]])
    assert set(hard) <= {0, 1}


def test_pattern_unknown_kind_fails_at_fit():
    est = PatternPredictor(pattern="nope", **PATTERN_SMALL)
    with pytest.raises(ValueError, match="unknown pattern kind"):
        est.fit(make_periodic_blocks(blocks=12, T=10, seed=0))


def test_refit_with_same_seed_reproduces(fitted_structure):
    est, graph = fitted_structure
    other = clone(est).fit(graph)
    assert other.test_auc_ == est.test_auc_
