"""
Tests for formation-energy estimators.
"""

import numpy as np
import pytest
from sklearn.neighbors import KNeighborsRegressor

from src.dataset import apply_training_criteria
from src.errors import EstimatorError, MissingInputError
from src.genvae import (
    CandidateVector,
    ExternalEnergyEstimator,
    FeatureSpace,
    KnnEnergyEstimator,
    leave_one_out,
)
from src.models.material import MaterialRecord

VOCAB = ("H", "Ti")


@pytest.fixture
def ti_records():
    return [
        MaterialRecord(id="a", formula="TiH2", e_form=-0.4),
        MaterialRecord(id="b", formula="TiH4", e_form=0.0),
        MaterialRecord(id="c", formula="Ti2H8", e_form=0.2),
    ]


@pytest.fixture
def space(ti_records):
    return FeatureSpace.fit(ti_records)


def _vector(h: float, ti: float) -> CandidateVector:
    return CandidateVector(vocab=VOCAB, element_counts=(h, ti))


def test_exact_hit_returns_training_energy(space, ti_records):
    estimator = KnnEnergyEstimator(space, k=2).fit(ti_records)
    assert estimator.predict(_vector(2, 1)) == pytest.approx(-0.4)


def test_exact_hits_are_averaged(space, ti_records):
    twin = MaterialRecord(id="a2", formula="TiH2", e_form=-0.2)
    estimator = KnnEnergyEstimator(space, k=2).fit(ti_records + [twin])
    assert estimator.predict(_vector(2, 1)) == pytest.approx(-0.3)


def test_exact_hits_beyond_k_are_all_averaged(space, ti_records):
    """Every coincident point counts, even when there are more than k."""
    twins = [
        MaterialRecord(id="a2", formula="TiH2", e_form=-0.2),
        MaterialRecord(id="a3", formula="TiH2", e_form=-0.6),
    ]
    estimator = KnnEnergyEstimator(space, k=1).fit(ti_records + twins)
    assert estimator.predict(_vector(2, 1)) == pytest.approx(-0.4)


def test_knn_is_a_scikit_learn_regressor(space, ti_records):
    estimator = KnnEnergyEstimator(space, k=2).fit(ti_records)
    assert isinstance(estimator._model, KNeighborsRegressor)
    assert estimator._model.get_params()["weights"] == "distance"


def test_midpoint_is_neighbor_mean(space, ti_records):
    """Equidistant neighbors get equal weight."""
    estimator = KnnEnergyEstimator(space, k=2).fit(ti_records)
    assert estimator.predict(_vector(3, 1)) == pytest.approx(-0.2)


def test_inverse_distance_weighting(space, ti_records):
    estimator = KnnEnergyEstimator(space, k=2).fit(ti_records[:2])
    # one quarter of the way from TiH2 to TiH4
    assert estimator.predict(_vector(2.5, 1)) == pytest.approx(-0.3)


def test_estimator_errors(space, ti_records):
    with pytest.raises(EstimatorError):
        KnnEnergyEstimator(space).fit([])
    with pytest.raises(EstimatorError):
        KnnEnergyEstimator(space).predict(_vector(2, 1))
    with pytest.raises(EstimatorError):
        KnnEnergyEstimator(space, k=0)


def test_predict_many(space, ti_records):
    estimator = KnnEnergyEstimator(space, k=1).fit(ti_records)
    assert estimator.predict_many([_vector(2, 1), _vector(8, 2)]) == pytest.approx([-0.4, 0.2])


def test_external_estimator_with_fallback(space, ti_records):
    fallback = KnnEnergyEstimator(space, k=2)
    estimator = ExternalEnergyEstimator({"TiH2": -0.55}, fallback=fallback).fit(ti_records)

    assert estimator.predict(_vector(2, 1)) == pytest.approx(-0.55)
    assert estimator.predict(_vector(4, 1)) == pytest.approx(0.0)


def test_external_estimator_without_fallback():
    estimator = ExternalEnergyEstimator({"H2Ti": -0.55})
    assert estimator.predict(_vector(2, 1)) == pytest.approx(-0.55)
    with pytest.raises(EstimatorError, match="No external prediction"):
        estimator.predict(_vector(4, 1))


def test_external_estimator_from_csv(tmp_path):
    path = tmp_path / "energies.csv"
    path.write_text("formula,e_form\nTiH2,-0.5\nMgH2,-0.25\n", encoding="utf-8")

    estimator = ExternalEnergyEstimator.from_csv(path)

    assert estimator.predict(_vector(2, 1)) == pytest.approx(-0.5)
    with pytest.raises(MissingInputError):
        ExternalEnergyEstimator.from_csv(tmp_path / "absent.csv")


def test_leave_one_out_on_synthetic_records(synthetic_450):
    """Held-out predictions exist for every record and errors are finite."""
    training, _ = apply_training_criteria(synthetic_450[:120])
    stats, predictions = leave_one_out(training, k=5)

    assert len(predictions) == len(training) == stats.n
    assert np.isfinite(stats.mae) and np.isfinite(stats.mse)


def test_leave_one_out_needs_two_records(ti_records):
    with pytest.raises(EstimatorError):
        leave_one_out(ti_records[:1])


def test_leave_one_out_uses_nearest_other_record(ti_records):
    """With k=1 each record is predicted by its nearest remaining neighbor."""
    stats, predictions = leave_one_out(ti_records, k=1)

    assert predictions == pytest.approx([0.0, -0.4, 0.0])
    assert stats.mae == pytest.approx(1.0 / 3)


def test_leave_one_out_clamps_k_to_remaining_records(ti_records):
    _, predictions = leave_one_out(ti_records[:2], k=5)
    assert predictions == pytest.approx([0.0, -0.4])
