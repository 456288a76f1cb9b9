"""
Tests for principal component regression and the feature-subset experiment.
"""

import numpy as np
import pandas as pd
import pytest

from src.dataset import SplitSpec
from src.errors import PcrError
from src.pcr import pcr_eval, pcr_fit, subset_experiment
from src.scoring.energy import h_storage_score


def _storage_frame(seed: int, n: int = 120) -> pd.DataFrame:
    rng = np.random.default_rng(seed)
    e_form = rng.uniform(-1.0, 0.0, n)
    w_h2 = rng.uniform(0.01, 0.12, n)
    density = rng.uniform(1.0, 8.0, n)
    score = [h_storage_score(e, w) for e, w in zip(e_form, w_h2)]
    return pd.DataFrame({"e_form": e_form, "density": density, "w_h2": w_h2, "score": score})


def test_components_are_ordered_and_signed(rng):
    """Eigenvalues descend and each axis has a positive dominant loading."""
    X = rng.normal(size=(200, 4)) @ rng.normal(size=(4, 4))
    model = pcr_fit(X, rng.normal(size=200), k=4)

    assert np.all(np.diff(model.eigenvalues) <= 1e-12)
    assert model.explained_variance_ratio.sum() == pytest.approx(1.0)
    for j in range(4):
        axis = model.components[:, j]
        assert axis[np.argmax(np.abs(axis))] > 0
    assert model.components.T @ model.components == pytest.approx(np.eye(4), abs=1e-10)


def test_full_rank_reconstruction(rng):
    """All components rebuild the standardized data exactly."""
    X = rng.normal(size=(50, 3))
    model = pcr_fit(X, rng.normal(size=50), k=3)

    assert model.reconstruction_error(X) == pytest.approx(0.0, abs=1e-20)
    assert model.reconstruction_error(X, k=0) == pytest.approx(np.mean(model.standardize(X) ** 2))
    with pytest.raises(PcrError):
        model.reconstruction_error(X, k=4)


def test_linear_target_is_recovered(rng):
    X = rng.normal(size=(80, 3))
    y = 2.0 + X @ np.array([1.0, -0.5, 0.25])
    model = pcr_fit(X, y, k=3)

    assert pcr_eval(model, X, y) == pytest.approx(0.0, abs=1e-20)
    assert model.predict(X[:1])[0] == pytest.approx(y[0])


@pytest.mark.parametrize("policy,expected", [(1, 1), (2, 2), (10, 3), (1.0, 3)])
def test_k_policy(rng, policy, expected):
    """Integer k is capped at p; a threshold of 1 keeps every component."""
    X = rng.normal(size=(60, 3))
    assert pcr_fit(X, rng.normal(size=60), k=policy).k == expected


def test_variance_threshold_picks_smallest_k(rng):
    base = rng.normal(size=(300, 1))
    X = np.hstack([base, base + 0.01 * rng.normal(size=(300, 1)), rng.normal(size=(300, 1))])
    model = pcr_fit(X, rng.normal(size=300), k=0.6)

    assert model.k == 1
    assert np.cumsum(model.explained_variance_ratio)[0] >= 0.6


@pytest.mark.parametrize("policy", [0, -1, 0.0, 1.5])
def test_invalid_k_policy(rng, policy):
    with pytest.raises(PcrError):
        pcr_fit(rng.normal(size=(20, 2)), rng.normal(size=20), k=policy)


def test_fit_input_errors(rng):
    """Too few rows, constant columns and mismatched targets are rejected."""
    with pytest.raises(PcrError):
        pcr_fit(rng.normal(size=(3, 3)), rng.normal(size=3))
    with pytest.raises(PcrError, match="Constant"):
        pcr_fit(np.column_stack([rng.normal(size=10), np.ones(10)]), rng.normal(size=10))
    with pytest.raises(PcrError):
        pcr_fit(rng.normal(size=(10, 2)), rng.normal(size=9))


def test_rank_deficient_features_reduce_k(rng):
    x = rng.normal(size=40)
    model = pcr_fit(np.column_stack([x, 2.0 * x]), rng.normal(size=40), k=2)
    assert model.k == 1


def test_eval_dimension_mismatch(rng):
    model = pcr_fit(rng.normal(size=(20, 2)), rng.normal(size=20))
    with pytest.raises(PcrError):
        pcr_eval(model, rng.normal(size=(5, 3)), rng.normal(size=5))


def test_hydrogen_fraction_improves_prediction():
    """Adding W_H2 to {e_form, density} lowers test error in nearly every split."""
    wins = 0
    for seed in range(100):
        result = subset_experiment(
            _storage_frame(seed),
            [["e_form", "density"], ["e_form", "density", "w_h2"]],
            SplitSpec(seed=seed),
            k_policy=3,
        )
        if result["test_mse"].iloc[1] < result["test_mse"].iloc[0]:
            wins += 1
    assert wins >= 95


def test_subset_experiment_layout():
    result = subset_experiment(
        _storage_frame(0), [["e_form"], ["e_form", "w_h2"]], SplitSpec(seed=1), k_policy=2
    )

    assert list(result.columns) == ["e_form", "w_h2", "features", "k", "train_mse", "test_mse"]
    assert result["features"].tolist() == ["e_form", "e_form+w_h2"]
    assert result["k"].tolist() == [1, 2]
    assert bool(result["w_h2"].iloc[0]) is False


def test_subset_experiment_unknown_feature():
    with pytest.raises(PcrError, match="Unknown feature"):
        subset_experiment(_storage_frame(0), [["volume"]], SplitSpec())
