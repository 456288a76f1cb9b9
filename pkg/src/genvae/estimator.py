"""
Formation-energy estimators for generated candidates.

KnnEnergyEstimator is the built-in baseline: scikit-learn distance-weighted
k-nearest-neighbor regression over normalized candidate vectors.
ExternalEnergyEstimator serves formation energies computed elsewhere, keyed by
formula, and is the place to plug in a relaxation code or a learned potential.
"""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd
from sklearn.model_selection import LeaveOneOut, cross_val_predict
from sklearn.neighbors import KNeighborsRegressor

from src.chem.composition import Composition, format_formula, parse_formula
from src.errors import EstimatorError, MissingInputError
from src.genvae.featurize import CandidateVector, FeatureSpace, featurize
from src.models.material import MaterialRecord
from src.scoring.metrics import ErrorStats, error_stats

logger = logging.getLogger(__name__)

EXACT_HIT_DISTANCE = 1e-12


class EnergyEstimator(ABC):
    """Predicts formation energy (eV/atom) for a candidate vector."""

    implementation_id: str = "abstract"

    @abstractmethod
    def fit(self, records: Sequence[MaterialRecord]) -> "EnergyEstimator":
        """Fit on training records."""

    @abstractmethod
    def predict(self, candidate: CandidateVector) -> float:
        """Formation energy of one candidate."""

    def predict_many(self, candidates: Sequence[CandidateVector]) -> List[float]:
        return [self.predict(c) for c in candidates]


class ExactHitKNeighborsRegressor(KNeighborsRegressor):
    """
    Distance-weighted KNeighborsRegressor whose exact hits return the mean target of
    every coincident training point, however many there are.
    """

    def fit(self, X, y):
        self.targets_ = np.asarray(y, dtype=float)
        return super().fit(X, y)

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        predictions = np.asarray(super().predict(X), dtype=float)
        nearest, _ = self.kneighbors(X, n_neighbors=1)
        for i in np.flatnonzero(nearest[:, 0] <= EXACT_HIT_DISTANCE):
            distances, indices = self.kneighbors(X[i : i + 1], n_neighbors=self.n_samples_fit_)
            hits = indices[0][distances[0] <= EXACT_HIT_DISTANCE]
            predictions[i] = float(np.mean(self.targets_[hits]))
        return predictions


def _regressor(k: int, n_train: int) -> ExactHitKNeighborsRegressor:
    # kd_tree distances are exact: identical rows sit at zero
    return ExactHitKNeighborsRegressor(
        n_neighbors=min(k, n_train), weights="distance", algorithm="kd_tree"
    )


class KnnEnergyEstimator(EnergyEstimator):
    """
    Inverse-distance weighted k-nearest-neighbor regression.

    A query that coincides with training points returns the mean formation energy
    of those points.
    """

    implementation_id = "knn-inverse-distance"

    def __init__(self, space: FeatureSpace, k: int = 5):
        if k < 1:
            raise EstimatorError(f"k must be >= 1, got {k}")
        self.space = space
        self.k = k
        self._model: Optional[ExactHitKNeighborsRegressor] = None

    @property
    def is_fitted(self) -> bool:
        return self._model is not None

    def fit(self, records: Sequence[MaterialRecord]) -> "KnnEnergyEstimator":
        if not records:
            raise EstimatorError("Cannot fit an estimator on an empty training set")
        if len(records) < self.k:
            logger.warning(f"Only {len(records)} training records for k={self.k}")
        x = self.space.encode([featurize(r, self.space) for r in records])
        y = np.array([r.e_form for r in records], dtype=float)
        self._model = _regressor(self.k, len(records)).fit(x, y)
        return self

    def predict(self, candidate: CandidateVector) -> float:
        return self.predict_many([candidate])[0]

    def predict_many(self, candidates: Sequence[CandidateVector]) -> List[float]:
        if self._model is None:
            raise EstimatorError("Estimator has not been fitted")
        if not candidates:
            return []
        return [float(v) for v in self._model.predict(self.space.encode(candidates))]


class ExternalEnergyEstimator(EnergyEstimator):
    """Formation energies supplied from outside, keyed by composition."""

    implementation_id = "external-table"

    def __init__(
        self, predictions: Mapping[str, float], fallback: Optional[EnergyEstimator] = None
    ):
        self._table: Dict[Composition, float] = {
            parse_formula(formula): float(value) for formula, value in predictions.items()
        }
        self.fallback = fallback

    @classmethod
    def from_csv(cls, path: Path, fallback: Optional[EnergyEstimator] = None) -> "ExternalEnergyEstimator":
        """Read a CSV with ``formula`` and ``e_form`` columns."""
        if not Path(path).exists():
            raise MissingInputError(f"Energy table not found: {path}")
        frame = pd.read_csv(path)
        missing = {"formula", "e_form"} - set(frame.columns)
        if missing:
            raise EstimatorError(f"{path}: missing columns {sorted(missing)}")
        return cls(dict(zip(frame["formula"], frame["e_form"])), fallback=fallback)

    def fit(self, records: Sequence[MaterialRecord]) -> "ExternalEnergyEstimator":
        if self.fallback is not None:
            self.fallback.fit(records)
        return self

    def predict(self, candidate: CandidateVector) -> float:
        composition = candidate.composition()
        if composition in self._table:
            return self._table[composition]
        if self.fallback is None:
            raise EstimatorError(f"No external prediction for {format_formula(composition)}")
        return self.fallback.predict(candidate)


def leave_one_out(
    records: Sequence[MaterialRecord], space: Optional[FeatureSpace] = None, k: int = 5
) -> Tuple[ErrorStats, List[float]]:
    """
    Leave-one-out evaluation of the kNN baseline.

    Returns:
        Tuple of (error statistics, prediction per record)
    """
    if len(records) < 2:
        raise EstimatorError("Leave-one-out needs at least two records")
    space = space or FeatureSpace.fit(records)
    x = space.encode([featurize(r, space) for r in records])
    y = np.array([r.e_form for r in records], dtype=float)
    held_out = cross_val_predict(_regressor(k, len(records) - 1), x, y, cv=LeaveOneOut())
    predictions = [float(v) for v in held_out]
    stats = error_stats(zip(predictions, (r.e_form for r in records)))
    logger.info(f"Leave-one-out kNN (k={k}): MAE {stats.mae:.4f}, MSE {stats.mse:.4f}")
    return stats, predictions
