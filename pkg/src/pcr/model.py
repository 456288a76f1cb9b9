"""
Principal component regression.

Columns are standardized, principal axes come from the eigen-decomposition of
the standardized covariance (descending eigenvalues, each axis signed so its
largest-magnitude loading is positive) and the target is regressed on the
leading component scores.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Union
import logging

import numpy as np

from src.errors import PcrError

logger = logging.getLogger(__name__)

KPolicy = Union[int, float, None]
DEFAULT_VARIANCE_THRESHOLD = 0.95
RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class PcrModel:
    """Fitted principal component regression."""

    feature_names: List[str]
    means: np.ndarray
    scales: np.ndarray
    components: np.ndarray  # p x p, columns ordered by eigenvalue
    eigenvalues: np.ndarray
    k: int
    coefficients: np.ndarray
    intercept: float
    explained_variance_ratio: np.ndarray = field(repr=False)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[1] != self.n_features:
            raise PcrError(f"Expected {self.n_features} columns, got {X.shape[1]}")
        return X

    def standardize(self, X: np.ndarray) -> np.ndarray:
        return (self._check(X) - self.means) / self.scales

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Scores on the retained components."""
        return self.standardize(X) @ self.components[:, : self.k]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + self.transform(X) @ self.coefficients

    def reconstruction_error(self, X: np.ndarray, k: Optional[int] = None) -> float:
        """Mean squared error of rebuilding standardized X from ``k`` components."""
        k = self.k if k is None else k
        if not 0 <= k <= self.n_features:
            raise PcrError(f"k must lie in [0, {self.n_features}], got {k}")
        Z = self.standardize(X)
        basis = self.components[:, :k]
        return float(np.mean((Z - Z @ basis @ basis.T) ** 2))


def _choose_k(ratios: np.ndarray, policy: KPolicy) -> int:
    if policy is None:
        policy = DEFAULT_VARIANCE_THRESHOLD
    if isinstance(policy, (int, np.integer)) and not isinstance(policy, bool):
        if policy < 1:
            raise PcrError(f"k must be >= 1, got {policy}")
        return int(policy)
    threshold = float(policy)
    if not 0.0 < threshold <= 1.0:
        raise PcrError(f"Variance threshold must lie in (0, 1], got {threshold}")
    cumulative = np.cumsum(ratios)
    return int(np.searchsorted(cumulative, threshold - 1e-12) + 1)


def pcr_fit(
    X: np.ndarray,
    y: np.ndarray,
    k: KPolicy = None,
    feature_names: Optional[Sequence[str]] = None,
) -> PcrModel:
    """
    Fit a principal component regression.

    Args:
        X: n x p feature matrix with n > p
        y: n targets
        k: Component count, or a cumulative explained-variance threshold in (0, 1]
           (default 0.95)
        feature_names: Optional column names

    Returns:
        Fitted PcrModel
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).ravel()
    n, p = X.shape
    if p < 1 or n <= p:
        raise PcrError(f"PCR needs n > p >= 1, got n={n}, p={p}")
    if len(y) != n:
        raise PcrError(f"X has {n} rows but y has {len(y)}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise PcrError("PCR input contains non-finite values")

    names = list(feature_names) if feature_names is not None else [f"x{i}" for i in range(p)]
    if len(names) != p:
        raise PcrError(f"{len(names)} feature names for {p} columns")

    means = X.mean(axis=0)
    scales = X.std(axis=0, ddof=1)
    constant = [names[i] for i in np.flatnonzero(scales == 0.0)]
    if constant:
        raise PcrError(f"Constant columns cannot be standardized: {', '.join(constant)}")
    Z = (X - means) / scales

    covariance = Z.T @ Z / (n - 1)
    eigenvalues, vectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = np.clip(eigenvalues[order], 0.0, None)
    vectors = vectors[:, order]
    for j in range(p):
        if vectors[np.argmax(np.abs(vectors[:, j])), j] < 0:
            vectors[:, j] = -vectors[:, j]

    ratios = eigenvalues / eigenvalues.sum()
    chosen = min(_choose_k(ratios, k), p)
    rank = int(np.sum(eigenvalues > RANK_TOLERANCE * eigenvalues[0]))
    if chosen > rank:
        logger.warning(f"Rank-deficient features ({rank} < {chosen}); reducing k to {rank}")
        chosen = rank

    scores = Z @ vectors[:, :chosen]
    design = np.column_stack([np.ones(n), scores])
    solution, *_ = np.linalg.lstsq(design, y, rcond=None)

    return PcrModel(
        feature_names=names,
        means=means,
        scales=scales,
        components=vectors,
        eigenvalues=eigenvalues,
        k=chosen,
        coefficients=solution[1:],
        intercept=float(solution[0]),
        explained_variance_ratio=ratios,
    )


def pcr_eval(model: PcrModel, X: np.ndarray, y: np.ndarray) -> float:
    """Mean squared prediction error."""
    y = np.asarray(y, dtype=float).ravel()
    predictions = model.predict(X)
    if len(predictions) != len(y):
        raise PcrError(f"X has {len(predictions)} rows but y has {len(y)}")
    return float(np.mean((predictions - y) ** 2))
