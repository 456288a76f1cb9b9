"""
Feature-subset experiment: one PCR model per candidate feature subset, scored
on a shared train/test split.
"""

from typing import List, Sequence, Union
import logging

import pandas as pd

from src.dataset.selection import SplitSpec, records_to_frame, split_indices
from src.errors import PcrError
from src.models.material import MaterialRecord
from src.pcr.model import KPolicy, pcr_eval, pcr_fit

logger = logging.getLogger(__name__)


def subset_experiment(
    data: Union[pd.DataFrame, Sequence[MaterialRecord]],
    subsets: Sequence[Sequence[str]],
    split: SplitSpec,
    k_policy: KPolicy = None,
    target: str = "score",
) -> pd.DataFrame:
    """
    Fit and evaluate PCR for every feature subset.

    Rows missing any used column are dropped once, so every subset sees the
    same split.

    Args:
        data: Analysis frame or material records
        subsets: Feature-name subsets
        split: Ratios and seed; validation rows are unused
        k_policy: Component count or variance threshold
        target: Target column

    Returns:
        One row per subset: indicator column per feature, features, k,
        train_mse, test_mse
    """
    frame = data if isinstance(data, pd.DataFrame) else records_to_frame(list(data))

    features: List[str] = []
    for subset in subsets:
        if not subset:
            raise PcrError("Empty feature subset")
        for name in subset:
            if name not in frame.columns:
                raise PcrError(f"Unknown feature {name!r}")
            if name not in features:
                features.append(name)
    if target not in frame.columns:
        raise PcrError(f"Unknown target {target!r}")

    usable = frame[features + [target]].apply(pd.to_numeric, errors="coerce").dropna()
    if len(usable) < len(frame):
        logger.warning(f"Dropped {len(frame) - len(usable)} rows with missing values")
    train_idx, _, test_idx = split_indices(len(usable), split)
    train, test = usable.iloc[train_idx], usable.iloc[test_idx]

    rows = []
    for subset in subsets:
        columns = list(subset)
        model = pcr_fit(train[columns].to_numpy(), train[target].to_numpy(), k_policy, columns)
        row = {name: name in columns for name in features}
        row.update({
            "features": "+".join(columns),
            "k": model.k,
            "train_mse": pcr_eval(model, train[columns].to_numpy(), train[target].to_numpy()),
            "test_mse": pcr_eval(model, test[columns].to_numpy(), test[target].to_numpy()),
        })
        rows.append(row)
        logger.info(f"PCR {row['features']}: k={model.k}, test MSE {row['test_mse']:.3e}")
    return pd.DataFrame(rows)
