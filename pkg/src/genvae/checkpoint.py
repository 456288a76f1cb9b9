"""
Versioned JSON checkpoints for trained models.

A checkpoint stores the feature space (vocabulary and normalization), the
architecture, every weight array and the training seed. Loading re-validates
shapes and finiteness.
"""

from pathlib import Path
from typing import Any, Dict, Tuple
import json
import logging

import numpy as np
from pydantic import BaseModel, ValidationError

from src import __version__
from src.errors import CheckpointError, MissingInputError, ModelError
from src.genvae.featurize import FeatureSpace
from src.genvae.network import VaeArchitecture, VaeModel

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "hydride-vae"
CHECKPOINT_VERSION = 1


class CheckpointPayload(BaseModel):
    format: str = CHECKPOINT_FORMAT
    version: int = CHECKPOINT_VERSION
    tool_version: str = __version__
    seed: int
    space: FeatureSpace
    architecture: VaeArchitecture
    weights: Dict[str, Any]


def save_checkpoint(model: VaeModel, space: FeatureSpace, path: Path) -> Path:
    """Write model and feature space to ``path`` as JSON."""
    if space.dim != model.architecture.input_dim:
        raise CheckpointError("Feature space does not match the model input")
    payload = CheckpointPayload(
        seed=model.seed,
        space=space,
        architecture=model.architecture,
        weights={name: value.tolist() for name, value in model.params.items()},
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(payload.model_dump_json(indent=1) + "\n", encoding="utf-8")
    logger.info(f"Saved checkpoint to {path}")
    return path


def load_checkpoint(path: Path) -> Tuple[VaeModel, FeatureSpace]:
    """
    Read a checkpoint written by save_checkpoint.

    Raises:
        MissingInputError: The file does not exist
        CheckpointError: Wrong format or version, bad shapes, non-finite weights
    """
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"Checkpoint not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        payload = CheckpointPayload.model_validate(raw)
    except (json.JSONDecodeError, ValidationError) as e:
        raise CheckpointError(f"{path}: unreadable checkpoint: {e}") from e
    if payload.format != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path}: not a model checkpoint ({payload.format!r})")
    if payload.version != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {payload.version}")
    if payload.space.dim != payload.architecture.input_dim:
        raise CheckpointError(f"{path}: feature space does not match the architecture")
    try:
        weights = {name: np.asarray(value, dtype=np.float64) for name, value in payload.weights.items()}
        model = VaeModel(payload.architecture, weights, seed=payload.seed)
    except (ModelError, ValueError) as e:
        raise CheckpointError(f"{path}: {e}") from e
    return model, payload.space
