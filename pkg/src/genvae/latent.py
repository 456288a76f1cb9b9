"""
Latent-space optimization and candidate generation.

Latent points are moved by gradient descent on 1 / (score + epsilon), where the
score comes from the model's property head (or any head with the same call
signature), then decoded, rounded to integer compositions and given a
template-derived structure.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple
import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from src.chem.composition import Composition, format_formula
from src.cif.parser import Lattice, Site, Structure, wrap_fractional
from src.errors import ModelError
from src.genvae.featurize import CandidateVector, FeatureSpace, featurize
from src.genvae.network import VaeModel
from src.models.material import MaterialRecord

logger = logging.getLogger(__name__)

OBJECTIVE_EPSILON = 1e-6
MIN_LENGTH = 1.0
ANGLE_RANGE = (30.0, 150.0)

ScoreHead = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]


class QuadraticScoreHead:
    """
    Score 1 / (1 + |z - center|^2).

    The inverse-score objective is then the quadratic 1 + |z - center|^2 (up to
    epsilon), with its optimum at ``center``.
    """

    def __init__(self, center: Sequence[float]):
        self.center = np.asarray(center, dtype=float)

    def __call__(self, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        diff = np.atleast_2d(z) - self.center
        q = 1.0 + np.sum(diff**2, axis=1)
        return 1.0 / q, -2.0 * diff / q[:, None] ** 2


@dataclass
class LatentTrajectory:
    z_final: np.ndarray
    objective: List[float]  # mean inverse score over rows, one entry per step
    snapshots: List[Tuple[int, np.ndarray]] = field(default_factory=list)
    frozen: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def _inverse_score(head: ScoreHead, z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    score, grad = head(z)
    denom = score + OBJECTIVE_EPSILON
    return 1.0 / denom, -grad / denom[:, None] ** 2


def latent_optimize(
    model: Optional[VaeModel],
    z0: np.ndarray,
    steps: int = 5000,
    step_size: float = 1e-3,
    head: Optional[ScoreHead] = None,
    max_step_norm: Optional[float] = None,
    trajectory_every: int = 500,
) -> LatentTrajectory:
    """
    Gradient descent on the inverse predicted score, each row independently.

    A row whose objective or gradient turns non-finite is frozen at its last
    finite position.

    Args:
        model: Model whose property head supplies the score (ignored when head is given)
        z0: Starting latents, one row per candidate
        steps: Number of gradient steps
        step_size: Step size
        head: Optional score head returning (score, d score / d z)
        max_step_norm: Cap on the norm of each row's update
        trajectory_every: Snapshot interval in steps

    Returns:
        LatentTrajectory with the final latents and sampled snapshots
    """
    if head is None:
        if model is None:
            raise ModelError("latent_optimize needs a model or a score head")
        head = model.score_and_grad
    z0 = np.asarray(z0, dtype=float)
    single = z0.ndim == 1
    z = np.atleast_2d(z0).copy()
    frozen = np.zeros(len(z), dtype=bool)

    objective, grad = _inverse_score(head, z)
    history = [float(np.mean(objective))] if len(z) else []
    snapshots = [(0, z.copy())]
    for step in range(1, steps + 1):
        bad = ~np.isfinite(objective) | ~np.all(np.isfinite(grad), axis=1)
        newly = bad & ~frozen
        if newly.any():
            logger.warning(f"Non-finite objective at step {step}; froze {int(newly.sum())} latent rows")
        frozen |= bad
        if frozen.all():
            break
        update = -step_size * grad
        update[frozen] = 0.0
        if max_step_norm is not None:
            norms = np.linalg.norm(update, axis=1)
            scale = np.where(norms > max_step_norm, max_step_norm / np.maximum(norms, 1e-300), 1.0)
            update *= scale[:, None]
        candidate = z + update
        objective_new, grad_new = _inverse_score(head, candidate)
        accepted = ~frozen & np.isfinite(objective_new)
        z[accepted] = candidate[accepted]
        objective = np.where(accepted, objective_new, objective)
        grad = np.where(accepted[:, None], grad_new, grad)
        frozen |= ~np.isfinite(objective_new)
        history.append(float(np.mean(objective)))
        if step % trajectory_every == 0 or step == steps:
            snapshots.append((step, z.copy()))

    z_final = z[0] if single else z
    return LatentTrajectory(z_final=z_final, objective=history, snapshots=snapshots, frozen=frozen)


class GeneratedCandidate(BaseModel):
    """A decoded, rounded candidate with its template structure."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    id: str
    vector: CandidateVector
    composition: Composition
    predicted_score: float
    structure: Optional[Structure] = None
    template_id: Optional[str] = None

    @property
    def formula_text(self) -> str:
        return format_formula(self.composition)


def _lattice_from(vector: CandidateVector) -> Lattice:
    a, b, c, alpha, beta, gamma = vector.lattice
    lo, hi = ANGLE_RANGE
    return Lattice(
        a=max(a, MIN_LENGTH),
        b=max(b, MIN_LENGTH),
        c=max(c, MIN_LENGTH),
        alpha=float(np.clip(alpha, lo, hi)),
        beta=float(np.clip(beta, lo, hi)),
        gamma=float(np.clip(gamma, lo, hi)),
    )


def template_structure(
    candidate_id: str, vector: CandidateVector, template: MaterialRecord
) -> Structure:
    """
    Structure for a candidate from a training structure's fractional sites.

    Candidate atoms take template sites in order; when the candidate has more atoms
    than the template has sites, the site list is reused with a half-cell shift
    along a per pass.
    """
    if template.structure is None:
        raise ModelError(f"Template {template.id} has no structure")
    coords = [(site.x, site.y, site.z) for site in template.structure.sites]
    composition = vector.composition()
    symbols = [el for el in vector.vocab for _ in range(composition.count(el))]
    sites = []
    for i, symbol in enumerate(symbols):
        x, y, z = coords[i % len(coords)]
        shift = 0.5 * (i // len(coords))
        sites.append(Site(element=symbol, x=wrap_fractional(x + shift), y=y, z=z))
    return Structure(
        lattice=_lattice_from(vector),
        sites=sites,
        source_id=candidate_id,
        provenance=f"template-derived:{template.id}",
    )


def generate(
    model: VaeModel,
    space: FeatureSpace,
    n: int,
    seed: int,
    templates: Sequence[MaterialRecord] = (),
    steps: int = 5000,
    step_size: float = 1e-3,
    max_step_norm: Optional[float] = None,
    max_attempts: Optional[int] = None,
) -> List[GeneratedCandidate]:
    """
    Sample z ~ N(0, I), optimize in latent space, decode and round.

    Draws whose decode rounds to no atoms are discarded and redrawn until ``n``
    candidates exist or ``max_attempts`` (default 10 * n) draws were made.

    Args:
        model: Trained model
        space: Feature space the model was trained on
        n: Number of candidates
        seed: Generation seed
        templates: Training records used as structure templates
        steps: Latent optimization steps per draw
        step_size: Latent optimization step size
        max_step_norm: Cap on each latent update
        max_attempts: Upper bound on prior draws

    Returns:
        Candidates ``gen-0001`` ... in draw order
    """
    if n < 0:
        raise ModelError(f"n must be >= 0, got {n}")
    if n == 0:
        return []
    max_attempts = 10 * n if max_attempts is None else max_attempts
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    usable = [t for t in templates if t.structure is not None]
    template_x = space.encode([featurize(t, space) for t in usable]) if usable else None

    candidates: List[GeneratedCandidate] = []
    attempts = discarded = 0
    while len(candidates) < n and attempts < max_attempts:
        batch = min(n - len(candidates), max_attempts - attempts)
        z0 = rng.standard_normal((batch, model.latent_dim))
        attempts += batch
        trajectory = latent_optimize(
            model, z0, steps=steps, step_size=step_size, max_step_norm=max_step_norm
        )
        z = np.atleast_2d(trajectory.z_final)
        decoded = model.decode(z)
        scores = model.predict_score(z)
        for row, vector, score in zip(decoded, space.decode(decoded), scores):
            rounded = vector.rounded()
            if rounded.is_empty:
                discarded += 1
                logger.info("Discarded a draw that decoded to an empty composition")
                continue
            candidate_id = f"gen-{len(candidates) + 1:04d}"
            structure, template_id = None, None
            if template_x is not None:
                nearest = int(np.argmin(np.sum((template_x - row) ** 2, axis=1)))
                template = usable[nearest]
                structure = template_structure(candidate_id, rounded, template)
                template_id = template.id
            candidates.append(
                GeneratedCandidate(
                    id=candidate_id,
                    vector=rounded,
                    composition=rounded.composition(),
                    predicted_score=float(score),
                    structure=structure,
                    template_id=template_id,
                )
            )
    if len(candidates) < n:
        logger.warning(f"Generated {len(candidates)} of {n} candidates after {attempts} draws")
    logger.info(f"Generated {len(candidates)} candidates ({discarded} empty decodes discarded)")
    return candidates

