"""
Generative model: candidate descriptors, a variational autoencoder with a
property head, latent-space optimization and formation-energy estimation.
"""

from .checkpoint import load_checkpoint, save_checkpoint
from .estimator import EnergyEstimator, ExternalEnergyEstimator, KnnEnergyEstimator, leave_one_out
from .featurize import CandidateVector, FeatureSpace, featurize
from .latent import GeneratedCandidate, LatentTrajectory, QuadraticScoreHead, generate, latent_optimize
from .network import LossTerms, VaeArchitecture, VaeModel, kl_divergence, reparameterize
from .training import TrainingHistory, TrainingHyperparams, gradient_check, train

__all__ = [
    "CandidateVector",
    "EnergyEstimator",
    "ExternalEnergyEstimator",
    "FeatureSpace",
    "GeneratedCandidate",
    "KnnEnergyEstimator",
    "LatentTrajectory",
    "LossTerms",
    "QuadraticScoreHead",
    "TrainingHistory",
    "TrainingHyperparams",
    "VaeArchitecture",
    "VaeModel",
    "featurize",
    "generate",
    "gradient_check",
    "kl_divergence",
    "latent_optimize",
    "leave_one_out",
    "load_checkpoint",
    "reparameterize",
    "save_checkpoint",
    "train",
]
