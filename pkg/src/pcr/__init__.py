"""
Principal component regression and the feature-subset experiment.
"""

from .experiment import subset_experiment
from .model import PcrModel, pcr_eval, pcr_fit

__all__ = ["PcrModel", "pcr_eval", "pcr_fit", "subset_experiment"]
