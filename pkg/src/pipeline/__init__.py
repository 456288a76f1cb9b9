"""
Pipeline stages behind the command line.
"""

from .workflow import STAGES, DiscoveryState, DiscoveryWorkflow

__all__ = ["STAGES", "DiscoveryState", "DiscoveryWorkflow"]
