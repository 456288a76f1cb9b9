"""
Hydride Discovery

Screening, causal analysis and generative search for hydrogen storage materials.
"""

__version__ = "0.1.0"
