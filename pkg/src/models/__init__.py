"""
Shared data models.
"""

from .material import MaterialRecord

__all__ = ["MaterialRecord"]
