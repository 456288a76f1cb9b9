"""
Utilities package initialization.
"""

from .config import Settings, get_settings, load_settings, write_run_config
from .log import configure_logging

__all__ = ["Settings", "get_settings", "load_settings", "write_run_config", "configure_logging"]
