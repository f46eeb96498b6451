"""Utility functions for uavalloc.

This package contains helpers used throughout uavalloc.
"""

from uavalloc.utils.templates import UAVALLOC_CONFIG, render_config, toml_value
