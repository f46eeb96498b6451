# This file is automatically generated by poetry-dynamic-versioning.
# Do not edit it manually.

__version__ = "0.0.0"
__version_tuple__ = (0, 0, 0)
