"""Utility modules for the CAPFI toolkit."""

from capfi.utils.exceptions import (
    CapfiError,
    ConfigError,
    ManifestError,
    UnknownNotationError,
    ValidationError,
)
from capfi.utils.logger import setup_logging
from capfi.utils.platform import get_app_paths
from capfi.utils.rng import derive_rng
from capfi.utils.serialization import canonical_dumps, write_canonical
from capfi.utils.validators import validate_oracle_spec, validate_seed

__all__ = [
    "CapfiError",
    "ConfigError",
    "ManifestError",
    "UnknownNotationError",
    "ValidationError",
    "canonical_dumps",
    "derive_rng",
    "get_app_paths",
    "setup_logging",
    "validate_oracle_spec",
    "validate_seed",
    "write_canonical",
]
