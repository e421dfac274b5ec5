"""Prediction oracles: builtin surrogate and external model processes."""

from capfi.oracle.base import BoundOracle, Oracle, OracleKind, OracleMetadata, OraclePrediction
from capfi.oracle.builtin import (
    BuiltinModel,
    BuiltinOracle,
    build_builtin_oracle,
    gradient_check,
    load_model,
    save_model,
    train_builtin,
)
from capfi.oracle.external import ExternalOracle

__all__ = [
    "BoundOracle",
    "BuiltinModel",
    "BuiltinOracle",
    "ExternalOracle",
    "Oracle",
    "OracleKind",
    "OracleMetadata",
    "OraclePrediction",
    "build_builtin_oracle",
    "gradient_check",
    "load_model",
    "save_model",
    "train_builtin",
]
