"""Configuration management for the CAPFI toolkit."""

from capfi.config.config_manager import ConfigManager
from capfi.config.settings import (
    Allocation,
    BuiltinOracleConfig,
    DependencyPlan,
    EngineSettings,
    ExportFormat,
    GeneratorSpec,
    MetricName,
    RunConfig,
    TagWeights,
    TrainingConfig,
)

__all__ = [
    "Allocation",
    "BuiltinOracleConfig",
    "ConfigManager",
    "DependencyPlan",
    "EngineSettings",
    "ExportFormat",
    "GeneratorSpec",
    "MetricName",
    "RunConfig",
    "TagWeights",
    "TrainingConfig",
]
