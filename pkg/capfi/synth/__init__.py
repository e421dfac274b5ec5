"""Synthetic dataset generation with planted feature dependence."""

from capfi.synth.generator import (
    PLANTED_MODALITIES,
    PlantEntry,
    PlantReport,
    generate,
    modality_summaries,
    plant_check,
)

__all__ = [
    "PLANTED_MODALITIES",
    "PlantEntry",
    "PlantReport",
    "generate",
    "modality_summaries",
    "plant_check",
]
