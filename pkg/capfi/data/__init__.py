"""Context-tagged dataset models.

Manifest I/O lives in ``capfi.data.manifest`` and context subsets in
``capfi.data.subsets``.
"""

from capfi.data.models import (
    ContextTagBundle,
    Crosswalk,
    Manifest,
    Modality,
    ModalityDims,
    Proximity,
    Roadway,
    Sample,
    SpeedState,
    TrafficLight,
)

__all__ = [
    "ContextTagBundle",
    "Crosswalk",
    "Manifest",
    "Modality",
    "ModalityDims",
    "Proximity",
    "Roadway",
    "Sample",
    "SpeedState",
    "TrafficLight",
]
