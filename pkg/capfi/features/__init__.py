"""Feature representations and transforms."""

from capfi.features.motion import MotionFeature, proximity_change_rate, proximity_rate_sequence
from capfi.features.transforms import (
    LAYOUT_VERSION,
    FeatureLayout,
    feature_matrix,
    flatten,
    normalize_bbox,
    parse_modalities,
    speed_state,
)

__all__ = [
    "LAYOUT_VERSION",
    "FeatureLayout",
    "MotionFeature",
    "feature_matrix",
    "flatten",
    "normalize_bbox",
    "parse_modalities",
    "proximity_change_rate",
    "proximity_rate_sequence",
    "speed_state",
]
