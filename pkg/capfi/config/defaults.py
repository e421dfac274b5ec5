"""Default values and toolkit-defined thresholds."""

# Proximity buckets, closed on the right: (0, 15], (15, 30], (30, inf)
CLOSE_PROXIMITY_M = 15.0
MEDIUM_PROXIMITY_M = 30.0

# Ego-speed state classification
STOP_SPEED_KMH = 0.5
SLOPE_TOLERANCE_KMH_PER_FRAME = 0.1

# Hard-label threshold applied to oracle scores
DECISION_THRESHOLD = 0.5

DEFAULT_FEATURES = ("bbox", "pose", "local_context", "speed")
DEFAULT_METRICS = ("acc", "auc", "f1")

# Builtin surrogate training
DEFAULT_LEARNING_RATE = 0.5
DEFAULT_EPOCHS = 300
DEFAULT_L2 = 1e-3

# Synthetic generator
DEFAULT_SPEED_RANGE_KMH = (5.0, 50.0)
DEFAULT_DISTANCE_RANGE_M = (5.0, 60.0)
MIN_DISTANCE_M = 0.5
# Tag proportions of the reference crossing dataset (cardinalities out of 892)
REFERENCE_TAG_COUNTS = {
    "roadway": {"four_way": 441, "midblock": 164, "t_junction": 103, "other": 184},
    "light": {"red": 93, "yellow": 37, "green": 242, "none": 520},
    "crosswalk": {"zebra": 239, "non_zebra": 653},
    "proximity": {"close": 59, "medium": 542, "far": 291},
    "ego_speed_state": {"accelerating": 216, "constant": 298, "stopped": 185, "decelerating": 193},
}

REPORT_SCHEMA_VERSION = 1
