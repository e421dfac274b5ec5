"""Proximity change rate: motion representation of the pedestrian-ego interaction.

``delta_p = (delta_t0 - delta_tn) / dt`` is implemented literally, with
``dt`` counted in frames. The result is therefore in meters per frame;
``per_second`` converts with the manifest frame rate. Positive values mean
the pedestrian and ego vehicle are getting closer.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from capfi.data.models import DEFAULT_FRAME_RATE
from capfi.utils.validators import validate_distance, validate_frame_count


@dataclass(frozen=True)
class MotionFeature:
    """Net distance change between two frames of the window."""

    delta_p: float  # meters per frame
    dt: int  # frames
    delta_t0: float  # meters
    delta_tn: float  # meters

    def per_second(self, frame_rate: float = DEFAULT_FRAME_RATE) -> float:
        """Delta P in meters per second."""
        return self.delta_p * frame_rate


def proximity_change_rate(distances: Sequence[float], dt: int) -> MotionFeature:
    """Compute the proximity change rate between frame 0 and frame ``dt``.

    Args:
        distances: Per-frame pedestrian-ego distances in meters.
        dt: Frame interval, at least 1.

    Returns:
        MotionFeature for the interval.

    Raises:
        ValueError: If ``dt`` < 1, too few frames, or a distance is not positive.
    """
    if dt < 1:
        raise ValueError(f"dt must be at least 1 frame, got {dt}")
    validate_frame_count(len(distances), dt + 1)
    for value in distances:
        validate_distance(value)

    delta_t0 = float(distances[0])
    delta_tn = float(distances[dt])
    return MotionFeature(
        delta_p=(delta_t0 - delta_tn) / dt,
        dt=dt,
        delta_t0=delta_t0,
        delta_tn=delta_tn,
    )


def proximity_rate_sequence(distances: Sequence[float], dt: int) -> np.ndarray:
    """Per-frame proximity change rate, usable as a model input modality.

    Frame ``t`` looks back ``min(t, dt)`` frames; frame 0 has no history and
    repeats the rate of frame 1.
    """
    if dt < 1:
        raise ValueError(f"dt must be at least 1 frame, got {dt}")
    validate_frame_count(len(distances), 2)
    values = np.asarray(distances, dtype=np.float64)
    if np.any(~np.isfinite(values)) or np.any(values <= 0):
        raise ValueError("Distances must be positive")

    rates = np.empty_like(values)
    for t in range(1, len(values)):
        span = min(t, dt)
        rates[t] = (values[t - span] - values[t]) / span
    rates[0] = rates[1]
    return rates
