"""Input validation utilities for the CAPFI toolkit."""

import math

SEED_LIMIT = 2**64


def validate_seed(seed: int) -> int:
    """Validate a 64-bit random seed.

    Args:
        seed: Seed value.

    Returns:
        Validated seed.

    Raises:
        ValueError: If the seed is out of bounds.
    """
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ValueError("Seed must be an integer")
    if seed < 0 or seed >= SEED_LIMIT:
        raise ValueError("Seed must be in [0, 2**64)")
    return seed


def validate_distance(meters: float) -> float:
    """Validate a pedestrian-ego distance.

    Args:
        meters: Distance in meters.

    Returns:
        Validated distance.

    Raises:
        ValueError: If the distance is not a positive finite number.
    """
    if not math.isfinite(meters) or meters <= 0:
        raise ValueError(f"Distance must be positive, got {meters}")
    return float(meters)


def validate_frame_count(count: int, minimum: int) -> int:
    """Validate that a sequence carries enough frames."""
    if count < minimum:
        raise ValueError(f"Need at least {minimum} frames, got {count}")
    return count


def validate_oracle_spec(spec: str) -> tuple[str, str]:
    """Split an oracle spec string into ``(kind, target)``.

    Accepted forms are ``builtin:<cfgpath>`` and ``exec:<command>``.
    """
    kind, sep, target = spec.partition(":")
    if not sep or kind not in {"builtin", "exec"} or not target.strip():
        raise ValueError(
            f"Invalid oracle spec '{spec}'. Use builtin:<cfgpath> or exec:<command>"
        )
    return kind, target.strip()
