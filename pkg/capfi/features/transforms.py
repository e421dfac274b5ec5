"""Feature transforms: bbox normalization, flattening and ego-speed state."""

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from capfi.config.defaults import SLOPE_TOLERANCE_KMH_PER_FRAME, STOP_SPEED_KMH
from capfi.data.models import (
    DEFAULT_IMAGE_SIZE,
    Manifest,
    Modality,
    ModalityDims,
    Sample,
    SpeedState,
)
from capfi.features.motion import proximity_rate_sequence
from capfi.utils.validators import validate_frame_count

LAYOUT_VERSION = "capfi-flat/v1"

# Canonical flattening order inside one frame
MODALITY_ORDER = (
    Modality.BBOX,
    Modality.POSE,
    Modality.LOCAL_CONTEXT,
    Modality.SPEED,
    Modality.PROXIMITY_RATE,
)


def parse_modalities(names: Iterable[str | Modality]) -> tuple[Modality, ...]:
    """Parse modality names into canonical order.

    Raises:
        ValueError: On an empty selection or an unknown name.
    """
    selected: set[Modality] = set()
    for name in names:
        try:
            selected.add(Modality(name))
        except ValueError as exc:
            valid = ", ".join(m.value for m in MODALITY_ORDER)
            raise ValueError(f"Unknown modality '{name}'. Must be one of: {valid}") from exc
    if not selected:
        raise ValueError("Modality selection is empty")
    return tuple(m for m in MODALITY_ORDER if m in selected)


@dataclass(frozen=True)
class FeatureLayout:
    """Frames-major flat layout of the selected modalities.

    Column of ``(frame t, modality m, component k)`` is
    ``t * frame_width + offset(m) + k``.
    """

    modalities: tuple[Modality, ...]
    dims: ModalityDims
    dt: int = 14
    normalize_coordinates: bool = True

    @classmethod
    def build(
        cls,
        modalities: Iterable[str | Modality],
        dims: ModalityDims,
        dt: Optional[int] = None,
        normalize_coordinates: bool = True,
    ) -> "FeatureLayout":
        """Create a layout; ``dt`` defaults to the full window (frames - 1)."""
        return cls(
            modalities=parse_modalities(modalities),
            dims=dims,
            dt=dims.frames - 1 if dt is None else dt,
            normalize_coordinates=normalize_coordinates,
        )

    @classmethod
    def from_signature(cls, signature: str, dims: ModalityDims) -> "FeatureLayout":
        """Rebuild the layout behind ``signature``; it must fit ``dims``.

        Raises:
            ValueError: For an unknown layout version or flag, or a layout whose
                frame count, widths or modality order disagree with ``dims``.
        """
        parts = signature.split(";")
        if len(parts) < 3 or parts[0] != LAYOUT_VERSION:
            raise ValueError(f"Unsupported layout signature '{signature}'")

        names = [item.split(":", 1)[0] for item in parts[2].split(",")]
        flags = parts[3:]
        dt: Optional[int] = None
        for flag in flags:
            if flag.startswith("dt="):
                dt = int(flag[3:])
            elif flag != "norm":
                raise ValueError(f"Unknown layout flag '{flag}' in '{signature}'")

        layout = cls.build(names, dims, dt=dt, normalize_coordinates="norm" in flags)
        if layout.signature != signature:
            raise ValueError(
                f"Layout '{signature}' does not fit the manifest (expected '{layout.signature}')"
            )
        return layout

    @property
    def frame_width(self) -> int:
        return sum(self.dims.width(m) for m in self.modalities)

    @property
    def size(self) -> int:
        """Length of one flattened feature vector."""
        return self.dims.frames * self.frame_width

    def offset(self, modality: Modality) -> int:
        """Offset of a modality inside one frame."""
        offset = 0
        for m in self.modalities:
            if m == modality:
                return offset
            offset += self.dims.width(m)
        raise KeyError(f"Modality {modality.value} not in layout")

    def columns(self, modality: Modality | str) -> np.ndarray:
        """All flat column indices holding ``modality``, frame by frame."""
        modality = Modality(modality)
        width = self.dims.width(modality)
        start = self.offset(modality)
        frames = np.arange(self.dims.frames)[:, None] * self.frame_width
        return (frames + start + np.arange(width)[None, :]).ravel()

    @property
    def signature(self) -> str:
        """Identifier oracles must match; stamped into every report."""
        parts = [f"{m.value}:{self.dims.width(m)}" for m in self.modalities]
        sig = f"{LAYOUT_VERSION};T={self.dims.frames};{','.join(parts)}"
        if Modality.PROXIMITY_RATE in self.modalities:
            sig += f";dt={self.dt}"
        if self.normalize_coordinates:
            sig += ";norm"
        return sig


def normalize_bbox(
    bbox_sequence: Sequence[Sequence[float]], image_dims: tuple[int, int]
) -> list[tuple[float, float, float, float]]:
    """Scale pixel bboxes into [0, 1] image coordinates.

    Args:
        bbox_sequence: Per-frame ``(x1, y1, x2, y2)`` in pixels.
        image_dims: ``(width, height)`` of the source image.

    Raises:
        ValueError: For non-positive image dims, degenerate or out-of-image boxes.
    """
    width, height = image_dims
    if width <= 0 or height <= 0:
        raise ValueError(f"Image dims must be positive, got {image_dims}")

    normalized = []
    for frame, box in enumerate(bbox_sequence):
        if len(box) != 4:
            raise ValueError(f"Frame {frame}: bbox needs 4 values, got {len(box)}")
        x1, y1, x2, y2 = (float(v) for v in box)
        if not (x1 < x2 and y1 < y2):
            raise ValueError(f"Frame {frame}: invalid bbox {tuple(box)} (need x1<x2, y1<y2)")
        if x1 < 0 or y1 < 0 or x2 > width or y2 > height:
            raise ValueError(f"Frame {frame}: bbox {tuple(box)} outside {width}x{height} image")
        normalized.append((x1 / width, y1 / height, x2 / width, y2 / height))
    return normalized


def _modality_block(
    sample: Sample, modality: Modality, layout: FeatureLayout, image_dims: tuple[int, int]
) -> np.ndarray:
    """One sample's modality as a ``(frames, width)`` array in layout units."""
    if modality == Modality.PROXIMITY_RATE:
        if sample.distance is None:
            raise ValueError(f"Sample {sample.id} has no distance trace for proximity_rate")
        return proximity_rate_sequence(sample.distance, layout.dt).reshape(-1, 1)

    block = sample.modality_array(modality)
    if layout.normalize_coordinates and modality == Modality.BBOX:
        block = np.asarray(normalize_bbox(block, image_dims), dtype=np.float64)
    elif layout.normalize_coordinates and modality == Modality.POSE:
        scale = np.tile([1.0 / image_dims[0], 1.0 / image_dims[1]], layout.dims.joints)
        block = block * scale
    return block


def flatten(
    sample: Sample,
    modalities: Iterable[str | Modality] | FeatureLayout,
    dims: Optional[ModalityDims] = None,
    image_dims: tuple[int, int] = DEFAULT_IMAGE_SIZE,
) -> np.ndarray:
    """Flatten a sample into one feature vector (frames-major).

    Args:
        sample: Sample to flatten.
        modalities: Modality names, or a prepared FeatureLayout.
        dims: Declared dims; inferred from the sample when omitted.
        image_dims: Image size used for coordinate normalization.

    Returns:
        1-D float64 vector of length ``layout.size``.
    """
    if isinstance(modalities, FeatureLayout):
        layout = modalities
    else:
        if dims is None:
            dims = ModalityDims(
                frames=sample.frame_count,
                joints=len(sample.pose[0]) // 2,
                embedding=len(sample.local_context[0]) if sample.local_context else 1,
            )
        layout = FeatureLayout.build(modalities, dims)

    blocks = [_modality_block(sample, m, layout, image_dims) for m in layout.modalities]
    return np.concatenate(blocks, axis=1).ravel()


def feature_matrix(manifest: Manifest, layout: FeatureLayout) -> np.ndarray:
    """Flatten every sample of a manifest into an ``n x layout.size`` matrix."""
    image_dims = (manifest.image_width, manifest.image_height)
    matrix = np.empty((len(manifest), layout.size), dtype=np.float64)
    for row, sample in enumerate(manifest.samples):
        matrix[row] = flatten(sample, layout, image_dims=image_dims)
    return matrix


def speed_slope(speeds: Sequence[float]) -> float:
    """Least-squares slope of speed against frame index (km/h per frame)."""
    values = np.asarray(speeds, dtype=np.float64)
    t = np.arange(len(values), dtype=np.float64)
    t_centered = t - t.mean()
    return float(np.dot(t_centered, values - values.mean()) / np.dot(t_centered, t_centered))


def speed_state(
    speeds: Sequence[float],
    stop_band: float = STOP_SPEED_KMH,
    tolerance: float = SLOPE_TOLERANCE_KMH_PER_FRAME,
) -> SpeedState:
    """Classify the ego-vehicle speed behaviour of a window.

    Stopped when every speed is below ``stop_band``; otherwise the sign of the
    least-squares slope decides, with ``+-tolerance`` counted as constant.
    """
    validate_frame_count(len(speeds), 2)
    if max(speeds) < stop_band:
        return SpeedState.STOPPED
    slope = speed_slope(speeds)
    if slope > tolerance:
        return SpeedState.ACCELERATING
    if slope < -tolerance:
        return SpeedState.DECELERATING
    return SpeedState.CONSTANT
