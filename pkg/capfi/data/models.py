"""Data models for context-tagged pedestrian interaction samples."""

from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr

SCHEMA_VERSION = 1

# Observation window and recording setup
DEFAULT_FRAMES = 15
DEFAULT_JOINTS = 17
DEFAULT_EMBEDDING_DIM = 8
DEFAULT_FRAME_RATE = 30.0
DEFAULT_IMAGE_SIZE = (1920, 1080)


class Roadway(str, Enum):
    """Roadway structure at the interaction."""

    FOUR_WAY = "four_way"
    MIDBLOCK = "midblock"
    T_JUNCTION = "t_junction"
    OTHER = "other"


class TrafficLight(str, Enum):
    """Traffic-light state seen by the ego vehicle."""

    RED = "red"
    YELLOW = "yellow"
    GREEN = "green"
    NONE = "none"


class Crosswalk(str, Enum):
    """Crosswalk designation at the crossing point."""

    ZEBRA = "zebra"
    NON_ZEBRA = "non_zebra"


class Proximity(str, Enum):
    """Pedestrian-to-ego distance bucket."""

    CLOSE = "close"
    MEDIUM = "medium"
    FAR = "far"


class SpeedState(str, Enum):
    """Ego-vehicle speed behaviour over the observation window."""

    ACCELERATING = "accelerating"
    CONSTANT = "constant"
    STOPPED = "stopped"
    DECELERATING = "decelerating"


class Modality(str, Enum):
    """Per-frame feature modalities, in flattening order."""

    BBOX = "bbox"
    POSE = "pose"
    LOCAL_CONTEXT = "local_context"
    SPEED = "speed"
    PROXIMITY_RATE = "proximity_rate"


# Modalities stored on every sample; proximity_rate is derived from distance
STORED_MODALITIES = (Modality.BBOX, Modality.POSE, Modality.LOCAL_CONTEXT, Modality.SPEED)


class ContextTagBundle(BaseModel):
    """Scenario-context tags of one sample.

    ``proximity`` and ``ego_speed_state`` may be omitted in a manifest file;
    loading fills them in from the distance and speed traces.
    """

    model_config = ConfigDict(frozen=True)

    roadway: Roadway
    light: TrafficLight
    crosswalk: Crosswalk
    proximity: Optional[Proximity] = None
    ego_speed_state: Optional[SpeedState] = None


class ModalityDims(BaseModel):
    """Declared modality dimensions shared by every sample."""

    model_config = ConfigDict(frozen=True)

    frames: int = Field(default=DEFAULT_FRAMES, ge=2)
    joints: int = Field(default=DEFAULT_JOINTS, ge=1)
    embedding: int = Field(default=DEFAULT_EMBEDDING_DIM, ge=1)

    def width(self, modality: Modality) -> int:
        """Per-frame width of a modality."""
        widths = {
            Modality.BBOX: 4,
            Modality.POSE: 2 * self.joints,
            Modality.LOCAL_CONTEXT: self.embedding,
            Modality.SPEED: 1,
            Modality.PROXIMITY_RATE: 1,
        }
        return widths[modality]


class Sample(BaseModel):
    """One pedestrian-vehicle interaction episode.

    Modalities are stored frame by frame: ``bbox[t]`` holds ``(x1, y1, x2, y2)``
    in pixels, ``pose[t]`` the flattened joint coordinates, ``speed[t]`` the ego
    speed in km/h and ``distance[t]`` the pedestrian-ego distance in meters.
    """

    model_config = ConfigDict(frozen=True)

    id: str = Field(min_length=1)
    label: int = Field(ge=0, le=1)
    tags: ContextTagBundle
    bbox: list[list[float]]
    pose: list[list[float]]
    local_context: Optional[list[list[float]]] = None
    local_context_offset: Optional[int] = Field(default=None, ge=0)
    speed: list[float]
    distance: Optional[list[float]] = None

    @property
    def frame_count(self) -> int:
        """Number of frames in the observation window."""
        return len(self.bbox)

    def modality_array(self, modality: Modality) -> np.ndarray:
        """Return a stored modality as a ``(frames, width)`` float64 array."""
        if modality == Modality.SPEED:
            return np.asarray(self.speed, dtype=np.float64).reshape(-1, 1)
        if modality not in STORED_MODALITIES:
            raise KeyError(f"{modality.value} is derived; use capfi.features.motion")
        values = getattr(self, modality.value)
        if values is None:
            raise KeyError(f"Sample {self.id} has no {modality.value} data loaded")
        return np.asarray(values, dtype=np.float64)


class Manifest(BaseModel):
    """Validated evaluation pool: samples plus declared dimensions."""

    model_config = ConfigDict(frozen=True)

    schema_version: int = SCHEMA_VERSION
    dims: ModalityDims = Field(default_factory=ModalityDims)
    image_width: int = Field(default=DEFAULT_IMAGE_SIZE[0], gt=0)
    image_height: int = Field(default=DEFAULT_IMAGE_SIZE[1], gt=0)
    frame_rate: float = Field(default=DEFAULT_FRAME_RATE, gt=0)
    provenance: dict[str, str] = Field(default_factory=dict)
    sidecar: Optional[str] = None
    samples: tuple[Sample, ...] = ()

    _index: dict[str, int] = PrivateAttr(default_factory=dict)
    _labels: np.ndarray = PrivateAttr(default_factory=lambda: np.empty(0, dtype=np.int64))

    def model_post_init(self, __context: object) -> None:
        self._index = {sample.id: pos for pos, sample in enumerate(self.samples)}
        labels = np.fromiter((s.label for s in self.samples), dtype=np.int64, count=len(self.samples))
        labels.setflags(write=False)
        self._labels = labels

    def with_samples(self, samples: "tuple[Sample, ...] | list[Sample]") -> "Manifest":
        """Copy of this manifest holding different samples."""
        return Manifest(**{**self.model_dump(exclude={"samples"}), "samples": tuple(samples)})

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def ids(self) -> list[str]:
        """Sample ids in manifest order."""
        return [sample.id for sample in self.samples]

    def position(self, sample_id: str) -> int:
        """Manifest position of a sample id."""
        return self._index[sample_id]

    def get(self, sample_id: str) -> Sample:
        """Look up a sample by id."""
        return self.samples[self._index[sample_id]]

    @property
    def labels(self) -> np.ndarray:
        """Binary labels in manifest order (read-only)."""
        return self._labels
