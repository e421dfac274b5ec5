"""Settings data models for the CAPFI toolkit."""

import math
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationInfo, field_validator, model_validator

from capfi.config.defaults import (
    DEFAULT_DISTANCE_RANGE_M,
    DEFAULT_EPOCHS,
    DEFAULT_FEATURES,
    DEFAULT_L2,
    DEFAULT_LEARNING_RATE,
    DEFAULT_METRICS,
    DEFAULT_SPEED_RANGE_KMH,
    REFERENCE_TAG_COUNTS,
)
from capfi.data.models import (
    DEFAULT_FRAME_RATE,
    DEFAULT_IMAGE_SIZE,
    Crosswalk,
    Modality,
    ModalityDims,
    Proximity,
    Roadway,
    SpeedState,
    TrafficLight,
)
from capfi.utils.validators import validate_seed


class MetricName(str, Enum):
    """Evaluation metrics."""

    ACC = "acc"
    AUC = "auc"
    F1 = "f1"


class ExportFormat(str, Enum):
    """Report output formats."""

    STRUCTURED = "structured"
    TABULAR = "tabular"
    PLOT = "plot"


class Allocation(str, Enum):
    """How the generator assigns categorical tags and labels."""

    RANDOM = "random"
    EXACT = "exact"


class TrainingConfig(BaseModel):
    """Full-batch gradient descent settings for the builtin surrogate."""

    learning_rate: float = Field(default=DEFAULT_LEARNING_RATE, gt=0, le=10)
    epochs: int = Field(default=DEFAULT_EPOCHS, ge=0, le=100_000)
    l2: float = Field(default=DEFAULT_L2, ge=0)
    seed: int = Field(default=0)

    @field_validator("seed")
    @classmethod
    def validate_seed_range(cls, v: int) -> int:
        """Seeds are 64-bit."""
        return validate_seed(v)


class BuiltinOracleConfig(BaseModel):
    """Config file behind ``--oracle builtin:<cfgpath>``."""

    name: str = Field(default="builtin", min_length=1)
    version: str = Field(default="1")
    modalities: list[str] = Field(default_factory=lambda: list(DEFAULT_FEATURES), min_length=1)
    dt: Optional[int] = Field(default=None, ge=1)
    normalize_coordinates: bool = Field(default=True)
    train_fraction: float = Field(default=1.0, gt=0, le=1)
    training: TrainingConfig = Field(default_factory=TrainingConfig)
    weights_path: Optional[Path] = Field(default=None)


def _reference_weights(axis: str) -> dict[str, float]:
    counts = REFERENCE_TAG_COUNTS[axis]
    total = sum(counts.values())
    return {key: value / total for key, value in counts.items()}


def _check_distribution(weights: dict, axis: str) -> dict:
    if not weights:
        raise ValueError(f"{axis} weights must not be empty")
    if any(w < 0 or not math.isfinite(w) for w in weights.values()):
        raise ValueError(f"{axis} weights must be non-negative")
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"{axis} weights must sum to 1, got {total}")
    return weights


class TagWeights(BaseModel):
    """Categorical tag distribution per context axis."""

    roadway: dict[Roadway, float] = Field(default_factory=lambda: _reference_weights("roadway"))
    light: dict[TrafficLight, float] = Field(default_factory=lambda: _reference_weights("light"))
    crosswalk: dict[Crosswalk, float] = Field(
        default_factory=lambda: _reference_weights("crosswalk")
    )
    ego_speed_state: dict[SpeedState, float] = Field(
        default_factory=lambda: _reference_weights("ego_speed_state")
    )
    # None: proximity follows from the sampled initial distance
    proximity: Optional[dict[Proximity, float]] = Field(
        default_factory=lambda: _reference_weights("proximity")
    )

    @field_validator("roadway", "light", "crosswalk", "ego_speed_state")
    @classmethod
    def validate_axis(cls, v: dict, info: ValidationInfo) -> dict:
        """Each axis is a probability distribution."""
        return _check_distribution(v, info.field_name)

    @field_validator("proximity")
    @classmethod
    def validate_proximity(cls, v: Optional[dict]) -> Optional[dict]:
        """Proximity weights are optional."""
        return None if v is None else _check_distribution(v, "proximity")


class DependencyPlan(BaseModel):
    """Planted label dependence per modality, each weight in [0, 1]."""

    bbox: float = Field(default=0.0, ge=0, le=1)
    pose: float = Field(default=0.0, ge=0, le=1)
    local_context: float = Field(default=0.0, ge=0, le=1)
    speed: float = Field(default=0.0, ge=0, le=1)

    def as_dict(self) -> dict[str, float]:
        return {
            "bbox": self.bbox,
            "pose": self.pose,
            "local_context": self.local_context,
            "speed": self.speed,
        }


class GeneratorSpec(BaseModel):
    """Synthetic dataset specification with planted feature dependence."""

    n_samples: int = Field(default=1000, ge=0)
    seed: int = Field(default=0)
    dims: ModalityDims = Field(default_factory=ModalityDims)
    frame_rate: float = Field(default=DEFAULT_FRAME_RATE, gt=0)
    image_width: int = Field(default=DEFAULT_IMAGE_SIZE[0], gt=0)
    image_height: int = Field(default=DEFAULT_IMAGE_SIZE[1], gt=0)
    tag_weights: TagWeights = Field(default_factory=TagWeights)
    dependency: DependencyPlan = Field(default_factory=DependencyPlan)
    noise: float = Field(default=0.1, ge=0, lt=1)
    label_bias: float = Field(default=0.0)
    allocation: Allocation = Field(default=Allocation.RANDOM)
    # exact allocation only: share of samples labelled crossing
    positive_fraction: Optional[float] = Field(default=None, gt=0, lt=1)
    link_gain: float = Field(default=4.0, gt=0)
    speed_range_kmh: tuple[float, float] = Field(default=DEFAULT_SPEED_RANGE_KMH)
    distance_range_m: tuple[float, float] = Field(default=DEFAULT_DISTANCE_RANGE_M)

    @field_validator("seed")
    @classmethod
    def validate_seed_range(cls, v: int) -> int:
        """Seeds are 64-bit."""
        return validate_seed(v)

    @field_validator("speed_range_kmh", "distance_range_m")
    @classmethod
    def validate_range(cls, v: tuple[float, float]) -> tuple[float, float]:
        """Ranges are ordered and positive."""
        low, high = v
        if not (0 < low <= high):
            raise ValueError(f"Range must satisfy 0 < low <= high, got {v}")
        return v


class EngineSettings(BaseModel):
    """Knobs of the permutation engine."""

    repetitions: Optional[int] = Field(default=None, ge=1)
    max_workers: int = Field(default=1, ge=1, le=64)


class RunConfig(BaseModel):
    """One command-line run."""

    model_config = ConfigDict(use_enum_values=False)

    dataset: Path
    oracles: list[str] = Field(min_length=1)
    contexts: list[str] = Field(default_factory=lambda: ["base"], min_length=1)
    features: list[str] = Field(default_factory=lambda: list(DEFAULT_FEATURES), min_length=1)
    seed: int
    metrics: list[MetricName] = Field(
        default_factory=lambda: [MetricName(m) for m in DEFAULT_METRICS], min_length=1
    )
    out: Path = Field(default=Path("capfi_out"))
    formats: list[ExportFormat] = Field(default_factory=lambda: [ExportFormat.STRUCTURED])
    engine: EngineSettings = Field(default_factory=EngineSettings)
    source: Optional[str] = None
    donor: Optional[str] = None

    @field_validator("seed")
    @classmethod
    def validate_seed_range(cls, v: int) -> int:
        """Seed is mandatory and 64-bit."""
        return validate_seed(v)

    @field_validator("features")
    @classmethod
    def validate_features(cls, v: list[str]) -> list[str]:
        """Features are modality names."""
        valid = {m.value for m in Modality}
        unknown = [f for f in v if f not in valid]
        if unknown:
            raise ValueError(f"Unknown feature(s) {unknown}. Must be among: {sorted(valid)}")
        return v

    @model_validator(mode="after")
    def validate_cross_pair(self) -> "RunConfig":
        """Source and donor come together."""
        if (self.source is None) != (self.donor is None):
            raise ValueError("source and donor must be given together")
        return self
