"""Synthetic context-tagged datasets with planted feature dependence.

Each sample carries four latent modality summaries:

- ``bbox``: relative growth of the bounding-box area over the window
- ``pose``: spread of the joints around their centroid
- ``local_context``: first embedding component
- ``speed``: slowness, i.e. minus the mean ego speed

The summaries are standardized over the pool and the label is drawn from
``(1 - noise) * sigmoid(gain * sum_m w_m * s_m + bias) + noise * u > 0.5``
with ``u`` uniform. Modalities with ``w_m = 0`` carry no label information.
Every draw comes from a stream derived from ``(seed, purpose, sample index)``.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence, TypeVar

import numpy as np
from loguru import logger

from capfi.config.defaults import CLOSE_PROXIMITY_M, MEDIUM_PROXIMITY_M, MIN_DISTANCE_M
from capfi.config.settings import Allocation, GeneratorSpec
from capfi.data.manifest import validate_sample
from capfi.data.models import (
    ContextTagBundle,
    Crosswalk,
    Manifest,
    Modality,
    Proximity,
    Roadway,
    Sample,
    SpeedState,
    TrafficLight,
)
from capfi.data.subsets import proximity_bucket
from capfi.oracle.builtin import sigmoid
from capfi.utils.exceptions import GenerationError
from capfi.utils.rng import derive_rng

PLANTED_MODALITIES = (Modality.BBOX, Modality.POSE, Modality.LOCAL_CONTEXT, Modality.SPEED)

# km/h per frame
_RAMP_RANGE = (0.3, 1.5)
# Pixels: joint template radius and per-frame jitter
_POSE_RADIUS = 40.0
_POSE_JITTER = 0.5
_EMBEDDING_JITTER = 0.05
# Keep bucket targets this far from bucket edges (meters)
_BUCKET_MARGIN = 0.05

E = TypeVar("E")


@dataclass
class _Draft:
    """A sample before its label is known."""

    tags: dict
    bbox: np.ndarray
    pose: np.ndarray
    local_context: np.ndarray
    speed: np.ndarray
    distance: np.ndarray


def _allocate(weights: dict[E, float], members: Sequence[E], n: int, seed: int, axis: str) -> list[E]:
    """Exact quotas (largest remainder), shuffled by a derived stream."""
    probs = np.array([weights.get(m, 0.0) for m in members], dtype=np.float64)
    raw = probs * n
    counts = np.floor(raw).astype(np.int64)
    shortfall = n - int(counts.sum())
    if shortfall > 0:
        order = np.argsort(-(raw - counts), kind="mergesort")
        counts[order[:shortfall]] += 1
    pool = [m for m, c in zip(members, counts) for _ in range(int(c))]
    order = derive_rng(seed, "allocate", axis).permutation(n)
    return [pool[k] for k in order]


def _draw(weights: dict[E, float], members: Sequence[E], rng: np.random.Generator) -> E:
    probs = np.array([weights.get(m, 0.0) for m in members], dtype=np.float64)
    return members[int(rng.choice(len(members), p=probs / probs.sum()))]


def _tag_plan(spec: GeneratorSpec) -> list[dict]:
    n = spec.n_samples
    weights = spec.tag_weights
    axes: list[tuple[str, Optional[dict], list]] = [
        ("roadway", weights.roadway, list(Roadway)),
        ("light", weights.light, list(TrafficLight)),
        ("crosswalk", weights.crosswalk, list(Crosswalk)),
        ("ego_speed_state", weights.ego_speed_state, list(SpeedState)),
        ("proximity", weights.proximity, list(Proximity)),
    ]
    plan: list[dict] = [{} for _ in range(n)]
    for axis, axis_weights, members in axes:
        if axis_weights is None:
            continue
        if spec.allocation == Allocation.EXACT:
            values = _allocate(axis_weights, members, n, spec.seed, axis)
        else:
            values = [
                _draw(axis_weights, members, derive_rng(spec.seed, "tag", axis, i)) for i in range(n)
            ]
        for i, value in enumerate(values):
            plan[i][axis] = value
    return plan


def _speed_trace(state: SpeedState, spec: GeneratorSpec, rng: np.random.Generator) -> np.ndarray:
    frames = spec.dims.frames
    low, high = spec.speed_range_kmh
    t = np.arange(frames, dtype=np.float64)
    if state == SpeedState.STOPPED:
        return np.zeros(frames)
    if state == SpeedState.CONSTANT:
        return np.full(frames, rng.uniform(low, high))

    ramp = rng.uniform(*_RAMP_RANGE)
    span = ramp * (frames - 1)
    if span > high - low:
        ramp = (high - low) / (frames - 1)
        span = high - low
    if state == SpeedState.ACCELERATING:
        return rng.uniform(low, high - span) + ramp * t
    return rng.uniform(low + span, high) - ramp * t


def _distance_trace(
    speed: np.ndarray, target: Optional[Proximity], spec: GeneratorSpec, rng: np.random.Generator
) -> np.ndarray:
    """Distances in meters: each frame the ego covers ``speed / 3.6 / frame_rate``."""
    step = speed / 3.6 / spec.frame_rate
    travelled = np.concatenate([[0.0], np.cumsum(step[:-1])])
    # shape relative to the first frame; mean offset is travelled.mean()
    low, high = spec.distance_range_m
    floor = MIN_DISTANCE_M + travelled[-1] - travelled.mean()

    if target is None:
        bounds = (low, high)
    elif target == Proximity.CLOSE:
        bounds = (low, CLOSE_PROXIMITY_M - _BUCKET_MARGIN)
    elif target == Proximity.MEDIUM:
        bounds = (CLOSE_PROXIMITY_M + _BUCKET_MARGIN, MEDIUM_PROXIMITY_M - _BUCKET_MARGIN)
    else:
        bounds = (MEDIUM_PROXIMITY_M + _BUCKET_MARGIN, max(high, MEDIUM_PROXIMITY_M + 1.0))
    lo = max(bounds[0], floor + _BUCKET_MARGIN)
    hi = max(bounds[1], lo)
    mean_distance = rng.uniform(lo, hi)

    start = mean_distance + travelled.mean()
    return start - travelled


def _bbox_trace(spec: GeneratorSpec, latent: float, rng: np.random.Generator) -> np.ndarray:
    frames = spec.dims.frames
    width_px, height_px = spec.image_width, spec.image_height
    growth = float(np.clip(0.25 + 0.15 * latent, -0.2, 0.7))
    base = width_px * rng.uniform(0.0286, 0.0339)
    cx = width_px * rng.uniform(0.49, 0.51)
    bottom = height_px * rng.uniform(0.64, 0.66)

    t = np.arange(frames, dtype=np.float64) / (frames - 1)
    widths = base * (1.0 + growth * t)
    heights = np.minimum(2.5 * widths, bottom - 1.0)
    return np.column_stack([cx - widths / 2, bottom - heights, cx + widths / 2, np.full(frames, bottom)])


def _pose_template(joints: int) -> np.ndarray:
    """Fixed joint layout in [-1, 1]^2, independent of the run seed."""
    return derive_rng(0, "pose-template", joints).uniform(-1.0, 1.0, size=(joints, 2))


def _pose_trace(spec: GeneratorSpec, latent: float, rng: np.random.Generator) -> np.ndarray:
    frames, joints = spec.dims.frames, spec.dims.joints
    spread = max(0.5, 1.0 + 0.15 * latent)
    anchor = np.array(
        [spec.image_width * rng.uniform(0.45, 0.55), spec.image_height * rng.uniform(0.45, 0.55)]
    )
    base = anchor + _pose_template(joints) * _POSE_RADIUS * spread
    jitter = rng.normal(0.0, _POSE_JITTER, size=(frames, joints, 2))
    return (base[None, :, :] + jitter).reshape(frames, 2 * joints)


def _embedding_trace(spec: GeneratorSpec, latent: float, rng: np.random.Generator) -> np.ndarray:
    frames, dim = spec.dims.frames, spec.dims.embedding
    base = rng.normal(0.0, 1.0, size=dim)
    base[0] = latent
    return base[None, :] + rng.normal(0.0, _EMBEDDING_JITTER, size=(frames, dim))


def modality_summaries(sample: Sample) -> dict[Modality, float]:
    """Scalar summary of each planted modality for one sample."""
    bbox = np.asarray(sample.bbox, dtype=np.float64)
    area = (bbox[:, 2] - bbox[:, 0]) * (bbox[:, 3] - bbox[:, 1])
    growth = (area[-1] / area[0] - 1.0) / (len(area) - 1)

    pose = np.asarray(sample.pose, dtype=np.float64).reshape(len(sample.pose), -1, 2)
    centroid = pose.mean(axis=1, keepdims=True)
    spread = float(np.linalg.norm(pose - centroid, axis=2).mean())

    embedding = np.asarray(sample.local_context, dtype=np.float64)
    return {
        Modality.BBOX: float(growth),
        Modality.POSE: spread,
        Modality.LOCAL_CONTEXT: float(embedding[:, 0].mean()),
        Modality.SPEED: -float(np.mean(sample.speed)),
    }


def _standardize(values: np.ndarray) -> np.ndarray:
    std = values.std()
    if std == 0:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def _labels(spec: GeneratorSpec, summaries: np.ndarray) -> np.ndarray:
    """Binary labels from standardized summaries (columns in PLANTED_MODALITIES order)."""
    weights = spec.dependency.as_dict()
    w = np.array([weights[m.value] for m in PLANTED_MODALITIES])
    standardized = np.column_stack([_standardize(summaries[:, k]) for k in range(summaries.shape[1])])
    link = sigmoid(spec.link_gain * standardized @ w + spec.label_bias)
    u = np.array([derive_rng(spec.seed, "label", i).uniform() for i in range(spec.n_samples)])
    score = (1.0 - spec.noise) * link + spec.noise * u

    if spec.allocation == Allocation.EXACT and spec.positive_fraction is not None:
        positives = int(round(spec.positive_fraction * spec.n_samples))
        labels = np.zeros(spec.n_samples, dtype=np.int64)
        order = np.argsort(-score, kind="mergesort")
        labels[order[:positives]] = 1
        return labels
    return (score > 0.5).astype(np.int64)


def check_feasible(spec: GeneratorSpec) -> None:
    """Raise GenerationError for specs that cannot produce a usable pool."""
    if spec.noise == 0 and not any(spec.dependency.as_dict().values()) and spec.positive_fraction is None:
        raise GenerationError(
            "Every dependency weight is zero and noise is 0: all labels would be identical"
        )


def generate(spec: GeneratorSpec) -> Manifest:
    """Generate a manifest with planted label dependence.

    Args:
        spec: Generator specification.

    Returns:
        Validated Manifest; identical specs give identical manifests.

    Raises:
        GenerationError: For an infeasible spec.
    """
    check_feasible(spec)
    n = spec.n_samples
    tag_plan = _tag_plan(spec)

    drafts: list[_Draft] = []
    for i, planned in enumerate(tag_plan):
        tags = dict(planned)
        if "ego_speed_state" not in tags:
            tags["ego_speed_state"] = list(SpeedState)[int(derive_rng(spec.seed, "state", i).integers(4))]
        latents = derive_rng(spec.seed, "latent", i).normal(size=3)
        speed = _speed_trace(tags["ego_speed_state"], spec, derive_rng(spec.seed, "speed", i))
        distance = _distance_trace(
            speed, tags.get("proximity"), spec, derive_rng(spec.seed, "distance", i)
        )
        tags["proximity"] = proximity_bucket(float(np.mean(distance)))
        drafts.append(
            _Draft(
                tags=tags,
                bbox=_bbox_trace(spec, latents[0], derive_rng(spec.seed, "bbox", i)),
                pose=_pose_trace(spec, latents[1], derive_rng(spec.seed, "pose", i)),
                local_context=_embedding_trace(spec, latents[2], derive_rng(spec.seed, "context", i)),
                speed=speed,
                distance=distance,
            )
        )

    samples = [
        Sample(
            id=f"syn_{i:06d}",
            label=0,
            tags=ContextTagBundle(**draft.tags),
            bbox=draft.bbox.tolist(),
            pose=draft.pose.tolist(),
            local_context=draft.local_context.tolist(),
            speed=draft.speed.tolist(),
            distance=draft.distance.tolist(),
        )
        for i, draft in enumerate(drafts)
    ]

    if n:
        summaries = np.array(
            [[modality_summaries(s)[m] for m in PLANTED_MODALITIES] for s in samples]
        )
        labels = _labels(spec, summaries)
        samples = [s.model_copy(update={"label": int(y)}) for s, y in zip(samples, labels)]

    image_size = (spec.image_width, spec.image_height)
    samples = [validate_sample(s, spec.dims, image_size) for s in samples]
    manifest = Manifest(
        dims=spec.dims,
        image_width=spec.image_width,
        image_height=spec.image_height,
        frame_rate=spec.frame_rate,
        provenance={
            "generator": "capfi.synth",
            "seed": str(spec.seed),
            "spec": spec.model_dump_json(),
        },
        samples=tuple(samples),
    )
    positives = int(manifest.labels.sum()) if n else 0
    logger.info(f"Generated {n} synthetic samples ({positives} crossing) with seed {spec.seed}")
    return manifest


@dataclass(frozen=True)
class PlantEntry:
    """Label correlation of one modality summary."""

    modality: str
    weight: float
    correlation: Optional[float]
    bound: float
    within_bound: bool

    def to_dict(self) -> dict:
        return {
            "modality": self.modality,
            "weight": self.weight,
            "correlation": self.correlation,
            "bound": self.bound,
            "within_bound": self.within_bound,
        }


@dataclass
class PlantReport:
    """Per-modality planted-dependence diagnostics."""

    n_samples: int
    entries: list[PlantEntry] = field(default_factory=list)

    def correlation(self, modality: str) -> Optional[float]:
        for entry in self.entries:
            if entry.modality == modality:
                return entry.correlation
        raise KeyError(modality)

    @property
    def null_modalities_ok(self) -> bool:
        """True when every zero-weight modality stays within the bound."""
        return all(e.within_bound for e in self.entries if e.weight == 0)

    def to_dict(self) -> dict:
        return {"n_samples": self.n_samples, "entries": [e.to_dict() for e in self.entries]}


def _pearson(x: np.ndarray, y: np.ndarray) -> Optional[float]:
    if x.std() == 0 or y.std() == 0:
        return None
    return float(np.corrcoef(x, y)[0, 1])


def plant_check(manifest: Manifest, spec: GeneratorSpec) -> PlantReport:
    """Empirical Pearson correlation of each modality summary with the label.

    Null modalities should satisfy ``|r| < 3 / sqrt(n)``.
    """
    n = len(manifest)
    report = PlantReport(n_samples=n)
    if n == 0:
        return report

    labels = manifest.labels.astype(np.float64)
    summaries = [modality_summaries(s) for s in manifest.samples]
    bound = 3.0 / np.sqrt(n)
    weights = spec.dependency.as_dict()
    for modality in PLANTED_MODALITIES:
        values = np.array([s[modality] for s in summaries])
        r = _pearson(values, labels)
        report.entries.append(
            PlantEntry(
                modality=modality.value,
                weight=weights[modality.value],
                correlation=r,
                bound=float(bound),
                within_bound=r is None or abs(r) < bound,
            )
        )
    return report
