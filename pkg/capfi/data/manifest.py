"""Manifest loading, validation and writing.

A manifest is one JSON document::

    {
      "schema_version": 1,
      "dims": {"frames": 15, "joints": 17, "embedding": 8},
      "image_width": 1920, "image_height": 1080, "frame_rate": 30.0,
      "provenance": {...},
      "sidecar": "pool.bin",            # optional
      "samples": [{"id": ..., "label": 0|1, "tags": {...},
                   "bbox": [[x1, y1, x2, y2], ...], "pose": [[...], ...],
                   "local_context": [[...], ...] | "local_context_offset": <byte offset>,
                   "speed": [...], "distance": [...]}, ...]
    }

Sidecar files hold little-endian float32 embeddings, row-major
``[sample][frame][dim]``, addressed by byte offset.
"""

import json
import math
from pathlib import Path
from typing import Any, Optional

import numpy as np
import pydantic
from loguru import logger

from capfi.data.models import SCHEMA_VERSION, Manifest, ModalityDims, Sample
from capfi.data.subsets import proximity_bucket
from capfi.features.transforms import speed_state
from capfi.utils.exceptions import ManifestError, ValidationError
from capfi.utils.serialization import write_canonical

SIDECAR_DTYPE = np.dtype("<f4")


def _check_frames(sample: Sample, field: str, values: Optional[list], frames: int) -> None:
    if values is not None and len(values) != frames:
        raise ValidationError(
            f"frame length mismatch: expected {frames} frames, got {len(values)}",
            sample_id=sample.id,
            field=field,
        )


def _check_width(sample: Sample, field: str, rows: list[list[float]], width: int) -> None:
    for frame, row in enumerate(rows):
        if len(row) != width:
            raise ValidationError(
                f"frame {frame} has {len(row)} values, declared width is {width}",
                sample_id=sample.id,
                field=field,
            )
        if not all(math.isfinite(v) for v in row):
            raise ValidationError(f"frame {frame} has non-finite values", sample.id, field)


def validate_sample(
    sample: Sample, dims: ModalityDims, image_size: Optional[tuple[int, int]] = None
) -> Sample:
    """Check every sample invariant and fill in derivable tags.

    Args:
        sample: Parsed sample (local_context already resolved).
        dims: Declared manifest dimensions.
        image_size: ``(width, height)``; bboxes must lie inside it when given.

    Returns:
        The sample with ``proximity`` and ``ego_speed_state`` tags resolved.

    Raises:
        ValidationError: Naming the sample id and offending field.
    """
    frames = dims.frames
    for field in ("bbox", "pose", "local_context", "speed", "distance"):
        _check_frames(sample, field, getattr(sample, field), frames)

    if sample.local_context is None:
        raise ValidationError("local_context missing", sample.id, "local_context")

    _check_width(sample, "bbox", sample.bbox, 4)
    _check_width(sample, "pose", sample.pose, 2 * dims.joints)
    _check_width(sample, "local_context", sample.local_context, dims.embedding)

    for frame, (x1, y1, x2, y2) in enumerate(sample.bbox):
        if not (x1 < x2 and y1 < y2):
            raise ValidationError(
                f"frame {frame} bbox ({x1}, {y1}, {x2}, {y2}) needs x1 < x2 and y1 < y2",
                sample.id,
                "bbox",
            )
        if image_size is None:
            continue
        width, height = image_size
        if x1 < 0 or y1 < 0 or x2 > width or y2 > height:
            raise ValidationError(
                f"frame {frame} bbox ({x1}, {y1}, {x2}, {y2}) outside the {width}x{height} image",
                sample.id,
                "bbox",
            )

    if any(not math.isfinite(v) or v < 0 for v in sample.speed):
        raise ValidationError("speed must be finite and >= 0", sample.id, "speed")
    if sample.distance is not None and any(
        not math.isfinite(v) or v <= 0 for v in sample.distance
    ):
        raise ValidationError("distance must be finite and > 0", sample.id, "distance")

    return _resolve_tags(sample)


def _resolve_tags(sample: Sample) -> Sample:
    """Fill derivable tags; explicit tags win, conflicts are logged."""
    tags = sample.tags
    updates: dict[str, Any] = {}

    derived_state = speed_state(sample.speed)
    if tags.ego_speed_state is None:
        updates["ego_speed_state"] = derived_state
    elif tags.ego_speed_state != derived_state:
        logger.warning(
            f"Sample {sample.id}: explicit ego_speed_state '{tags.ego_speed_state.value}' "
            f"conflicts with derived '{derived_state.value}'; keeping explicit"
        )

    if sample.distance is not None:
        derived_proximity = proximity_bucket(float(np.mean(sample.distance)))
        if tags.proximity is None:
            updates["proximity"] = derived_proximity
        elif tags.proximity != derived_proximity:
            logger.warning(
                f"Sample {sample.id}: explicit proximity '{tags.proximity.value}' "
                f"conflicts with derived '{derived_proximity.value}'; keeping explicit"
            )
    elif tags.proximity is None:
        raise ValidationError(
            "proximity tag missing and no distance trace to derive it from",
            sample.id,
            "tags.proximity",
        )

    if not updates:
        return sample
    return sample.model_copy(update={"tags": tags.model_copy(update=updates)})


def _read_sidecar(path: Path) -> np.ndarray:
    if not path.exists():
        raise ManifestError(f"Sidecar file not found: {path}")
    return np.fromfile(path, dtype=SIDECAR_DTYPE)


def _parse_sample(raw: Any, position: int) -> Sample:
    if not isinstance(raw, dict):
        raise ValidationError(f"sample #{position} is not an object")
    sample_id = raw.get("id")
    try:
        return Sample.model_validate(raw)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first["loc"])
        raise ValidationError(
            first["msg"],
            sample_id=str(sample_id) if sample_id is not None else f"#{position}",
            field=field,
        ) from exc


def manifest_from_dict(data: Any, base_dir: Optional[Path] = None) -> Manifest:
    """Validate an in-memory manifest document.

    Raises:
        ManifestError: Structural problems (not an object, bad version, sidecar).
        ValidationError: Sample or dimension invariant violations.
    """
    if not isinstance(data, dict):
        raise ManifestError("Manifest must be a JSON object")
    if "schema_version" not in data:
        raise ManifestError("Manifest is missing mandatory 'schema_version'")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ManifestError(
            f"Unsupported manifest schema_version {data['schema_version']!r} "
            f"(this toolkit reads version {SCHEMA_VERSION})"
        )

    header = {key: value for key, value in data.items() if key != "samples"}
    try:
        shell = Manifest.model_validate(header)
    except pydantic.ValidationError as exc:
        first = exc.errors()[0]
        raise ValidationError(
            f"manifest header: {first['msg']}", field=".".join(str(p) for p in first["loc"])
        ) from exc

    sidecar: Optional[np.ndarray] = None
    if shell.sidecar:
        sidecar = _read_sidecar((base_dir or Path.cwd()) / shell.sidecar)

    raw_samples = data.get("samples", [])
    if not isinstance(raw_samples, list):
        raise ManifestError("'samples' must be a list")

    dims = shell.dims
    block = dims.frames * dims.embedding
    samples: list[Sample] = []
    seen: set[str] = set()
    for position, raw in enumerate(raw_samples):
        sample = _parse_sample(raw, position)
        if sample.id in seen:
            raise ValidationError("duplicate sample id", sample.id, "id")
        seen.add(sample.id)

        if sample.local_context is None and sample.local_context_offset is not None:
            if sidecar is None:
                raise ValidationError(
                    "local_context_offset given but manifest has no sidecar",
                    sample.id,
                    "local_context_offset",
                )
            start = sample.local_context_offset // SIDECAR_DTYPE.itemsize
            chunk = sidecar[start : start + block]
            if sample.local_context_offset % SIDECAR_DTYPE.itemsize or len(chunk) != block:
                raise ValidationError(
                    "sidecar offset out of range", sample.id, "local_context_offset"
                )
            embedding = chunk.astype(np.float64).reshape(dims.frames, dims.embedding)
            sample = sample.model_copy(
                update={"local_context": embedding.tolist(), "local_context_offset": None}
            )

        samples.append(validate_sample(sample, dims, (shell.image_width, shell.image_height)))

    return shell.with_samples(samples)


def load_manifest(path: Path) -> Manifest:
    """Load and validate a manifest file.

    Args:
        path: Manifest JSON path.

    Returns:
        Validated, tag-resolved Manifest.

    Raises:
        ManifestError: Missing or malformed file.
        ValidationError: First offending sample id and field.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"Cannot read manifest {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"Malformed manifest {path}: {exc}") from exc

    manifest = manifest_from_dict(data, base_dir=path.parent)
    logger.info(f"Loaded manifest {path} with {len(manifest)} samples")
    return manifest


def manifest_to_dict(manifest: Manifest) -> dict[str, Any]:
    """Plain JSON document for a manifest (embeddings inline)."""
    document = manifest.model_dump(mode="json", exclude={"samples"})
    document["samples"] = [
        sample.model_dump(mode="json", exclude_none=True) for sample in manifest.samples
    ]
    return document


def save_manifest(manifest: Manifest, path: Path, sidecar: bool = False) -> Path:
    """Write a manifest as canonical JSON.

    Args:
        manifest: Manifest to write.
        path: Target JSON path.
        sidecar: Move embeddings to ``<stem>.bin`` next to the manifest.

    Returns:
        Path of the written manifest.
    """
    path = Path(path)
    document = manifest_to_dict(manifest)
    document.pop("sidecar", None)

    if sidecar:
        bin_path = path.with_suffix(".bin")
        offset = 0
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(bin_path, "wb") as handle:
            for entry, sample in zip(document["samples"], manifest.samples):
                embedding = np.asarray(sample.local_context, dtype=SIDECAR_DTYPE)
                handle.write(embedding.tobytes(order="C"))
                entry.pop("local_context", None)
                entry["local_context_offset"] = offset
                offset += embedding.nbytes
        document["sidecar"] = bin_path.name

    write_canonical(document, path)
    logger.info(f"Wrote manifest with {len(manifest)} samples to {path}")
    return path
