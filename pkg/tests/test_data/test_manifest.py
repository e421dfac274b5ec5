"""Tests for manifest loading, validation and writing."""

import json

import pytest

from capfi.data.manifest import load_manifest, manifest_from_dict, manifest_to_dict, save_manifest
from capfi.data.models import Proximity, SpeedState
from capfi.utils.exceptions import ManifestError, ValidationError


def _raw_sample(sample_id, frames=3, **overrides):
    sample = {
        "id": sample_id,
        "label": 1,
        "tags": {"roadway": "four_way", "light": "green", "crosswalk": "zebra"},
        "bbox": [[10.0, 20.0, 30.0, 60.0]] * frames,
        "pose": [[1.0, 2.0]] * frames,
        "local_context": [[0.5]] * frames,
        "speed": [12.0] * frames,
        "distance": [9.0] * frames,
    }
    sample.update(overrides)
    return sample


def _document(samples, frames=3):
    return {
        "schema_version": 1,
        "dims": {"frames": frames, "joints": 1, "embedding": 1},
        "samples": samples,
    }


def _write(tmp_path, document):
    path = tmp_path / "pool.json"
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


def test_load_three_samples(tmp_path):
    path = _write(tmp_path, _document([_raw_sample("a"), _raw_sample("b"), _raw_sample("c")]))
    manifest = load_manifest(path)
    assert manifest.ids == ["a", "b", "c"]
    assert manifest.samples[0].tags.proximity == Proximity.CLOSE
    assert manifest.samples[0].tags.ego_speed_state == SpeedState.CONSTANT


def test_inverted_bbox_names_sample(tmp_path):
    bad = _raw_sample("bad", bbox=[[30.0, 20.0, 10.0, 60.0]] * 3)
    path = _write(tmp_path, _document([_raw_sample("ok"), bad]))
    with pytest.raises(ValidationError) as info:
        load_manifest(path)
    assert info.value.sample_id == "bad"
    assert info.value.field == "bbox"


def test_bbox_outside_image_rejected(tmp_path):
    wide = _raw_sample("wide", bbox=[[1900.0, 200.0, 1950.0, 300.0]] * 3)
    path = _write(tmp_path, _document([_raw_sample("ok"), wide]))
    with pytest.raises(ValidationError, match="outside the 1920x1080 image") as info:
        load_manifest(path)
    assert info.value.sample_id == "wide"
    assert info.value.field == "bbox"


def test_bbox_bounds_follow_declared_image(tmp_path):
    document = _document([_raw_sample("a", bbox=[[10.0, 20.0, 300.0, 200.0]] * 3)])
    document["image_width"] = 320
    document["image_height"] = 240
    assert load_manifest(_write(tmp_path, document)).ids == ["a"]

    document["image_width"] = 200
    with pytest.raises(ValidationError, match="200x240"):
        load_manifest(_write(tmp_path, document))


def test_mixed_frame_counts(tmp_path):
    short = _raw_sample("short", speed=[12.0, 12.0])
    with pytest.raises(ValidationError, match="frame length mismatch"):
        load_manifest(_write(tmp_path, _document([short])))


def test_declared_width_enforced(tmp_path):
    wide = _raw_sample("wide", pose=[[1.0, 2.0, 3.0, 4.0]] * 3)
    with pytest.raises(ValidationError) as info:
        load_manifest(_write(tmp_path, _document([wide])))
    assert info.value.field == "pose"


def test_negative_speed_rejected(tmp_path):
    with pytest.raises(ValidationError) as info:
        load_manifest(_write(tmp_path, _document([_raw_sample("v", speed=[1.0, -1.0, 1.0])])))
    assert info.value.field == "speed"


def test_duplicate_ids(tmp_path):
    with pytest.raises(ValidationError, match="duplicate"):
        load_manifest(_write(tmp_path, _document([_raw_sample("a"), _raw_sample("a")])))


def test_missing_proximity_without_distance(tmp_path):
    raw = _raw_sample("nd")
    del raw["distance"]
    with pytest.raises(ValidationError) as info:
        load_manifest(_write(tmp_path, _document([raw])))
    assert info.value.field == "tags.proximity"


def test_explicit_tag_wins_over_derived(tmp_path):
    raw = _raw_sample("x")
    raw["tags"]["proximity"] = "far"
    manifest = load_manifest(_write(tmp_path, _document([raw])))
    assert manifest.samples[0].tags.proximity == Proximity.FAR


def test_malformed_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_missing_file(tmp_path):
    with pytest.raises(ManifestError):
        load_manifest(tmp_path / "absent.json")


def test_schema_version_required():
    with pytest.raises(ManifestError, match="schema_version"):
        manifest_from_dict({"samples": []})
    with pytest.raises(ManifestError, match="Unsupported"):
        manifest_from_dict({"schema_version": 99, "samples": []})


def test_save_and_load_inline(tmp_path, small_manifest):
    path = save_manifest(small_manifest, tmp_path / "pool.json")
    loaded = load_manifest(path)
    assert manifest_to_dict(loaded) == manifest_to_dict(small_manifest)


def test_save_with_sidecar(tmp_path, small_manifest):
    path = save_manifest(small_manifest, tmp_path / "pool.json", sidecar=True)
    bin_path = tmp_path / "pool.bin"
    assert bin_path.exists()
    # 6 samples x 4 frames x 2 dims x 4 bytes
    assert bin_path.stat().st_size == 6 * 4 * 2 * 4

    document = json.loads(path.read_text(encoding="utf-8"))
    assert document["sidecar"] == "pool.bin"
    assert all("local_context" not in s for s in document["samples"])
    assert document["samples"][1]["local_context_offset"] == 32

    loaded = load_manifest(path)
    for original, restored in zip(small_manifest.samples, loaded.samples):
        assert restored.local_context == pytest.approx(original.local_context, rel=1e-6)


def test_sidecar_offset_out_of_range(tmp_path, small_manifest):
    path = save_manifest(small_manifest, tmp_path / "pool.json", sidecar=True)
    document = json.loads(path.read_text(encoding="utf-8"))
    document["samples"][0]["local_context_offset"] = 10_000
    path.write_text(json.dumps(document), encoding="utf-8")
    with pytest.raises(ValidationError, match="offset"):
        load_manifest(path)
