"""Shared fixtures: hand-built manifests, synthetic pools and stub oracles."""

import math
import shlex
import sys
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
import pytest
from loguru import logger

from capfi.config.settings import (
    Allocation,
    BuiltinOracleConfig,
    DependencyPlan,
    GeneratorSpec,
    TrainingConfig,
)
from capfi.data.manifest import validate_sample
from capfi.data.models import ContextTagBundle, Manifest, Modality, ModalityDims, Sample
from capfi.features.transforms import FeatureLayout
from capfi.oracle.base import Oracle, OracleKind, OracleMetadata
from capfi.synth.generator import generate
from capfi.utils.rng import derive_rng

SMALL_DIMS = ModalityDims(frames=4, joints=2, embedding=2)
POOL_DIMS = ModalityDims(frames=6, joints=3, embedding=3)
ALL_FEATURES = ["bbox", "pose", "local_context", "speed"]

# Cardinality column of the reference taxonomy, in base-subset order
TABLE_CARDINALITIES = {
    "S_C": 258,
    "S_NC": 634,
    "S_FW": 441,
    "S_MB": 164,
    "S_TJ": 103,
    "S_Red": 93,
    "S_Yellow": 37,
    "S_Green": 242,
    "S_ZC": 239,
    "S_NZC": 653,
    "S_CP": 59,
    "S_MP": 542,
    "S_FP": 291,
    "S_Acc": 216,
    "S_Const": 298,
    "S_Stopped": 185,
    "S_Dec": 193,
}


@pytest.fixture(autouse=True)
def restore_log_sinks():
    """CLI runs reconfigure loguru; put a plain stderr sink back afterwards."""
    yield
    logger.remove()
    logger.add(lambda message: sys.stderr.write(message), level="WARNING")


class BlindOracle(Oracle):
    """Fixed random projection of every column except those of the ignored features.

    Rows are scored one at a time so a row's score never depends on the batch.
    """

    def __init__(
        self,
        layout: FeatureLayout,
        ignore: Iterable[str] = (),
        name: str = "blind",
        seed: int = 0,
    ):
        super().__init__(OracleMetadata(name, "1", layout.signature, OracleKind.BUILTIN), layout)
        ignored = [Modality(m) for m in ignore if Modality(m) in layout.modalities]
        keep = np.ones(layout.size, dtype=bool)
        for modality in ignored:
            keep[layout.columns(modality)] = False
        self.kept = np.flatnonzero(keep)
        self.weights = derive_rng(seed, "blind").normal(0.0, 0.05, size=self.kept.size)
        self.calls = 0

    def predict_matrix(self, features: np.ndarray) -> np.ndarray:
        self.calls += 1
        return np.array(
            [0.5 * (1.0 + math.tanh(float(np.dot(row[self.kept], self.weights)) / 2.0)) for row in features]
        )


def build_sample(
    sample_id: str,
    label: int = 0,
    roadway: str = "four_way",
    light: str = "green",
    crosswalk: str = "zebra",
    speed: Optional[Sequence[float]] = None,
    distance: Optional[Sequence[float]] = None,
    proximity: Optional[str] = None,
    offset: float = 0.0,
    dims: ModalityDims = SMALL_DIMS,
) -> Sample:
    """A valid, tag-resolved sample whose features are shifted by ``offset``."""
    frames = dims.frames
    sample = Sample(
        id=sample_id,
        label=label,
        tags=ContextTagBundle(roadway=roadway, light=light, crosswalk=crosswalk, proximity=proximity),
        bbox=[[100.0 + offset, 200.0, 150.0 + offset + t, 300.0 + t] for t in range(frames)],
        pose=[[10.0 + offset + k + 0.5 * t for k in range(2 * dims.joints)] for t in range(frames)],
        local_context=[[offset + 0.1 * k + 0.01 * t for k in range(dims.embedding)] for t in range(frames)],
        speed=list(speed) if speed is not None else [10.0] * frames,
        distance=list(distance) if distance is not None else [20.0 - 0.1 * t for t in range(frames)],
    )
    return validate_sample(sample, dims)


@pytest.fixture
def make_sample() -> Callable[..., Sample]:
    return build_sample


@pytest.fixture
def make_manifest() -> Callable[..., Manifest]:
    def _make(samples: Sequence[Sample], dims: ModalityDims = SMALL_DIMS) -> Manifest:
        return Manifest(dims=dims, samples=tuple(samples))

    return _make


@pytest.fixture
def small_manifest() -> Manifest:
    """Six samples spread over every tag axis; two of them stopped."""
    samples = [
        build_sample("s0", 1, "four_way", "green", "zebra", [10.0] * 4, [10.0] * 4, offset=0.0),
        build_sample("s1", 0, "midblock", "red", "non_zebra", [0.0, 2.0, 4.0, 6.0], [20.0] * 4, offset=1.0),
        build_sample("s2", 1, "t_junction", "yellow", "zebra", [0.0] * 4, [40.0] * 4, offset=2.0),
        build_sample("s3", 0, "four_way", "none", "non_zebra", [30.0, 27.0, 24.0, 21.0], [25.0] * 4, offset=3.0),
        build_sample("s4", 1, "midblock", "green", "non_zebra", [20.0] * 4, [12.0] * 4, offset=4.0),
        build_sample("s5", 0, "other", "none", "zebra", [0.0] * 4, [50.0] * 4, offset=5.0),
    ]
    return Manifest(dims=SMALL_DIMS, samples=tuple(samples))


@pytest.fixture
def layout_for() -> Callable[..., FeatureLayout]:
    def _layout(manifest: Manifest, features: Sequence[str] = ALL_FEATURES) -> FeatureLayout:
        return FeatureLayout.build(features, manifest.dims)

    return _layout


@pytest.fixture
def blind_oracle() -> Callable[..., BlindOracle]:
    return BlindOracle


@pytest.fixture
def pool_spec() -> GeneratorSpec:
    """Small planted pool: bbox drives labels, speed a little, pose and context not at all."""
    return GeneratorSpec(
        n_samples=300,
        seed=11,
        dims=POOL_DIMS,
        dependency=DependencyPlan(bbox=0.8, speed=0.2),
        noise=0.1,
        allocation=Allocation.EXACT,
        positive_fraction=0.3,
    )


@pytest.fixture
def pool(pool_spec: GeneratorSpec) -> Manifest:
    return generate(pool_spec)


@pytest.fixture
def table_cardinalities() -> dict[str, int]:
    return dict(TABLE_CARDINALITIES)


@pytest.fixture
def table_spec() -> GeneratorSpec:
    """Exact allocation at the reference tag counts."""
    return GeneratorSpec(
        n_samples=892,
        seed=2024,
        dims=SMALL_DIMS,
        dependency=DependencyPlan(bbox=1.0),
        noise=0.1,
        allocation=Allocation.EXACT,
        positive_fraction=258 / 892,
    )


@pytest.fixture
def quick_training() -> BuiltinOracleConfig:
    return BuiltinOracleConfig(
        name="logreg",
        modalities=ALL_FEATURES,
        training=TrainingConfig(learning_rate=0.5, epochs=200, l2=1e-3, seed=0),
    )


ECHO_SCRIPT = '''\
import json
import sys

layout, score, mode = sys.argv[1], float(sys.argv[2]), sys.argv[3]
hello = {"type": "hello", "name": "echo", "version": "0", "layout": layout}
if mode == "v2":
    hello["protocol"] = 2
print(json.dumps(hello), flush=True)
for line in sys.stdin:
    message = json.loads(line)
    if message["type"] == "bye":
        break
    if mode == "garbage":
        print("this is not json", flush=True)
    elif mode == "wrong-id":
        print(json.dumps({"type": "score", "id": message["id"] + 7, "score": score}), flush=True)
    else:
        print(json.dumps({"type": "score", "id": message["id"], "score": score, "note": "x"}), flush=True)
'''


@pytest.fixture
def echo_command(tmp_path: Path) -> Callable[..., str]:
    """Command line of a stub oracle process answering every request with ``score``."""
    script = tmp_path / "echo_oracle.py"
    script.write_text(ECHO_SCRIPT, encoding="utf-8")

    def _command(layout: FeatureLayout | str, score: float = 0.9, mode: str = "ok") -> str:
        signature = layout if isinstance(layout, str) else layout.signature
        parts = [sys.executable, str(script), signature, repr(score), mode]
        return " ".join(shlex.quote(p) for p in parts)

    return _command
