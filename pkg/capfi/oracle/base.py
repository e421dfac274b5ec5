"""Oracle interface: anything that maps flattened feature vectors to crossing scores."""

import threading
from abc import ABC, abstractmethod
from dataclasses import dataclass
from enum import Enum
from typing import Any, Optional, Sequence

import numpy as np

from capfi.core.permutation import PermutedView
from capfi.data.models import DEFAULT_IMAGE_SIZE, Manifest, Modality, Sample
from capfi.features.transforms import FeatureLayout, feature_matrix, flatten
from capfi.utils.exceptions import LayoutMismatchError, OracleProtocolError


class OracleKind(str, Enum):
    """Where predictions come from."""

    BUILTIN = "builtin"
    EXTERNAL = "external"


@dataclass(frozen=True)
class OracleMetadata:
    """Identity of an oracle and the flat layout it expects."""

    name: str
    version: str
    layout: str
    kind: OracleKind

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "version": self.version,
            "layout": self.layout,
            "kind": self.kind.value,
        }


@dataclass(frozen=True)
class OraclePrediction:
    """Score of one sample."""

    sample_id: str
    score: float


class Oracle(ABC):
    """Black-box crossing-probability model over flat feature vectors."""

    def __init__(self, metadata: OracleMetadata, layout: FeatureLayout):
        if metadata.layout != layout.signature:
            raise LayoutMismatchError(
                f"Oracle '{metadata.name}' expects layout '{metadata.layout}', "
                f"run uses '{layout.signature}'"
            )
        self.metadata = metadata
        self.layout = layout

    @property
    def name(self) -> str:
        return self.metadata.name

    @abstractmethod
    def predict_matrix(self, features: np.ndarray) -> np.ndarray:
        """Score every row of an ``n x layout.size`` matrix.

        Returns:
            Scores in [0, 1], one per row, in row order.
        """

    def check_manifest(self, manifest: Manifest) -> None:
        """Raise LayoutMismatchError if the manifest dims differ from the layout."""
        if manifest.dims != self.layout.dims:
            raise LayoutMismatchError(
                f"Oracle '{self.name}' was built for dims {self.layout.dims.model_dump()}, "
                f"manifest declares {manifest.dims.model_dump()}"
            )

    def predict(
        self, samples: Sequence[Sample], image_dims: tuple[int, int] = DEFAULT_IMAGE_SIZE
    ) -> list[OraclePrediction]:
        """Score samples in input order.

        Raises:
            LayoutMismatchError: If a sample does not fit the layout.
            OracleProtocolError: For external transport failures.
        """
        if not samples:
            return []
        try:
            matrix = np.stack([flatten(s, self.layout, image_dims=image_dims) for s in samples])
        except ValueError as exc:
            raise LayoutMismatchError(f"Sample does not fit layout {self.layout.signature}: {exc}") from exc
        scores = self._checked(self.predict_matrix(matrix), len(samples))
        return [OraclePrediction(s.id, float(v)) for s, v in zip(samples, scores)]

    def bind(self, manifest: Manifest) -> "BoundOracle":
        """Prepare this oracle for repeated scoring of one manifest."""
        self.check_manifest(manifest)
        return BoundOracle(self, manifest)

    def view_scores(self, bound: "BoundOracle", view: PermutedView) -> np.ndarray:
        """Scores of ``view.rows`` as the view sees them.

        The default rebuilds and rescores only the rows whose feature block
        changed; every other row keeps its base score. Linear oracles override
        this with a cheaper update.
        """
        scores = bound.base_scores[view.rows].copy()
        changed = bound.changed_rows(view)
        if not changed.any():
            return scores
        rows = view.rows[changed]
        columns = bound.columns(view.feature)
        matrix = bound.features[rows].copy()
        matrix[:, columns] = bound.features[np.ix_(view.sources[changed], columns)]
        scores[changed] = self._checked(self.predict_matrix(matrix), len(rows))
        return scores

    def close(self) -> None:
        """Release resources (external processes)."""

    def _checked(self, scores: np.ndarray, expected: int) -> np.ndarray:
        scores = np.asarray(scores, dtype=np.float64).ravel()
        if len(scores) != expected:
            raise OracleProtocolError(
                f"Oracle '{self.name}' returned {len(scores)} scores for {expected} samples"
            )
        if np.any(~np.isfinite(scores)) or np.any((scores < 0) | (scores > 1)):
            raise OracleProtocolError(f"Oracle '{self.name}' returned scores outside [0, 1]")
        return scores

    def __enter__(self) -> "Oracle":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


class BoundOracle:
    """An oracle paired with one manifest's flat feature matrix."""

    def __init__(self, oracle: Oracle, manifest: Manifest):
        self.oracle = oracle
        self.manifest = manifest
        self.features = feature_matrix(manifest, oracle.layout)
        self._base_scores: Optional[np.ndarray] = None
        self._lock = threading.RLock()
        self.cache: dict[Any, np.ndarray] = {}

    @property
    def name(self) -> str:
        return self.oracle.name

    @property
    def base_scores(self) -> np.ndarray:
        """Scores of every manifest sample, unpermuted."""
        with self._lock:
            if self._base_scores is None:
                self._base_scores = self.oracle._checked(
                    self.oracle.predict_matrix(self.features), len(self.manifest)
                )
            return self._base_scores

    def columns(self, feature: Modality) -> np.ndarray:
        """Flat columns of ``feature``; empty when the layout does not use it."""
        if feature not in self.oracle.layout.modalities:
            return np.empty(0, dtype=np.int64)
        return self.oracle.layout.columns(feature)

    def changed_rows(self, view: PermutedView) -> np.ndarray:
        """Mask over ``view.rows``: True where the view alters the feature values."""
        columns = self.columns(view.feature)
        if columns.size == 0:
            return np.zeros(len(view.rows), dtype=bool)
        moved = view.sources != view.rows
        if not moved.any():
            return moved
        donated = self.features[np.ix_(view.sources[moved], columns)]
        own = self.features[np.ix_(view.rows[moved], columns)]
        moved[moved] = np.any(donated != own, axis=1)
        return moved

    def cached(self, key: Any, build: Any) -> np.ndarray:
        """Thread-safe memo for oracle-specific precomputations."""
        with self._lock:
            if key not in self.cache:
                self.cache[key] = build()
            return self.cache[key]

    def view_scores(self, view: PermutedView) -> np.ndarray:
        if view.manifest is not self.manifest:
            raise ValueError("View belongs to a different manifest")
        return self.oracle.view_scores(self, view)
