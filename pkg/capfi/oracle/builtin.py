"""Builtin surrogate: L2-regularized logistic regression on standardized flat features.

Training is deterministic full-batch gradient descent from zero weights.
The step applied each epoch is ``learning_rate / L`` where ``L`` bounds the
curvature of the loss (largest eigenvalue of ``Z^T Z / 4n`` plus ``l2``), so
any ``learning_rate`` below 2 gives a non-increasing loss.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from loguru import logger

from capfi.config.settings import BuiltinOracleConfig, TrainingConfig
from capfi.core.permutation import PermutedView
from capfi.data.models import Manifest, ModalityDims
from capfi.features.transforms import FeatureLayout, feature_matrix
from capfi.oracle.base import BoundOracle, Oracle, OracleKind, OracleMetadata
from capfi.utils.exceptions import ConfigError, TrainingError
from capfi.utils.rng import derive_rng
from capfi.utils.serialization import write_canonical

MODEL_FORMAT = "capfi-builtin/v1"


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    exp_z = np.exp(z[~positive])
    out[~positive] = exp_z / (1.0 + exp_z)
    return out


@dataclass
class BuiltinModel:
    """Trained surrogate; ``weights`` holds one coefficient per flat column plus the bias last."""

    weights: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    layout: FeatureLayout
    training: TrainingConfig = field(default_factory=TrainingConfig)
    name: str = "builtin"
    version: str = "1"
    loss_history: list[float] = field(default_factory=list)

    @property
    def coef(self) -> np.ndarray:
        return self.weights[:-1]

    @property
    def bias(self) -> float:
        return float(self.weights[-1])

    def standardize(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.scale

    def logits(self, features: np.ndarray) -> np.ndarray:
        return self.standardize(features) @ self.coef + self.bias

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        return sigmoid(self.logits(features))


def logistic_loss(
    weights: np.ndarray, standardized: np.ndarray, labels: np.ndarray, l2: float
) -> float:
    """Mean log-loss plus ``l2 / 2 * ||coef||^2`` (bias not penalized)."""
    z = standardized @ weights[:-1] + weights[-1]
    # log(1 + e^z) - y z, stable for large |z|
    data_term = float(np.mean(np.logaddexp(0.0, z) - labels * z))
    return data_term + 0.5 * l2 * float(np.dot(weights[:-1], weights[:-1]))


def logistic_gradient(
    weights: np.ndarray, standardized: np.ndarray, labels: np.ndarray, l2: float
) -> np.ndarray:
    """Analytic gradient of :func:`logistic_loss`."""
    n = len(labels)
    residual = sigmoid(standardized @ weights[:-1] + weights[-1]) - labels
    grad = np.empty_like(weights)
    grad[:-1] = standardized.T @ residual / n + l2 * weights[:-1]
    grad[-1] = residual.mean()
    return grad


def _curvature_bound(standardized: np.ndarray, l2: float) -> float:
    n = standardized.shape[0]
    if standardized.shape[1] == 0:
        return 0.25 + l2
    spectral = float(np.linalg.norm(standardized, 2)) ** 2
    # bias column of ones contributes at most n
    return (spectral + n) / (4.0 * n) + l2


def _training_rows(manifest: Manifest, ids: Optional[Sequence[str]], fraction: float, seed: int) -> np.ndarray:
    if ids is None:
        rows = np.arange(len(manifest), dtype=np.int64)
    else:
        rows = np.array(sorted(manifest.position(i) for i in ids), dtype=np.int64)
    if fraction < 1.0 and len(rows):
        rng = derive_rng(seed, "train-split")
        keep = max(1, int(round(fraction * len(rows))))
        rows = np.sort(rng.choice(rows, size=keep, replace=False))
    return rows


def train_builtin(
    manifest: Manifest,
    ids: Optional[Sequence[str]] = None,
    config: Optional[BuiltinOracleConfig] = None,
) -> BuiltinModel:
    """Fit the surrogate on a training subset of a manifest.

    Args:
        manifest: Evaluation pool.
        ids: Training sample ids (all samples when None).
        config: Surrogate config; defaults apply when None.

    Returns:
        Trained BuiltinModel.

    Raises:
        TrainingError: Fewer than two samples of either class, or a diverging loss.
    """
    config = config or BuiltinOracleConfig()
    training = config.training
    layout = FeatureLayout.build(
        config.modalities, manifest.dims, config.dt, config.normalize_coordinates
    )

    rows = _training_rows(manifest, ids, config.train_fraction, training.seed)
    subset = manifest.with_samples([manifest.samples[r] for r in rows])
    labels = subset.labels.astype(np.float64)
    positives = int(labels.sum())
    if positives < 2 or len(labels) - positives < 2:
        raise TrainingError(
            f"Training set needs at least 2 samples per class, got "
            f"{positives} positive and {len(labels) - positives} negative"
        )

    features = feature_matrix(subset, layout)
    mean = features.mean(axis=0)
    scale = features.std(axis=0)
    scale[scale == 0] = 1.0
    standardized = (features - mean) / scale

    weights = np.zeros(layout.size + 1, dtype=np.float64)
    step = training.learning_rate / _curvature_bound(standardized, training.l2)
    history = [logistic_loss(weights, standardized, labels, training.l2)]
    for epoch in range(training.epochs):
        weights = weights - step * logistic_gradient(weights, standardized, labels, training.l2)
        loss = logistic_loss(weights, standardized, labels, training.l2)
        if not np.isfinite(loss) or not np.all(np.isfinite(weights)):
            raise TrainingError(f"Loss diverged at epoch {epoch}; lower the learning rate")
        history.append(loss)

    logger.info(
        f"Trained builtin '{config.name}' on {len(labels)} samples, {layout.size} features: "
        f"loss {history[0]:.4f} -> {history[-1]:.4f} in {training.epochs} epochs"
    )
    return BuiltinModel(
        weights=weights,
        mean=mean,
        scale=scale,
        layout=layout,
        training=training,
        name=config.name,
        version=config.version,
        loss_history=history,
    )


def gradient_check(
    model: BuiltinModel, features: np.ndarray, labels: np.ndarray, step: float = 1e-4
) -> float:
    """Compare the analytic gradient with central differences at the model weights.

    Returns:
        Max over weights of ``|analytic - numeric| / max(1, |analytic| + |numeric|)``.
    """
    standardized = model.standardize(np.atleast_2d(features))
    labels = np.asarray(labels, dtype=np.float64).ravel()
    l2 = model.training.l2
    analytic = logistic_gradient(model.weights, standardized, labels, l2)

    numeric = np.empty_like(analytic)
    for k in range(len(model.weights)):
        bump = np.zeros_like(model.weights)
        bump[k] = step
        upper = logistic_loss(model.weights + bump, standardized, labels, l2)
        lower = logistic_loss(model.weights - bump, standardized, labels, l2)
        numeric[k] = (upper - lower) / (2 * step)

    denom = np.maximum(1.0, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def save_model(model: BuiltinModel, path: Path) -> Path:
    """Dump a model as canonical JSON."""
    layout = model.layout
    document = {
        "format": MODEL_FORMAT,
        "name": model.name,
        "version": model.version,
        "layout": {
            "signature": layout.signature,
            "modalities": [m.value for m in layout.modalities],
            "dims": layout.dims.model_dump(),
            "dt": layout.dt,
            "normalize_coordinates": layout.normalize_coordinates,
        },
        "training": model.training.model_dump(mode="json"),
        "weights": model.weights.tolist(),
        "mean": model.mean.tolist(),
        "scale": model.scale.tolist(),
    }
    logger.info(f"Saving builtin model '{model.name}' to {path}")
    return write_canonical(document, Path(path))


def load_model(path: Path) -> BuiltinModel:
    """Load a model written by :func:`save_model`.

    Raises:
        ConfigError: Missing, malformed or inconsistent weight file.
    """
    path = Path(path)
    try:
        document: dict[str, Any] = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot read builtin model {path}: {exc}") from exc
    if document.get("format") != MODEL_FORMAT:
        raise ConfigError(f"{path} is not a {MODEL_FORMAT} model file")

    try:
        spec = document["layout"]
        layout = FeatureLayout.build(
            spec["modalities"],
            ModalityDims(**spec["dims"]),
            spec["dt"],
            spec["normalize_coordinates"],
        )
        weights = np.asarray(document["weights"], dtype=np.float64)
        mean = np.asarray(document["mean"], dtype=np.float64)
        scale = np.asarray(document["scale"], dtype=np.float64)
        training = TrainingConfig(**document["training"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"Malformed builtin model {path}: {exc}") from exc

    if layout.signature != spec["signature"]:
        raise ConfigError(f"{path}: stored layout signature does not match its layout")
    if not (len(weights) == layout.size + 1 and len(mean) == len(scale) == layout.size):
        raise ConfigError(f"{path}: weight vector length does not match layout size {layout.size}")
    if not np.all(np.isfinite(weights)):
        raise ConfigError(f"{path}: non-finite weights")

    return BuiltinModel(
        weights=weights,
        mean=mean,
        scale=scale,
        layout=layout,
        training=training,
        name=document.get("name", "builtin"),
        version=str(document.get("version", "1")),
    )


class BuiltinOracle(Oracle):
    """Oracle backed by a BuiltinModel."""

    def __init__(self, model: BuiltinModel):
        metadata = OracleMetadata(
            name=model.name,
            version=model.version,
            layout=model.layout.signature,
            kind=OracleKind.BUILTIN,
        )
        super().__init__(metadata, model.layout)
        self.model = model

    def predict_matrix(self, features: np.ndarray) -> np.ndarray:
        return self.model.predict_proba(features)

    def view_scores(self, bound: BoundOracle, view: PermutedView) -> np.ndarray:
        """Logit update touching only the permuted feature block."""
        scores = bound.base_scores[view.rows].copy()
        changed = bound.changed_rows(view)
        if not changed.any():
            return scores

        columns = bound.columns(view.feature)
        base_logits = bound.cached("logits", lambda: self.model.logits(bound.features))
        projection = bound.cached(
            ("projection", view.feature),
            lambda: self.model.standardize(bound.features)[:, columns] @ self.model.coef[columns],
        )
        rows = view.rows[changed]
        delta = projection[view.sources[changed]] - projection[rows]
        scores[changed] = sigmoid(base_logits[rows] + delta)
        return scores


def build_builtin_oracle(config: BuiltinOracleConfig, manifest: Manifest) -> BuiltinOracle:
    """Load the model at ``config.weights_path`` or train one on ``manifest``.

    A freshly trained model is written to ``weights_path`` when one is set.
    """
    if config.weights_path is not None and Path(config.weights_path).exists():
        model = load_model(Path(config.weights_path))
        logger.info(f"Loaded builtin model '{model.name}' from {config.weights_path}")
    else:
        model = train_builtin(manifest, None, config)
        if config.weights_path is not None:
            save_model(model, Path(config.weights_path))
    return BuiltinOracle(model)
