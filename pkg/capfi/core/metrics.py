"""Evaluation metrics: accuracy, ROC AUC and F1 over a prediction batch."""

from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from capfi.config.defaults import DECISION_THRESHOLD
from capfi.utils.exceptions import EmptyBatchError, MetricUndefinedError


@dataclass(frozen=True)
class PredictionBatch:
    """Scores and true labels of one evaluation pass, in sample order."""

    ids: tuple[str, ...]
    scores: np.ndarray
    labels: np.ndarray
    threshold: float = DECISION_THRESHOLD

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def hard(self) -> np.ndarray:
        """Hard labels: 1 where score >= threshold."""
        return (self.scores >= self.threshold).astype(np.int64)

    @property
    def positives(self) -> int:
        return int(self.labels.sum())


def make_batch(
    ids: Sequence[str],
    scores: Sequence[float] | np.ndarray,
    labels: Sequence[int] | np.ndarray,
    threshold: float = DECISION_THRESHOLD,
) -> PredictionBatch:
    """Build a validated PredictionBatch.

    Raises:
        ValueError: Length mismatch, duplicate ids, scores outside [0, 1] or non-binary labels.
    """
    score_arr = np.asarray(scores, dtype=np.float64).ravel()
    label_arr = np.asarray(labels, dtype=np.int64).ravel()
    ids = tuple(ids)
    if not (len(ids) == len(score_arr) == len(label_arr)):
        raise ValueError(
            f"Batch length mismatch: {len(ids)} ids, {len(score_arr)} scores, {len(label_arr)} labels"
        )
    if len(set(ids)) != len(ids):
        raise ValueError("Batch ids must be unique")
    if np.any(~np.isfinite(score_arr)) or np.any((score_arr < 0) | (score_arr > 1)):
        raise ValueError("Scores must lie in [0, 1]")
    if np.any((label_arr != 0) & (label_arr != 1)):
        raise ValueError("Labels must be 0 or 1")
    return PredictionBatch(ids=ids, scores=score_arr, labels=label_arr, threshold=threshold)


def _require_samples(batch: PredictionBatch) -> None:
    if len(batch) == 0:
        raise EmptyBatchError("Metric requested on an empty batch")


def confusion_counts(batch: PredictionBatch) -> tuple[int, int, int, int]:
    """Return ``(tp, fp, tn, fn)`` at the batch threshold."""
    hard = batch.hard
    labels = batch.labels
    tp = int(np.sum((hard == 1) & (labels == 1)))
    fp = int(np.sum((hard == 1) & (labels == 0)))
    tn = int(np.sum((hard == 0) & (labels == 0)))
    fn = int(np.sum((hard == 0) & (labels == 1)))
    return tp, fp, tn, fn


def accuracy(batch: PredictionBatch) -> float:
    """Fraction of hard labels equal to the true labels.

    Raises:
        EmptyBatchError: For an empty batch.
    """
    _require_samples(batch)
    tp, _, tn, _ = confusion_counts(batch)
    return (tp + tn) / len(batch)


def average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with tied values sharing their average rank."""
    n = len(values)
    ranks = np.empty(n, dtype=np.float64)
    if n == 0:
        return ranks
    order = np.argsort(values, kind="mergesort")
    sorted_values = values[order]

    starts = np.empty(n, dtype=bool)
    starts[0] = True
    np.not_equal(sorted_values[1:], sorted_values[:-1], out=starts[1:])
    first = np.flatnonzero(starts)
    last = np.append(first[1:] - 1, n - 1)
    # a tie group spanning sorted positions i..j shares rank (i + j) / 2 + 1
    group_rank = 0.5 * (first + last) + 1.0
    ranks[order] = group_rank[np.cumsum(starts) - 1]
    return ranks


def auc_roc(batch: PredictionBatch) -> float:
    """Area under the ROC curve via the Mann-Whitney rank sum.

    Tied scores take their average rank, so a tied positive/negative pair
    counts one half.

    Raises:
        EmptyBatchError: For an empty batch.
        MetricUndefinedError: When only one class is present.
    """
    _require_samples(batch)
    positive = batch.labels == 1
    n_pos = int(positive.sum())
    n_neg = len(batch) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricUndefinedError(
            f"AUC undefined for a single-class batch ({n_pos} positive, {n_neg} negative)"
        )

    ranks = average_ranks(batch.scores)
    u_statistic = float(ranks[positive].sum()) - n_pos * (n_pos + 1) / 2.0
    return u_statistic / (n_pos * n_neg)


def pairwise_auc(batch: PredictionBatch) -> float:
    """O(n^2) concordance count; reference implementation of :func:`auc_roc`."""
    _require_samples(batch)
    pos = batch.scores[batch.labels == 1]
    neg = batch.scores[batch.labels == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise MetricUndefinedError("AUC undefined for a single-class batch")
    concordant = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                concordant += 1.0
            elif p == q:
                concordant += 0.5
    return concordant / (len(pos) * len(neg))


def f1(batch: PredictionBatch) -> float:
    """Harmonic mean of precision and recall.

    Degenerate cases: no positive labels and no positive predictions gives
    1.0; precision + recall = 0 gives 0.0.

    Raises:
        EmptyBatchError: For an empty batch.
    """
    _require_samples(batch)
    tp, fp, _, fn = confusion_counts(batch)
    if tp + fp + fn == 0:
        return 1.0
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class MetricTriple:
    """Acc, AUC and F1 of one batch; ``auc`` is None for single-class batches."""

    acc: float
    auc: Optional[float]
    f1: float
    n: int
    positives: int
    f1_degenerate: bool = False

    def get(self, metric: str) -> Optional[float]:
        """Metric value by name (``acc``, ``auc`` or ``f1``)."""
        if metric not in ("acc", "auc", "f1"):
            raise KeyError(f"Unknown metric '{metric}'")
        return getattr(self, metric)

    def to_dict(self) -> dict[str, Any]:
        return {
            "acc": self.acc,
            "auc": self.auc,
            "f1": self.f1,
            "n": self.n,
            "positives": self.positives,
            "negatives": self.n - self.positives,
            "f1_degenerate": self.f1_degenerate,
        }


def evaluate(batch: PredictionBatch) -> MetricTriple:
    """Compute all three metrics for a batch.

    Raises:
        EmptyBatchError: For an empty batch.
    """
    _require_samples(batch)
    try:
        auc: Optional[float] = auc_roc(batch)
    except MetricUndefinedError:
        auc = None
    tp, fp, _, fn = confusion_counts(batch)
    return MetricTriple(
        acc=accuracy(batch),
        auc=auc,
        f1=f1(batch),
        n=len(batch),
        positives=batch.positives,
        f1_degenerate=(tp + fp + fn == 0),
    )
