"""Distribution statistics of permutation scores."""

from collections import defaultdict
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from loguru import logger

if TYPE_CHECKING:
    from capfi.core.importance import ImportanceRecord

# numpy's default "linear" method: the p-quantile sits at (n - 1) * p
QUARTILE_METHOD = "linear"


@dataclass(frozen=True)
class DistributionStats:
    """Box-plot summary of a set of scores."""

    count: int
    mean: float
    median: float
    q1: float
    q3: float
    sigma: float
    minimum: float
    maximum: float

    @property
    def iqr(self) -> float:
        """Interquartile range (q3 - q1)."""
        return self.q3 - self.q1

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "DistributionStats":
        """Summarize values; sigma is the population standard deviation.

        Raises:
            ValueError: For an empty sequence.
        """
        arr = np.asarray(values, dtype=np.float64)
        if arr.size == 0:
            raise ValueError("Cannot summarize an empty distribution")
        q1, median, q3 = np.quantile(arr, [0.25, 0.5, 0.75], method=QUARTILE_METHOD)
        return cls(
            count=int(arr.size),
            mean=float(arr.mean()),
            median=float(median),
            q1=float(q1),
            q3=float(q3),
            sigma=float(arr.std(ddof=0)),
            minimum=float(arr.min()),
            maximum=float(arr.max()),
        )

    def get_summary(self) -> dict:
        """Get statistics summary.

        Returns:
            Dict with the box statistics.
        """
        return {
            "count": self.count,
            "mean": self.mean,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "iqr": self.iqr,
            "sigma": self.sigma,
            "min": self.minimum,
            "max": self.maximum,
        }


@dataclass(frozen=True)
class ImportanceSummary:
    """Pooled importance distribution of one (feature, context, metric) cell."""

    feature: str
    context: str
    metric: str
    models: tuple[str, ...]
    stats: DistributionStats

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "context": self.context,
            "metric": self.metric,
            "models": list(self.models),
            **self.stats.get_summary(),
        }


def importance_stats(records: Iterable["ImportanceRecord"]) -> list[ImportanceSummary]:
    """Pool per-repetition importances across models and summarize them.

    Each record contributes ``baseline - permuted_j`` for every present
    repetition ``j``. Cells keep first-seen order; records without values
    (undefined metrics) are skipped.
    """
    pooled: dict[tuple[str, str, str], list[float]] = defaultdict(list)
    models: dict[tuple[str, str, str], list[str]] = defaultdict(list)
    for record in records:
        values = record.importances
        if not values:
            continue
        key = (record.feature, record.context, record.metric)
        pooled[key].extend(values)
        if record.model not in models[key]:
            models[key].append(record.model)

    summaries = [
        ImportanceSummary(
            feature=feature,
            context=context,
            metric=metric,
            models=tuple(models[(feature, context, metric)]),
            stats=DistributionStats.from_values(values),
        )
        for (feature, context, metric), values in pooled.items()
    ]
    logger.debug(f"Summarized {len(summaries)} importance cells")
    return summaries
