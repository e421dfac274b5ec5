"""Tests for box statistics of permutation scores."""

import pytest

from capfi.core.importance import ImportanceRecord
from capfi.core.statistics import DistributionStats, importance_stats


def test_quartiles_use_linear_interpolation():
    stats = DistributionStats.from_values([1.0, 2.0, 3.0, 4.0])
    assert stats.q1 == 1.75
    assert stats.median == 2.5
    assert stats.q3 == 3.25
    assert stats.iqr == 1.5
    assert stats.mean == 2.5


def test_sigma_is_population():
    stats = DistributionStats.from_values([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0])
    assert stats.sigma == 2.0


def test_single_value():
    stats = DistributionStats.from_values([0.7])
    assert (stats.q1, stats.median, stats.q3) == (0.7, 0.7, 0.7)
    assert stats.sigma == 0.0
    assert stats.count == 1


def test_constant_values():
    stats = DistributionStats.from_values([0.25] * 9)
    assert stats.sigma == 0.0
    assert stats.iqr == 0.0
    assert stats.minimum == stats.maximum == 0.25


def test_empty_rejected():
    with pytest.raises(ValueError):
        DistributionStats.from_values([])


def test_summary_keys():
    summary = DistributionStats.from_values([0.1, 0.3]).get_summary()
    assert set(summary) == {"count", "mean", "median", "q1", "q3", "iqr", "sigma", "min", "max"}


def record(model, baseline, permuted, context="S_C", metric="acc"):
    return ImportanceRecord(
        model=model,
        feature="speed",
        context=context,
        metric=metric,
        cardinality=4,
        repetitions=len(permuted),
        baseline=baseline,
        permuted_values=list(permuted),
    )


def test_importance_stats_pool_models():
    summaries = importance_stats(
        [
            record("a", 1.0, [0.75, 0.5]),
            record("b", 0.5, [0.5, 0.25]),
            record("a", 1.0, [1.0], context="S_NC"),
            record("a", None, [], metric="auc"),
        ]
    )
    assert [(s.context, s.metric) for s in summaries] == [("S_C", "acc"), ("S_NC", "acc")]
    pooled = summaries[0]
    assert pooled.models == ("a", "b")
    assert pooled.stats.count == 4
    # pooled drops: 0.25, 0.5, 0.0, 0.25
    assert pooled.stats.mean == 0.25
    assert pooled.to_dict()["models"] == ["a", "b"]
