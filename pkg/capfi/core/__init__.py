"""Core CAPFI logic: metrics, permutations, importance and statistics."""

from capfi.core.importance import (
    CrossContextResult,
    ImportanceRecord,
    ImportanceReport,
    aggregate_importance,
    compute_cross,
    compute_pi,
    rank_contexts,
    run_full_analysis,
)
from capfi.core.metrics import (
    MetricTriple,
    PredictionBatch,
    accuracy,
    auc_roc,
    evaluate,
    f1,
    make_batch,
    pairwise_auc,
)
from capfi.core.permutation import (
    PermutationPlan,
    PermutedView,
    cross_context_permute,
    permute_within_context,
)
from capfi.core.statistics import DistributionStats, ImportanceSummary, importance_stats

__all__ = [
    "CrossContextResult",
    "DistributionStats",
    "ImportanceRecord",
    "ImportanceReport",
    "ImportanceSummary",
    "MetricTriple",
    "PermutationPlan",
    "PermutedView",
    "PredictionBatch",
    "accuracy",
    "aggregate_importance",
    "auc_roc",
    "compute_cross",
    "compute_pi",
    "cross_context_permute",
    "evaluate",
    "f1",
    "importance_stats",
    "make_batch",
    "pairwise_auc",
    "permute_within_context",
    "rank_contexts",
    "run_full_analysis",
]
