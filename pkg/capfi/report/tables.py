"""Tabular views: context cardinalities, baselines and cross-context deltas."""

from typing import Any, Iterable, Mapping, Sequence

import pandas as pd

from capfi.core.importance import CrossContextResult
from capfi.data.subsets import BASE_GROUPS, ContextSet


def cardinality_table(subsets: Mapping[str, ContextSet]) -> pd.DataFrame:
    """Context group, notation and cardinality of every base subset, in reporting order."""
    rows = [
        {"group": group, "notation": notation, "cardinality": subsets[notation].cardinality}
        for group, entries in BASE_GROUPS.items()
        for notation, _ in entries
    ]
    return pd.DataFrame(rows, columns=["group", "notation", "cardinality"])


def baseline_frame(baselines: Iterable[Mapping[str, Any]]) -> pd.DataFrame:
    """One row per (model, context) with Acc, AUC, F1 and class balance."""
    columns = ["model", "context", "n", "positives", "negatives", "acc", "auc", "f1", "f1_degenerate"]
    return pd.DataFrame([dict(row) for row in baselines], columns=columns)


def cross_frame(results: Sequence[CrossContextResult], metrics: Sequence[str]) -> pd.DataFrame:
    """Baseline, permuted value and delta per metric for each cross-context swap."""
    rows = []
    for result in results:
        row: dict[str, Any] = {
            "model": result.model,
            "feature": result.feature,
            "source": result.source,
            "donor": result.donor,
            "source_cardinality": result.source_cardinality,
            "donor_cardinality": result.donor_cardinality,
            "draws": result.draws,
        }
        deltas = result.deltas
        for metric in metrics:
            row[f"{metric}_baseline"] = result.baseline.get(metric)
            row[f"{metric}_permuted"] = result.permuted.get(metric)
            row[f"delta_{metric}"] = deltas.get(metric)
        rows.append(row)
    return pd.DataFrame(rows)


def format_table(frame: pd.DataFrame, digits: int = 2) -> str:
    """Plain-text rendering for the terminal; numbers rounded for display only."""
    if frame.empty:
        return "(no rows)"
    return frame.to_string(index=False, float_format=lambda v: f"{v:.{digits}f}")
