"""Context-aware permutation importance.

For an oracle ``f``, a feature ``X`` and a context ``S`` of cardinality ``C``,
importance is the mean over ``N`` repetitions of
``metric(f, S) - metric(f, S with X shuffled among the members of S)``.
Shuffles derive from ``(seed, context, feature, repetition)`` only, so every
oracle in a run sees the same permutations.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Iterable, Optional, Sequence

import numpy as np
from loguru import logger

from capfi.config.defaults import DECISION_THRESHOLD, DEFAULT_METRICS, REPORT_SCHEMA_VERSION
from capfi.core.metrics import MetricTriple, PredictionBatch, evaluate, make_batch
from capfi.core.permutation import (
    PermutationPlan,
    PermutedView,
    context_rows,
    cross_context_permute,
    permute_within_context,
    permutation_digest,
)
from capfi.core.statistics import QUARTILE_METHOD, DistributionStats, importance_stats
from capfi.data.models import Manifest, Modality
from capfi.data.subsets import ContextSet
from capfi.utils.exceptions import (
    CapfiError,
    EmptyContextError,
    MetricUndefinedError,
    OracleProtocolError,
)

if TYPE_CHECKING:
    from capfi.oracle.base import BoundOracle, Oracle

STATUS_OK = "ok"
STATUS_UNDEFINED = "undefined"


@dataclass
class ImportanceRecord:
    """Importance of one feature for one model, context and metric."""

    model: str
    feature: str
    context: str
    metric: str
    cardinality: int
    repetitions: int
    baseline: Optional[float]
    permuted_values: list[float] = field(default_factory=list)
    absent: int = 0
    pi: Optional[float] = None
    stats: Optional[DistributionStats] = None
    status: str = STATUS_OK
    permutation_digest: str = ""

    @property
    def importances(self) -> list[float]:
        """Per-repetition ``baseline - permuted_j``."""
        if self.baseline is None:
            return []
        return [self.baseline - value for value in self.permuted_values]

    def to_dict(self) -> dict[str, Any]:
        stats = self.stats.get_summary() if self.stats else None
        return {
            "model": self.model,
            "feature": self.feature,
            "context": self.context,
            "metric": self.metric,
            "cardinality": self.cardinality,
            "repetitions": self.repetitions,
            "baseline": self.baseline,
            "permuted_values": list(self.permuted_values),
            "absent": self.absent,
            "pi": self.pi,
            "permuted_stats": stats,
            "status": self.status,
            "permutation_digest": self.permutation_digest,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ImportanceRecord":
        values = [float(v) for v in data.get("permuted_values", [])]
        return cls(
            model=data["model"],
            feature=data["feature"],
            context=data["context"],
            metric=data["metric"],
            cardinality=int(data["cardinality"]),
            repetitions=int(data["repetitions"]),
            baseline=data.get("baseline"),
            permuted_values=values,
            absent=int(data.get("absent", 0)),
            pi=data.get("pi"),
            stats=DistributionStats.from_values(values) if values else None,
            status=data.get("status", STATUS_OK),
            permutation_digest=data.get("permutation_digest", ""),
        )


def _bind(oracle: "Oracle | BoundOracle", manifest: Manifest) -> "BoundOracle":
    from capfi.oracle.base import BoundOracle

    if isinstance(oracle, BoundOracle):
        if oracle.manifest is not manifest:
            raise ValueError(f"Oracle {oracle.name} is bound to a different manifest")
        return oracle
    return oracle.bind(manifest)


def _baseline(
    bound: "BoundOracle", manifest: Manifest, context: ContextSet, rows: np.ndarray
) -> tuple[PredictionBatch, MetricTriple]:
    batch = make_batch(context.members, bound.base_scores[rows], manifest.labels[rows])
    return batch, evaluate(batch)


def _view_triple(
    bound: "BoundOracle", view: PermutedView, baseline: PredictionBatch, base_triple: MetricTriple
) -> MetricTriple:
    """Metrics of one view; a view scoring exactly like the baseline reuses its triple."""
    scores = bound.view_scores(view)
    if np.array_equal(scores, baseline.scores):
        return base_triple
    return evaluate(replace(baseline, scores=scores))


def _records_for(
    bound: "BoundOracle",
    manifest: Manifest,
    plan: PermutationPlan,
    views: Sequence[PermutedView],
    digest: str,
    metrics: Sequence[str],
    strict: bool,
) -> list[ImportanceRecord]:
    base_batch, baseline = _baseline(bound, manifest, plan.context, views[0].rows)
    permuted = [_view_triple(bound, view, base_batch, baseline) for view in views]

    records = []
    for metric in metrics:
        record = ImportanceRecord(
            model=bound.name,
            feature=plan.feature.value,
            context=plan.context.notation,
            metric=metric,
            cardinality=plan.context.cardinality,
            repetitions=len(views),
            baseline=baseline.get(metric),
            permutation_digest=digest,
        )
        if record.baseline is None:
            if strict:
                raise MetricUndefinedError(
                    f"Baseline {metric} undefined on {plan.context.notation} "
                    f"({baseline.positives} positive of {baseline.n})"
                )
            record.status = STATUS_UNDEFINED
            record.absent = len(views)
            records.append(record)
            continue

        for triple in permuted:
            value = triple.get(metric)
            if value is None:
                record.absent += 1
            else:
                record.permuted_values.append(value)
        if record.absent:
            logger.warning(
                f"{bound.name}/{plan.context.notation}/{plan.feature.value}: "
                f"{metric} absent in {record.absent} of {len(views)} repetitions"
            )
        if not record.permuted_values:
            if strict:
                raise MetricUndefinedError(
                    f"{metric} undefined in every repetition on {plan.context.notation}"
                )
            record.status = STATUS_UNDEFINED
        else:
            record.pi = float(np.mean(record.importances))
            record.stats = DistributionStats.from_values(record.permuted_values)
        records.append(record)
    return records


def _plan_views(manifest: Manifest, plan: PermutationPlan) -> tuple[list[PermutedView], str]:
    if plan.context.cardinality == 0:
        raise EmptyContextError(f"Context {plan.context.notation} has no samples")
    rows = context_rows(manifest, plan.context)
    views = [permute_within_context(manifest, plan, j, rows) for j in range(plan.n_repetitions)]
    return views, permutation_digest(views)


def compute_pi(
    oracle: "Oracle | BoundOracle",
    manifest: Manifest,
    plan: PermutationPlan,
    metrics: Sequence[str] = DEFAULT_METRICS,
    strict: bool = True,
) -> list[ImportanceRecord]:
    """Permutation importance of ``plan.feature`` on ``plan.context``, one record per metric.

    Args:
        oracle: Oracle, or an oracle already bound to ``manifest``.
        manifest: Evaluation pool.
        plan: Feature, context, seed and repetition count.
        metrics: Metric names to report.
        strict: Raise on undefined metrics instead of marking records undefined.

    Raises:
        EmptyContextError: For an empty context.
        MetricUndefinedError: In strict mode, when a metric has no value.
    """
    bound = _bind(oracle, manifest)
    views, digest = _plan_views(manifest, plan)
    return _records_for(bound, manifest, plan, views, digest, metrics, strict)


@dataclass
class ImportanceReport:
    """Everything one CAPFI run produced."""

    seed: int
    toolkit_version: str
    models: list[dict[str, Any]]
    manifest: dict[str, Any]
    contexts: list[dict[str, Any]]
    features: list[str]
    metrics: list[str]
    repetitions: Optional[int]
    baselines: list[dict[str, Any]] = field(default_factory=list)
    records: list[ImportanceRecord] = field(default_factory=list)
    failures: list[dict[str, Any]] = field(default_factory=list)
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "kind": "capfi",
            "toolkit_version": self.toolkit_version,
            "seed": self.seed,
            "models": self.models,
            "manifest": self.manifest,
            "contexts": self.contexts,
            "features": self.features,
            "metrics": self.metrics,
            "repetitions": self.repetitions,
            "conventions": conventions(),
            "baselines": self.baselines,
            "records": [record.to_dict() for record in self.records],
            "summary": [s.to_dict() for s in importance_stats(self.records)],
            "aggregates": aggregate_importance(self),
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ImportanceReport":
        return cls(
            seed=int(data["seed"]),
            toolkit_version=data["toolkit_version"],
            models=data["models"],
            manifest=data["manifest"],
            contexts=data["contexts"],
            features=data["features"],
            metrics=data["metrics"],
            repetitions=data.get("repetitions"),
            baselines=data.get("baselines", []),
            records=[ImportanceRecord.from_dict(r) for r in data.get("records", [])],
            failures=data.get("failures", []),
            schema_version=int(data["schema_version"]),
        )


def conventions() -> dict[str, Any]:
    """Numeric conventions stamped into every report."""
    return {
        "decision_threshold": DECISION_THRESHOLD,
        "quartiles": QUARTILE_METHOD,
        "sigma": "population",
        "f1_no_positives": 1.0,
        "f1_zero_precision_recall": 0.0,
        "auc_single_class": None,
        "permutation_unit": "sequence",
    }


def manifest_summary(manifest: Manifest) -> dict[str, Any]:
    labels = manifest.labels
    return {
        "samples": len(manifest),
        "positives": int(labels.sum()),
        "dims": manifest.dims.model_dump(),
        "provenance": dict(manifest.provenance),
    }


def _baselines(bounds: Sequence["BoundOracle"], manifest: Manifest, contexts: Sequence[ContextSet]) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    for bound in bounds:
        for context in contexts:
            if context.cardinality == 0:
                continue
            positions = context_rows(manifest, context)
            triple = evaluate(
                make_batch(context.members, bound.base_scores[positions], manifest.labels[positions])
            )
            rows.append({"model": bound.name, "context": context.notation, **triple.to_dict()})
    return rows


def run_full_analysis(
    manifest: Manifest,
    oracles: Sequence["Oracle"],
    contexts: Sequence[ContextSet],
    features: Sequence[str | Modality],
    seed: int,
    metrics: Sequence[str] = DEFAULT_METRICS,
    repetitions: Optional[int] = None,
    max_workers: int = 1,
) -> ImportanceReport:
    """Evaluate every (oracle, context, feature, metric) cell.

    Per-cell failures (empty contexts, undefined metrics and other toolkit
    errors) are collected in ``report.failures``; the remaining cells still
    run. A malformed oracle reply aborts the whole run. Cells may run on a
    thread pool; results are merged in cell order.

    Raises:
        OracleProtocolError: When an oracle breaks the wire protocol.
    """
    from capfi import __version__

    feature_list = [Modality(f) for f in features]
    bounds = [oracle.bind(manifest) for oracle in oracles]
    report = ImportanceReport(
        seed=seed,
        toolkit_version=__version__,
        models=[oracle.metadata.to_dict() for oracle in oracles],
        manifest=manifest_summary(manifest),
        contexts=[{"notation": c.notation, "cardinality": c.cardinality} for c in contexts],
        features=[f.value for f in feature_list],
        metrics=list(metrics),
        repetitions=repetitions,
    )

    for context in contexts:
        if context.cardinality == 0:
            logger.warning(f"Context {context.notation} is empty; skipping")
            report.failures.append(
                {"model": None, "context": context.notation, "feature": None,
                 "error": f"EmptyContextError: context {context.notation} has no samples"}
            )
    live = [c for c in contexts if c.cardinality > 0]
    report.baselines = _baselines(bounds, manifest, live)

    cells = [
        PermutationPlan(feature=f, context=c, base_seed=seed, repetitions=repetitions)
        for c in live
        for f in feature_list
    ]

    def run_cell(plan: PermutationPlan) -> tuple[list[list[ImportanceRecord]], list[dict[str, Any]]]:
        views, digest = _plan_views(manifest, plan)
        per_model: list[list[ImportanceRecord]] = []
        errors: list[dict[str, Any]] = []
        for bound in bounds:
            try:
                per_model.append(_records_for(bound, manifest, plan, views, digest, metrics, strict=False))
            except OracleProtocolError:
                raise
            except CapfiError as exc:
                logger.error(f"Cell {bound.name}/{plan.context.notation}/{plan.feature.value} failed: {exc}")
                per_model.append([])
                errors.append(
                    {"model": bound.name, "context": plan.context.notation,
                     "feature": plan.feature.value, "error": f"{type(exc).__name__}: {exc}"}
                )
        return per_model, errors

    logger.info(
        f"Running {len(cells)} cells x {len(bounds)} oracle(s) with {max_workers} worker(s), seed {seed}"
    )
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as executor:
            results = list(executor.map(run_cell, cells))
    else:
        results = [run_cell(plan) for plan in cells]

    for model_index in range(len(bounds)):
        for per_model, _ in results:
            report.records.extend(per_model[model_index])
    for _, errors in results:
        report.failures.extend(errors)
    return report


def aggregate_importance(report: ImportanceReport) -> dict[str, list[dict[str, Any]]]:
    """Mean PI per (feature, metric), over all models and per model.

    ``unweighted`` averages (model, context) cells equally; ``weighted``
    weighs each cell by its context cardinality.
    """

    def summarize(records: Iterable[ImportanceRecord]) -> Optional[dict[str, Any]]:
        usable = [r for r in records if r.pi is not None]
        if not usable:
            return None
        pis = np.array([r.pi for r in usable], dtype=np.float64)
        weights = np.array([r.cardinality for r in usable], dtype=np.float64)
        return {
            "unweighted": float(pis.mean()),
            "weighted": float(np.dot(pis, weights) / weights.sum()),
            "cells": len(usable),
        }

    overall: list[dict[str, Any]] = []
    per_model: list[dict[str, Any]] = []
    model_names = list(dict.fromkeys(r.model for r in report.records))
    for feature in report.features:
        for metric in report.metrics:
            cell = [r for r in report.records if r.feature == feature and r.metric == metric]
            summary = summarize(cell)
            if summary:
                overall.append({"feature": feature, "metric": metric, **summary})
            for model in model_names:
                summary = summarize(r for r in cell if r.model == model)
                if summary:
                    per_model.append({"model": model, "feature": feature, "metric": metric, **summary})
    return {"overall": overall, "per_model": per_model}


def rank_contexts(
    records: Iterable[ImportanceRecord], feature: str, metric: str
) -> list[tuple[str, float]]:
    """Contexts ordered by mean PI of ``feature`` (highest first, ties by notation)."""
    pis: dict[str, list[float]] = {}
    for record in records:
        if record.feature == feature and record.metric == metric and record.pi is not None:
            pis.setdefault(record.context, []).append(record.pi)
    ranked = [(context, float(np.mean(values))) for context, values in pis.items()]
    return sorted(ranked, key=lambda item: (-item[1], item[0]))


# ---------------- cross-context ----------------


@dataclass
class CrossContextResult:
    """Baseline vs donor-swapped metrics on a source context."""

    model: str
    feature: str
    source: str
    donor: str
    source_cardinality: int
    donor_cardinality: int
    draws: int
    baseline: MetricTriple
    permuted: dict[str, Optional[float]]
    permutation_digest: str

    @property
    def deltas(self) -> dict[str, Optional[float]]:
        """``permuted - baseline`` per metric (negative means a drop)."""
        deltas: dict[str, Optional[float]] = {}
        for metric, value in self.permuted.items():
            base = self.baseline.get(metric)
            deltas[metric] = None if value is None or base is None else value - base
        return deltas

    def to_dict(self) -> dict[str, Any]:
        return {
            "model": self.model,
            "feature": self.feature,
            "source": self.source,
            "donor": self.donor,
            "source_cardinality": self.source_cardinality,
            "donor_cardinality": self.donor_cardinality,
            "draws": self.draws,
            "baseline": self.baseline.to_dict(),
            "permuted": self.permuted,
            "deltas": self.deltas,
            "permutation_digest": self.permutation_digest,
        }


def compute_cross(
    oracle: "Oracle | BoundOracle",
    manifest: Manifest,
    feature: str | Modality,
    source: ContextSet,
    donor: ContextSet,
    seed: int,
    draws: int = 1,
    metrics: Sequence[str] = DEFAULT_METRICS,
) -> CrossContextResult:
    """Average metrics over ``draws`` donor swaps of ``feature`` into ``source``.

    Raises:
        EmptyContextError: For an empty source or donor.
    """
    if draws < 1:
        raise ValueError(f"draws must be >= 1, got {draws}")
    bound = _bind(oracle, manifest)
    feature = Modality(feature)
    views = [cross_context_permute(manifest, feature, source, donor, seed, d) for d in range(draws)]

    base_batch, baseline = _baseline(bound, manifest, source, views[0].rows)
    triples = [_view_triple(bound, view, base_batch, baseline) for view in views]

    permuted: dict[str, Optional[float]] = {}
    for metric in metrics:
        values = [t.get(metric) for t in triples]
        present = [v for v in values if v is not None]
        permuted[metric] = float(np.mean(present)) if present else None

    return CrossContextResult(
        model=bound.name,
        feature=feature.value,
        source=source.notation,
        donor=donor.notation,
        source_cardinality=source.cardinality,
        donor_cardinality=donor.cardinality,
        draws=draws,
        baseline=baseline,
        permuted=permuted,
        permutation_digest=permutation_digest(views),
    )
