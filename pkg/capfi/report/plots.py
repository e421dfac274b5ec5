"""Static SVG box plots of importance distributions, one file per context."""

import re
from pathlib import Path
from typing import Any, Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from loguru import logger  # noqa: E402

from capfi.core.importance import ImportanceRecord  # noqa: E402
from capfi.core.statistics import DistributionStats  # noqa: E402
from capfi.utils.serialization import write_canonical  # noqa: E402

# Fixed salt and no date: identical data renders identical bytes
SVG_RC = {"svg.hashsalt": "capfi", "svg.fonttype": "none"}
SVG_METADATA = {"Date": None}
WHISKER_IQR = 1.5

_SLUG_MAP = {"∩": "_and_", "∪": "_or_", "\\": "_minus_", "<-": "_from_", "(": "", ")": ""}


def context_slug(notation: str) -> str:
    """File-system friendly name for a context notation."""
    slug = notation
    for token, replacement in _SLUG_MAP.items():
        slug = slug.replace(token, replacement)
    return re.sub(r"[^A-Za-z0-9_]+", "_", slug).strip("_")


def box_data(values: Sequence[float], label: str) -> dict[str, Any]:
    """Tukey box statistics (linear quartiles, 1.5 IQR whiskers clipped to the data)."""
    stats = DistributionStats.from_values(values)
    arr = np.asarray(values, dtype=np.float64)
    low_fence = stats.q1 - WHISKER_IQR * stats.iqr
    high_fence = stats.q3 + WHISKER_IQR * stats.iqr
    inside = arr[(arr >= low_fence) & (arr <= high_fence)]
    fliers = arr[(arr < low_fence) | (arr > high_fence)]
    return {
        "label": label,
        "count": stats.count,
        "mean": stats.mean,
        "med": stats.median,
        "q1": stats.q1,
        "q3": stats.q3,
        "iqr": stats.iqr,
        "sigma": stats.sigma,
        "whislo": float(inside.min()) if inside.size else stats.q1,
        "whishi": float(inside.max()) if inside.size else stats.q3,
        "fliers": sorted(float(v) for v in fliers),
    }


def context_boxes(
    records: Iterable[ImportanceRecord], context: str, features: Sequence[str], metrics: Sequence[str]
) -> dict[str, list[dict[str, Any]]]:
    """Per metric, one box per feature of the pooled per-repetition importances."""
    selected = [r for r in records if r.context == context]
    boxes: dict[str, list[dict[str, Any]]] = {}
    for metric in metrics:
        entries = []
        for feature in features:
            values = [
                v for r in selected if r.metric == metric and r.feature == feature for v in r.importances
            ]
            if values:
                entries.append(box_data(values, feature))
        boxes[metric] = entries
    return boxes


def render_context(
    records: Sequence[ImportanceRecord],
    context: str,
    features: Sequence[str],
    metrics: Sequence[str],
    out_dir: Path,
) -> tuple[Path, Path]:
    """Render one context's box plots as SVG plus a JSON sidecar of the box data.

    Returns:
        ``(svg_path, sidecar_path)``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    slug = context_slug(context)
    svg_path = out_dir / f"capfi_{slug}.svg"
    sidecar_path = out_dir / f"capfi_{slug}.boxes.json"

    boxes = context_boxes(records, context, features, metrics)
    with plt.rc_context(SVG_RC):
        fig, axes = plt.subplots(
            1, len(metrics), figsize=(3.2 * len(metrics), 3.6), squeeze=False, sharey=False
        )
        for ax, metric in zip(axes[0], metrics):
            entries = boxes[metric]
            if entries:
                ax.bxp(entries, showmeans=False, showfliers=True, patch_artist=False)
            ax.axhline(0.0, color="tab:red", linestyle="--", linewidth=0.8, label="baseline")
            ax.set_title(metric.upper())
            ax.set_ylabel("importance")
            ax.tick_params(axis="x", labelrotation=30)
        fig.suptitle(context)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata=SVG_METADATA)
        plt.close(fig)

    write_canonical({"context": context, "features": list(features), "boxes": boxes}, sidecar_path)
    logger.debug(f"Rendered {svg_path}")
    return svg_path, sidecar_path


def render_all(
    records: Sequence[ImportanceRecord],
    contexts: Sequence[str],
    features: Sequence[str],
    metrics: Sequence[str],
    out_dir: Path,
) -> list[Path]:
    """Render every context; returns all written paths."""
    written: list[Path] = []
    for context in contexts:
        written.extend(render_context(records, context, features, metrics, out_dir))
    logger.info(f"Rendered {len(contexts)} box-plot file(s) into {out_dir}")
    return written
