"""Report renderings: box plots and tables."""

from capfi.report.plots import box_data, context_slug, render_all, render_context
from capfi.report.tables import baseline_frame, cardinality_table, cross_frame, format_table

__all__ = [
    "baseline_frame",
    "box_data",
    "cardinality_table",
    "context_slug",
    "cross_frame",
    "format_table",
    "render_all",
    "render_context",
]
