"""Report storage: canonical JSON documents and flat CSV tables in one output directory."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Optional

import pandas as pd
from loguru import logger

from capfi.config.defaults import REPORT_SCHEMA_VERSION
from capfi.core.importance import ImportanceRecord, ImportanceReport
from capfi.utils.exceptions import ConfigError
from capfi.utils.serialization import write_canonical

CSV_FLOAT_FORMAT = "%.17g"

RECORD_COLUMNS = [
    "model",
    "feature",
    "context",
    "metric",
    "cardinality",
    "repetitions",
    "baseline",
    "pi",
    "mean",
    "median",
    "q1",
    "q3",
    "iqr",
    "sigma",
    "absent",
    "status",
    "permutation_digest",
]


def records_frame(records: Iterable[ImportanceRecord]) -> pd.DataFrame:
    """One row per ImportanceRecord; permuted-distribution stats flattened."""
    rows = []
    for record in records:
        stats = record.stats.get_summary() if record.stats else {}
        rows.append(
            {
                "model": record.model,
                "feature": record.feature,
                "context": record.context,
                "metric": record.metric,
                "cardinality": record.cardinality,
                "repetitions": record.repetitions,
                "baseline": record.baseline,
                "pi": record.pi,
                "mean": stats.get("mean"),
                "median": stats.get("median"),
                "q1": stats.get("q1"),
                "q3": stats.get("q3"),
                "iqr": stats.get("iqr"),
                "sigma": stats.get("sigma"),
                "absent": record.absent,
                "status": record.status,
                "permutation_digest": record.permutation_digest,
            }
        )
    return pd.DataFrame(rows, columns=RECORD_COLUMNS)


class ReportStore:
    """Writes every artifact of a run below ``out_dir``."""

    def __init__(self, out_dir: Path):
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        return self.out_dir / name

    def write_json(self, name: str, document: dict[str, Any]) -> Path:
        """Write a canonical JSON document (schema version stamped if missing)."""
        document = {"schema_version": REPORT_SCHEMA_VERSION, **document}
        path = write_canonical(document, self.path(name))
        self.written.append(path)
        logger.info(f"Wrote {path}")
        return path

    def write_table(self, name: str, frame: pd.DataFrame) -> Path:
        """Write a DataFrame as CSV with round-trip float precision."""
        path = self.path(name)
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        self.written.append(path)
        logger.info(f"Wrote {path} ({len(frame)} rows)")
        return path

    def write_report(self, report: ImportanceReport, name: str = "capfi_report.json") -> Path:
        return self.write_json(name, report.to_dict())

    def write_records_table(
        self, records: Iterable[ImportanceRecord], name: str = "capfi_records.csv"
    ) -> Path:
        return self.write_table(name, records_frame(records))


def load_document(path: Path, kind: Optional[str] = None) -> dict[str, Any]:
    """Read a report document written by this toolkit version.

    Raises:
        ConfigError: Unreadable file, wrong schema version or wrong kind.
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"Cannot read report {path}: {exc}") from exc
    if not isinstance(document, dict) or document.get("schema_version") != REPORT_SCHEMA_VERSION:
        raise ConfigError(
            f"Report {path} has schema_version {document.get('schema_version') if isinstance(document, dict) else None!r}, "
            f"expected {REPORT_SCHEMA_VERSION}"
        )
    if kind is not None and document.get("kind") != kind:
        raise ConfigError(f"Report {path} is a '{document.get('kind')}' report, expected '{kind}'")
    return document


def load_report(path: Path) -> ImportanceReport:
    """Load a CAPFI importance report."""
    return ImportanceReport.from_dict(load_document(path, kind="capfi"))
