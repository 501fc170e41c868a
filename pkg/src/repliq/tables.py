"""Reading p-value tables and writing analysis and simulation outputs (CSV or JSON)."""

import io
import json
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Union

import pandas as pd
from pydantic import ValidationError

from .errors import InputValidationError
from .models import FeatureRecord, ReportRow, RValueReport


PathLike = Union[str, Path]

REQUIRED_COLUMNS = ("feature_id", "p1_left", "p1_right")
FOLLOWUP_COLUMNS = ("p2_left", "p2_right")
REPORT_COLUMNS = (
    "feature_id",
    "direction",
    "p1_directed",
    "p2_directed",
    "r_fdr",
    "r_fwer",
    "claimed",
    "claimed_fwer",
)
SIGNIFICANT_DIGITS = 10


class OutputFormat(str, Enum):
    """Artifact formats."""
    CSV = "csv"
    JSON = "json"


def format_value(value: Optional[float]) -> str:
    """Render a number with 10 significant digits ("" for missing)."""
    if value is None:
        return ""
    return format(value, f".{SIGNIFICANT_DIGITS}g")


def _rounded(value: Optional[float]) -> Optional[float]:
    return None if value is None else float(format_value(value))


def _probability(text: str, column: str, row: int, feature_id: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        raise InputValidationError(
            f"{column}={text!r} is not a number", feature_id=feature_id or None, row=row
        )


def read_feature_table(path: PathLike) -> list[FeatureRecord]:
    """Read a CSV table with columns feature_id, p1_left, p1_right[, p2_left, p2_right].

    Follow-up cells may be empty for features that were not followed up.

    Raises:
        InputValidationError: On unreadable or malformed tables and invalid p-values
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError as e:
        raise InputValidationError(f"input file not found: {path}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InputValidationError(f"malformed CSV {path}: {e}") from e

    frame.columns = [str(column).strip() for column in frame.columns]
    missing = [column for column in REQUIRED_COLUMNS if column not in frame.columns]
    if missing:
        raise InputValidationError(f"input is missing required columns: {', '.join(missing)}")
    has_followup = all(column in frame.columns for column in FOLLOWUP_COLUMNS)
    if not has_followup and any(column in frame.columns for column in FOLLOWUP_COLUMNS):
        raise InputValidationError("input must carry both p2_left and p2_right or neither")

    records = []
    for row_number, row in enumerate(frame.to_dict(orient="records"), start=1):
        feature_id = row["feature_id"].strip()
        if not feature_id:
            raise InputValidationError("empty feature_id", row=row_number)
        values: dict[str, Any] = {"feature_id": feature_id}
        for column in REQUIRED_COLUMNS[1:] + (FOLLOWUP_COLUMNS if has_followup else ()):
            values[column] = _probability(row[column], column, row_number, feature_id)
        for column in REQUIRED_COLUMNS[1:]:
            if values[column] is None:
                raise InputValidationError(f"{column} is empty", feature_id=feature_id, row=row_number)
        try:
            records.append(FeatureRecord(**values))
        except ValidationError as e:
            messages = "; ".join(
                f"{'.'.join(str(part) for part in err['loc']) or 'record'}: {err['msg']}"
                for err in e.errors()
            )
            raise InputValidationError(messages, feature_id=feature_id, row=row_number) from e
    return records


def _row_cells(row: ReportRow) -> dict[str, str]:
    return {
        "feature_id": row.feature_id,
        "direction": row.direction.value,
        "p1_directed": format_value(row.p1_directed),
        "p2_directed": format_value(row.p2_directed),
        "r_fdr": format_value(row.r_fdr),
        "r_fwer": format_value(row.r_fwer),
        "claimed": str(row.claimed).lower(),
        "claimed_fwer": "" if row.claimed_fwer is None else str(row.claimed_fwer).lower(),
    }


def _row_json(row: ReportRow) -> dict[str, Any]:
    return {
        "feature_id": row.feature_id,
        "direction": row.direction.value,
        "p1_directed": _rounded(row.p1_directed),
        "p2_directed": _rounded(row.p2_directed),
        "r_fdr": _rounded(row.r_fdr),
        "r_fwer": _rounded(row.r_fwer),
        "claimed": row.claimed,
        "claimed_fwer": row.claimed_fwer,
    }


def _metadata_lines(metadata: dict[str, Any]) -> str:
    return "".join(f"# {key}: {json.dumps(value, sort_keys=True)}\n" for key, value in metadata.items())


def render_report(report: RValueReport, fmt: OutputFormat = OutputFormat.CSV) -> str:
    """Render an analysis report as CSV (metadata in leading ``# key: value`` lines) or JSON."""
    if OutputFormat(fmt) is OutputFormat.JSON:
        payload = {"metadata": report.metadata, "rows": [_row_json(row) for row in report.rows]}
        return json.dumps(payload, indent=2) + "\n"

    frame = pd.DataFrame([_row_cells(row) for row in report.rows], columns=list(REPORT_COLUMNS))
    return _metadata_lines(report.metadata) + frame.to_csv(index=False, lineterminator="\n")


def write_report(
    report: RValueReport,
    path: Optional[PathLike],
    fmt: OutputFormat = OutputFormat.CSV,
) -> str:
    """Render a report and write it to ``path`` when given; returns the rendered text."""
    text = render_report(report, fmt)
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _split_metadata(text: str) -> tuple[dict[str, Any], str]:
    metadata: dict[str, Any] = {}
    lines = text.splitlines(keepends=True)
    body_start = 0
    for body_start, line in enumerate(lines):
        if not line.startswith("#"):
            break
        key, _, value = line[1:].strip().partition(":")
        metadata[key.strip()] = json.loads(value.strip())
    else:
        body_start = len(lines)
    return metadata, "".join(lines[body_start:])


def _optional_float(text: str) -> Optional[float]:
    return float(text) if text.strip() else None


def _optional_bool(text: str) -> Optional[bool]:
    text = text.strip().lower()
    return None if not text else text == "true"


def read_report(path: PathLike) -> RValueReport:
    """Re-read an analysis artifact written by ``write_report`` (format detected from content).

    Raises:
        InputValidationError: If the artifact cannot be parsed
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        if text.lstrip().startswith("{"):
            payload = json.loads(text)
            return RValueReport(
                rows=tuple(ReportRow(**row) for row in payload["rows"]),
                metadata=payload.get("metadata", {}),
            )

        metadata, body = _split_metadata(text)
        frame = pd.read_csv(io.StringIO(body), dtype=str, keep_default_na=False)
        rows = tuple(
            ReportRow(
                feature_id=cells["feature_id"],
                direction=cells["direction"],
                p1_directed=float(cells["p1_directed"]),
                p2_directed=float(cells["p2_directed"]),
                r_fdr=_optional_float(cells["r_fdr"]),
                r_fwer=_optional_float(cells["r_fwer"]),
                claimed=_optional_bool(cells["claimed"]) or False,
                claimed_fwer=_optional_bool(cells["claimed_fwer"]),
            )
            for cells in frame.to_dict(orient="records")
        )
        return RValueReport(rows=rows, metadata=metadata)
    except (KeyError, ValueError, pd.errors.ParserError) as e:
        raise InputValidationError(f"cannot parse report {path}: {e}") from e


def render_sim_results(rows: list[dict[str, Any]], metadata: dict[str, Any], fmt: OutputFormat) -> str:
    """Render simulation result rows as a flat table."""
    if OutputFormat(fmt) is OutputFormat.JSON:
        return json.dumps({"metadata": metadata, "rows": rows}, indent=2, sort_keys=False) + "\n"

    cells = [
        {
            key: "; ".join(value) if isinstance(value, list)
            else str(value).lower() if isinstance(value, bool)
            else format_value(value) if isinstance(value, float)
            else str(value)
            for key, value in row.items()
        }
        for row in rows
    ]
    frame = pd.DataFrame(cells, columns=list(rows[0]) if rows else None)
    return _metadata_lines(metadata) + frame.to_csv(index=False, lineterminator="\n")
