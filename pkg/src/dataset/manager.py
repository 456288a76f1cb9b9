"""
Dataset Manager for loading and persisting material records.

This module reads hydride databases from CSV or JSON-lines exports, validates
every row against the record invariants, and writes the JSON-lines store with
sibling CIF files that the rest of the pipeline consumes.
"""

from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple
from math import isnan
from pathlib import Path
import json
import logging

import pandas as pd
from pydantic import BaseModel, ValidationError

from src.cif.parser import parse_cif, write_cif
from src.errors import (
    DatasetError,
    MissingInputError,
    RecordValidationError,
    SchemaError,
)
from src.models.material import MaterialRecord
from src.utils.config import Settings

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
REQUIRED_COLUMNS = ("id", "formula", "e_form")
KNOWN_COLUMNS = (
    "id",
    "formula",
    "e_form",
    "energy_above_hull",
    "density",
    "band_gap",
    "f_character",
    "w_h2",
    "score",
    "cif_path",
    "schema_version",
)
STRUCTURES_DIRNAME = "structures"

RecordFormat = Literal["csv", "json-lines"]


class RowDiagnostic(BaseModel):
    """A row that failed validation while loading."""

    line: int
    record_id: Optional[str] = None
    reason: str


def detect_format(path: Path) -> RecordFormat:
    """Infer the record format from the file extension."""
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "json-lines"
    raise SchemaError(f"Cannot infer record format from {path.name}; use .csv or .jsonl")


def _is_missing(value: Any) -> bool:
    if value is None:
        return True
    if isinstance(value, float) and isnan(value):
        return True
    return isinstance(value, str) and value.strip() == ""


def _optional_float(row: Dict[str, Any], column: str) -> Optional[float]:
    value = row.get(column)
    if _is_missing(value):
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise RecordValidationError(f"column {column!r} is not numeric: {value!r}") from None


def _row_to_record(row: Dict[str, Any], base_dir: Path, extra_columns: Sequence[str]) -> MaterialRecord:
    for column in REQUIRED_COLUMNS:
        if _is_missing(row.get(column)):
            raise RecordValidationError(f"missing value for {column!r}")

    structure = None
    cif_path = row.get("cif_path")
    if not _is_missing(cif_path):
        path = Path(str(cif_path))
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise RecordValidationError(f"CIF file not found: {path}")
        structure = parse_cif(path.read_text(encoding="utf-8"))
        structure = structure.model_copy(update={"source_id": str(row["id"])})

    extra: Dict[str, float] = {}
    for column in extra_columns:
        value = row.get(column)
        if _is_missing(value):
            continue
        try:
            extra[column] = float(value)
        except (TypeError, ValueError):
            continue

    return MaterialRecord(
        id=str(row["id"]).strip(),
        formula=str(row["formula"]).strip(),
        structure=structure,
        e_form=float(row["e_form"]),
        energy_above_hull=_optional_float(row, "energy_above_hull"),
        density=_optional_float(row, "density"),
        band_gap=_optional_float(row, "band_gap"),
        w_h2=_optional_float(row, "w_h2"),
        score=_optional_float(row, "score"),
        f_character=_optional_float(row, "f_character"),
        extra=extra,
    )


def _read_rows(path: Path, fmt: RecordFormat) -> Tuple[List[str], List[Tuple[int, Dict[str, Any]]]]:
    """Return (columns, [(line number, row)])."""
    if fmt == "csv":
        try:
            frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
        except pd.errors.EmptyDataError:
            raise SchemaError(f"{path} is empty") from None
        columns = [str(column).strip() for column in frame.columns]
        frame.columns = columns
        # header is line 1
        rows = [(index + 2, record) for index, record in enumerate(frame.to_dict(orient="records"))]
        return columns, rows

    rows = []
    columns: List[str] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as e:
            rows.append((line_no, {"__error__": f"invalid JSON: {e.msg}"}))
            continue
        if not isinstance(row, dict):
            rows.append((line_no, {"__error__": "line is not a JSON object"}))
            continue
        for key in row:
            if key not in columns:
                columns.append(key)
        rows.append((line_no, row))
    return columns, rows


def load_records(
    path: Path,
    fmt: Optional[RecordFormat] = None,
    strict: bool = False,
    diagnostics: Optional[List[RowDiagnostic]] = None,
) -> List[MaterialRecord]:
    """
    Load material records from a CSV or JSON-lines file.

    Args:
        path: Input file
        fmt: "csv" or "json-lines"; inferred from the extension when omitted
        strict: Raise on the first invalid row instead of skipping it
        diagnostics: Optional list receiving one entry per skipped row

    Returns:
        One record per valid row, in file order
    """
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"Record file not found: {path}")
    fmt = fmt or detect_format(path)

    columns, rows = _read_rows(path, fmt)
    if fmt == "csv" or rows:
        missing = [column for column in REQUIRED_COLUMNS if column not in columns]
        if missing:
            raise SchemaError(f"{path.name} lacks required columns: {', '.join(missing)}")
    extra_columns = [column for column in columns if column not in KNOWN_COLUMNS]

    records: List[MaterialRecord] = []
    seen: Dict[str, int] = {}
    for line_no, row in rows:
        try:
            if "__error__" in row:
                raise RecordValidationError(row["__error__"])
            record = _row_to_record(row, path.parent, extra_columns)
        except ValueError as e:
            reason = _summarize(e) if isinstance(e, ValidationError) else str(e)
            if strict:
                raise RecordValidationError(f"{path.name} line {line_no}: {reason}") from e
            logger.warning(f"Skipping {path.name} line {line_no}: {reason}")
            if diagnostics is not None:
                diagnostics.append(RowDiagnostic(line=line_no, record_id=row.get("id"), reason=reason))
            continue

        if record.id in seen:
            raise DatasetError(
                f"Duplicate id {record.id!r} on lines {seen[record.id]} and {line_no} of {path.name}"
            )
        seen[record.id] = line_no
        records.append(record)

    logger.info(f"Loaded {len(records)} records from {path} ({len(rows) - len(records)} skipped)")
    return records


def _summarize(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"])
        parts.append(f"{location}: {item['msg']}" if location else item["msg"])
    return "; ".join(parts)


def record_to_row(record: MaterialRecord, cif_path: Optional[str] = None) -> Dict[str, Any]:
    """Flatten a record into a JSON-lines / CSV row."""
    row: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "id": record.id,
        "formula": record.formula_text,
        "e_form": record.e_form,
        "energy_above_hull": record.energy_above_hull,
        "density": record.density,
        "band_gap": record.band_gap,
        "f_character": record.f_character,
        "w_h2": record.w_h2,
        "score": record.score,
        "cif_path": cif_path,
    }
    row.update(record.extra)
    return row


def save_records(records: Sequence[MaterialRecord], path: Path) -> Path:
    """
    Write records as JSON-lines with structures as sibling CIF files.

    Args:
        records: Records to persist
        path: Target ``.jsonl`` file; CIFs go to ``<dir>/structures/<id>.cif``

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    structures_dir = path.parent / STRUCTURES_DIRNAME

    lines = []
    for record in records:
        cif_path = None
        if record.structure is not None:
            structures_dir.mkdir(exist_ok=True)
            cif_file = structures_dir / f"{_safe_name(record.id)}.cif"
            cif_file.write_text(write_cif(record.structure), encoding="utf-8")
            cif_path = f"{STRUCTURES_DIRNAME}/{cif_file.name}"
        lines.append(json.dumps(record_to_row(record, cif_path)))

    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
    logger.info(f"Saved {len(records)} records to {path}")
    return path


def _safe_name(record_id: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in record_id)


class DatasetManager:
    """
    Manages the hydride record store of a run and provides a unified interface
    for loading exports, appending new records and describing the schema.
    """

    def __init__(self, settings: Settings):
        self.settings = settings
        self.diagnostics: List[RowDiagnostic] = []

    def load(self, path: Optional[Path] = None, fmt: Optional[RecordFormat] = None) -> List[MaterialRecord]:
        """
        Load records using the configured strictness.

        Args:
            path: Input file; defaults to ``settings.dataset_path``
            fmt: Optional explicit format

        Returns:
            Loaded records
        """
        path = path or self.settings.dataset_path
        if path is None:
            raise MissingInputError("No dataset path configured")
        self.diagnostics = []
        return load_records(Path(path), fmt, strict=self.settings.strict_loading, diagnostics=self.diagnostics)

    def save(self, records: Sequence[MaterialRecord], path: Path) -> Path:
        """Persist records to the JSON-lines store."""
        return save_records(records, path)

    def append(self, store: Path, new_records: Sequence[MaterialRecord]) -> List[MaterialRecord]:
        """
        Add records to an existing store; ids must stay unique.

        Args:
            store: JSON-lines store (created when absent)
            new_records: Records to add

        Returns:
            The combined record list
        """
        existing = load_records(store, "json-lines", strict=True) if Path(store).exists() else []
        ids = {record.id for record in existing}
        clashes = sorted(ids.intersection(record.id for record in new_records))
        if clashes:
            raise DatasetError(f"Records already present in {store}: {', '.join(clashes)}")
        combined = list(existing) + list(new_records)
        save_records(combined, store)
        return combined

    def describe(self, records: Sequence[MaterialRecord]) -> Dict[str, Any]:
        """
        Summarize the schema of a record set.

        Returns:
            Dict with record count, structure coverage and extra columns
        """
        extra_columns = sorted({key for record in records for key in record.extra})
        return {
            "records": len(records),
            "with_structure": sum(record.structure is not None for record in records),
            "with_hydrogen": sum(record.formula.count("H") > 0 for record in records),
            "extra_columns": extra_columns,
            "skipped_rows": [diagnostic.model_dump() for diagnostic in self.diagnostics],
        }
