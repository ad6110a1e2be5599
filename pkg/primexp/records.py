"""CSV / JSONL persistence of experiment records with 17-significant-digit floats."""
import csv
import io
import json
import math
import sys
from typing import Iterable, List, Optional

from pydantic import ValidationError

from primexp.errors import DomainError, EmitError
from primexp.models import ExperimentRecord

FIELDS = (
    "experiment",
    "k",
    "theta",
    "rho",
    "x",
    "y",
    "P",
    "alpha",
    "a",
    "q",
    "arc",
    "abs_sum",
    "bound_rhs",
    "ratio",
    "runtime_ms",
    "flags",
)
FLOAT_FIELDS = {"P", "abs_sum", "bound_rhs", "ratio"}
INT_FIELDS = {"k", "x", "y", "a", "q", "runtime_ms"}
FORMATS = ("csv", "jsonl")


def format_float(value: float) -> str:
    if math.isnan(value):
        return "NaN"
    if math.isinf(value):
        return "Infinity" if value > 0 else "-Infinity"
    return format(value, ".17g")


def _row(record: ExperimentRecord) -> dict:
    data = record.model_dump(mode="json")
    data["experiment"] = record.experiment.value
    return data


def to_csv(records: Iterable[ExperimentRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(FIELDS)
    for record in records:
        row = _row(record)
        cells = []
        for name in FIELDS:
            value = getattr(record, name) if name in FLOAT_FIELDS else row[name]
            if value is None:
                cells.append("")
            elif name == "flags":
                cells.append(";".join(value))
            elif name in FLOAT_FIELDS:
                cells.append(format_float(value))
            else:
                cells.append(str(value))
        writer.writerow(cells)
    return buffer.getvalue()


def to_jsonl(records: Iterable[ExperimentRecord]) -> str:
    lines = []
    for record in records:
        row = _row(record)
        parts = []
        for name in FIELDS:
            if name in FLOAT_FIELDS and getattr(record, name) is not None:
                encoded = format_float(getattr(record, name))
            else:
                encoded = json.dumps(row[name], ensure_ascii=False)
            parts.append(f"{json.dumps(name)}: {encoded}")
        lines.append("{" + ", ".join(parts) + "}\n")
    return "".join(lines)


def render(records: Iterable[ExperimentRecord], fmt: str = "csv") -> str:
    if fmt == "csv":
        return to_csv(records)
    if fmt == "jsonl":
        return to_jsonl(records)
    raise DomainError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def emit(records: Iterable[ExperimentRecord], fmt: str = "csv", path: Optional[str] = None):
    """Write records to ``path`` (stdout when None)."""
    text = render(records, fmt)
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise EmitError(f"cannot write {path}: {e}", path=path) from e


def _from_csv_row(row: dict) -> dict:
    data = {}
    for name in FIELDS:
        value = row.get(name, "")
        if name == "flags":
            data[name] = [flag for flag in value.split(";") if flag]
        elif value == "" and name not in ("theta", "rho", "alpha", "arc"):
            data[name] = None
        elif name in FLOAT_FIELDS:
            data[name] = float(value)
        elif name in INT_FIELDS:
            data[name] = int(value)
        else:
            data[name] = value
    return data


def parse(text: str, fmt: str = "csv") -> List[ExperimentRecord]:
    try:
        if fmt == "csv":
            rows = [_from_csv_row(row) for row in csv.DictReader(io.StringIO(text))]
        elif fmt == "jsonl":
            rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        else:
            raise DomainError(f"unknown format {fmt!r}; expected one of {FORMATS}")
        return [ExperimentRecord(**row) for row in rows]
    except (ValueError, ValidationError) as e:
        if isinstance(e, DomainError):
            raise
        raise DomainError(f"malformed {fmt} records: {e}") from e


def read_records(path: str, fmt: str = "csv") -> List[ExperimentRecord]:
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            text = f.read()
    except OSError as e:
        raise EmitError(f"cannot read {path}: {e}", path=path) from e
    return parse(text, fmt)
