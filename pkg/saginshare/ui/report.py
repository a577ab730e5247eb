"""Result files: CSV or JSON-lines records and plot-ready summaries."""

import csv
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence, Union

from ..services.experiment_service import RESULT_COLUMNS, ExperimentRecord, mean_by_point

logger = logging.getLogger(__name__)

FORMATS = ("csv", "jsonl")
INTEGER_COLUMNS = ("seed", "iterations")
TEXT_COLUMNS = ("spec_hash", "sweep_var", "algorithm")


def format_value(value) -> str:
    """Floats with 12 significant digits, everything else as text."""
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _json_value(value):
    # JSON has no NaN; failed records carry null
    if isinstance(value, float):
        return None if math.isnan(value) else float(format_value(value))
    return value


def emit_results(records: Sequence[ExperimentRecord], path: Union[str, Path],
                 fmt: str = "csv") -> Path:
    """
    Write records in the fixed column order.

    Args:
        records: Nonempty list of records
        path: Output file
        fmt: "csv" or "jsonl"

    Returns:
        The written path

    Raises:
        ValueError: No records or an unknown format
    """
    if not records:
        raise ValueError("no records to write")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format '{fmt}', expected one of {FORMATS}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    if fmt == "csv":
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(RESULT_COLUMNS)
            for record in records:
                writer.writerow([format_value(v) for v in record.row().values()])
    else:
        with open(path, "w") as f:
            for record in records:
                row = {key: _json_value(value) for key, value in record.row().items()}
                if record.error:
                    row["error"] = record.error
                if record.trace is not None:
                    row["trace"] = record.trace
                f.write(json.dumps(row) + "\n")

    failed = sum(1 for r in records if not r.ok)
    if failed:
        logger.warning("%d of %d records failed; see the log or the jsonl error field",
                       failed, len(records))
    logger.info("Wrote %d records to %s", len(records), path)
    return path


def _parse(column: str, raw) -> Union[str, int, float]:
    if column in TEXT_COLUMNS:
        return str(raw)
    if column in INTEGER_COLUMNS:
        return int(raw)
    return math.nan if raw is None or raw == "nan" else float(raw)


def read_results(path: Union[str, Path]) -> List[ExperimentRecord]:
    """Parse a file written by emit_results."""
    path = Path(path)
    records = []
    if path.suffix == ".jsonl":
        with open(path) as f:
            for line in f:
                if line.strip():
                    data = json.loads(line)
                    values = {c: _parse(c, data.get(c)) for c in RESULT_COLUMNS}
                    records.append(ExperimentRecord(**values, error=data.get("error", ""),
                                                    trace=data.get("trace")))
    else:
        with open(path, newline="") as f:
            for row in csv.DictReader(f):
                records.append(ExperimentRecord(**{c: _parse(c, row[c]) for c in RESULT_COLUMNS}))
    return records


def summarize_records(records: Sequence[ExperimentRecord]) -> List[Dict]:
    """Mean WSR and revenues per (sweep value, algorithm), sorted for plotting."""
    columns = ("wsr", "u_g", "u_s", "u_g0", "u_s0")
    means = {column: mean_by_point(records, column) for column in columns}
    counts: Dict = {}
    for record in records:
        if record.ok:
            value = None if math.isnan(record.sweep_value) else record.sweep_value
            counts[(value, record.algorithm)] = counts.get((value, record.algorithm), 0) + 1

    rows = []
    for key in sorted(means["wsr"], key=lambda k: (math.inf if k[0] is None else k[0], k[1])):
        row = {"sweep_value": key[0], "algorithm": key[1], "seeds": counts[key]}
        row.update({column: means[column][key] for column in columns})
        rows.append(row)
    return rows


def print_summary(rows: Sequence[Dict]) -> None:
    """Plain table of a summary on stdout."""
    print(f"{'sweep':>10} {'algorithm':<22} {'seeds':>5} {'wsr':>12} {'u_g':>10} {'u_s':>10}")
    for row in rows:
        sweep = "-" if row["sweep_value"] is None else format_value(row["sweep_value"])
        print(f"{sweep:>10} {row['algorithm']:<22} {row['seeds']:>5} {row['wsr']:>12.6g} "
              f"{row['u_g']:>10.6g} {row['u_s']:>10.6g}")
