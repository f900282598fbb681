"""Result writers: ``results.csv``, ``summary.json`` and per-experiment tables.

``results.csv`` columns, in order:

============== ===============================================================
experiment     experiment id from the config
kind           experiment kind
quantity       what was measured
parameters     compact JSON object with sorted keys
theoretical    exact or limiting value (rationals written as ``p/q``)
empirical      measured value
stderr         standard error, or the allowed bound for truncated sums
z_score        ``(empirical - theoretical) / stderr`` where meaningful
replicas       Monte Carlo replicas per side
discard_fraction  fraction of replicas dropped for boundary contact
verdict        ``pass`` or ``fail``
============== ===============================================================

Empty cells mean "not applicable".  No field depends on wall-clock time,
so the same config and seed reproduce the files byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Iterable, List

from .experiments import ExperimentResult, Record

COLUMNS = ("experiment", "kind", "quantity", "parameters", "theoretical", "empirical", "stderr", "z_score",
           "replicas", "discard_fraction", "verdict")


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    if hasattr(v, "item"):
        return v.item()
    raise TypeError(f"not serializable: {type(v).__name__}")


def compact_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=_json_default)


def record_row(r: Record) -> List[str]:
    return [r.experiment, r.kind, r.quantity, compact_json(r.parameters), format_value(r.theoretical),
            format_value(r.empirical), format_value(r.stderr), format_value(r.z_score),
            format_value(r.replicas), format_value(r.discard_fraction), r.verdict]


def results_csv(records: Iterable[Record]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow(record_row(r))
    return buf.getvalue()


def summary(results: List[ExperimentResult], seed: int, mode: str) -> dict:
    return {
        "seed": seed,
        "mode": mode,
        "passed": all(r.passed for r in results),
        "experiments": [
            {"id": r.id, "kind": r.kind, "passed": r.passed, "records": len(r.records),
             "failed": sum(not rec.passed for rec in r.records), "tables": sorted(r.tables)}
            for r in results
        ],
    }


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_outputs(out_dir: Path, results: List[ExperimentResult], seed: int, mode: str) -> List[Path]:
    """Write every output file; raises ``OSError`` if the directory is unwritable."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    path = out_dir / "results.csv"
    path.write_text(results_csv(rec for r in results for rec in r.records))
    written.append(path)
    path = out_dir / "summary.json"
    path.write_text(json.dumps(summary(results, seed, mode), indent=2, sort_keys=True,
                               default=_json_default) + "\n")
    written.append(path)
    for r in results:
        for name, (header, rows) in sorted(r.tables.items()):
            path = out_dir / f"{name}.csv"
            path.write_text(table_csv(header, rows))
            written.append(path)
    return written
