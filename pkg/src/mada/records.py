"""Run records: a fixed-schema CSV of per-step rows plus a JSON summary sidecar."""

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
COLUMNS = ("step", "loss", "lr", "grad_norm", "beta1", "beta2", "beta3", "rho", "c", "gamma",
           "beta1_lion", "beta2_lion", "eff_lr_min", "eff_lr_max")


class RecordError(IOError):
    pass


class SchemaVersionError(RecordError):
    pass


def config_hash(config):
    """Stable digest of a flat config mapping (key order does not matter)."""
    text = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass
class RunRecord:
    columns: dict
    summary: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)  # optional step-aligned series, e.g. x, avg_regret

    @property
    def n_rows(self):
        return len(self.columns["step"])

    def __eq__(self, other):
        if not isinstance(other, RunRecord):
            return NotImplemented
        return (_same_series(self.columns, other.columns)
                and _same_series(self.extras, other.extras)
                and self.summary == other.summary)


def _same_series(a, b):
    if a.keys() != b.keys():
        return False
    return all(np.array_equal(np.asarray(a[k]), np.asarray(b[k])) for k in a)


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _paths(path):
    path = Path(path)
    stem = path.with_suffix("")
    return path, stem.with_suffix(".summary.json"), stem.with_suffix(".series.csv")


def write_record(record, path):
    """Write ``<path>`` (rows), ``<stem>.summary.json`` and, if present, ``<stem>.series.csv``."""
    csv_path, summary_path, series_path = _paths(path)
    try:
        csv_path.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(COLUMNS)
            cols = [record.columns[k] for k in COLUMNS]
            for row in zip(*cols):
                w.writerow([_fmt(v) for v in row])
        summary = {"schema_version": SCHEMA_VERSION, **record.summary}
        summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        if record.extras:
            names = ["step"] + [k for k in record.extras if k != "step"]
            with open(series_path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(names)
                for row in zip(*(record.extras[k] for k in names)):
                    w.writerow([_fmt(v) for v in row])
        elif series_path.exists():
            series_path.unlink()
    except OSError as exc:
        raise RecordError(f"cannot write record at {csv_path}: {exc}") from exc
    return csv_path


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def read_record(path):
    csv_path, summary_path, series_path = _paths(path)
    try:
        header, rows = _read_csv(csv_path)
        summary = json.loads(summary_path.read_text())
    except OSError as exc:
        raise RecordError(f"cannot read record at {csv_path}: {exc}") from exc
    version = summary.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{summary_path}: schema version {version}, expected {SCHEMA_VERSION}")
    if tuple(header) != COLUMNS:
        raise SchemaVersionError(f"{csv_path}: unexpected header {header}")
    columns = _columns_from_rows(header, rows)
    extras = {}
    if series_path.exists():
        extras = _columns_from_rows(*_read_csv(series_path))
    return RunRecord(columns, summary, extras)


def _columns_from_rows(header, rows):
    out = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in rows]
        if name == "step":
            out[name] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            out[name] = np.array([float(v) for v in vals], dtype=np.float64)
    return out
