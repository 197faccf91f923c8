"""CSV dataset ingestion, run manifests, and plain-text report emission.

CSV dialect: comma-separated, header row required, UTF-8, ``.`` decimal,
empty cell means missing.  Value-map recodes let categorical survey codes
be mapped onto {0, 1}; any value outside a column's map is treated as
missing and counted.  Standardization statistics are computed on the
rows that survive complete-case filtering.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .model import Dataset

VERSION = "0.1.0"


@dataclass
class ColumnSpec:
    """One CSV column: optional value-map recode applied before anything
    else, and an optional post-filter standardization."""
    name: str
    standardize: bool = False
    recode: dict[str, float] | None = None


@dataclass
class Bindings:
    outcome: ColumnSpec
    covariates: list[ColumnSpec]
    complete_case: bool = True
    add_intercept: bool = True


class LoadError(ValueError):
    pass


def _parse_cell(raw: str, spec: ColumnSpec, row: int) -> float:
    """Missing is returned as NaN.  Unmapped values under a recode count
    as missing; non-numeric cells without a recode are hard errors."""
    text = raw.strip()
    if text == "":
        return np.nan
    if spec.recode is not None:
        return spec.recode.get(text, np.nan)
    try:
        return float(text)
    except ValueError:
        raise LoadError(
            f"row {row}, column {spec.name!r}: non-numeric value {text!r}")


def load_csv(path: str, bindings: Bindings, info: dict | None = None) -> Dataset:
    """Read a dataset from CSV per the column bindings.

    ``info``, if given, is filled with loading counts (rows read, rows
    dropped, per-column unmapped counts).
    """
    specs = [bindings.outcome] + list(bindings.covariates)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise LoadError(f"{path}: empty file, header required")
        header = [h.strip() for h in header]
        missing = [s.name for s in specs if s.name not in header]
        if missing:
            raise LoadError(f"{path}: missing columns {missing}")
        idx = {s.name: header.index(s.name) for s in specs}
        rows = []
        for r, record in enumerate(reader, start=2):
            if not record or all(c.strip() == "" for c in record):
                continue
            if len(record) < len(header):
                raise LoadError(f"row {r}: expected {len(header)} cells, "
                                f"got {len(record)}")
            rows.append([_parse_cell(record[idx[s.name]], s, r) for s in specs])
    if not rows:
        raise LoadError(f"{path}: no data rows")
    raw = np.array(rows, dtype=float)

    unmapped = {s.name: int(np.isnan(raw[:, j]).sum())
                for j, s in enumerate(specs) if s.recode is not None}
    keep = ~np.any(np.isnan(raw), axis=1)
    if bindings.complete_case:
        data = raw[keep]
    else:
        if not np.all(keep):
            bad = int(np.argmin(keep)) + 2
            raise LoadError(f"row {bad}: missing value with complete-case "
                            "filtering disabled")
        data = raw
    if data.shape[0] == 0:
        raise LoadError(f"{path}: no rows remain after complete-case filtering")

    for j, s in enumerate(specs):
        if not s.standardize:
            continue
        col = data[:, j]
        sd = col.std(ddof=0)
        if sd == 0.0:
            raise LoadError(f"column {s.name!r}: zero variance, cannot standardize")
        data[:, j] = (col - col.mean()) / sd

    y = data[:, 0]
    x = data[:, 1:]
    names = [s.name for s in bindings.covariates]
    if bindings.add_intercept:
        x = np.column_stack([np.ones(x.shape[0]), x])
        names = ["intercept"] + names
    if info is not None:
        info.update(rows_read=raw.shape[0],
                    rows_dropped=int(raw.shape[0] - data.shape[0]),
                    unmapped_counts=unmapped)
    return Dataset(y=y, X=x, column_names=names,
                   require_intercept=bindings.add_intercept)


def save_dataset_csv(d: Dataset, path: str) -> None:
    """Emit y plus covariate columns; reloading with plain numeric
    bindings reproduces the arrays exactly (full-precision repr)."""
    names = d.column_names or [f"x{j}" for j in range(d.d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["y"] + list(names))
        for i in range(d.n):
            writer.writerow([repr(float(d.y[i]))]
                            + [repr(float(v)) for v in d.X[i]])


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


@dataclass
class RunManifest:
    """Record of one CLI run, written at start and finalized at the end
    so interrupted runs are distinguishable from complete ones."""
    command: str
    config: dict
    seed: int | None
    out_dir: str
    version: str = VERSION
    input_path: str | None = None
    input_sha256: str | None = None
    started: str = field(default_factory=_utc_now)
    finished: str | None = None
    status: str = "running"
    produced: list[str] = field(default_factory=list)

    @property
    def path(self) -> str:
        return os.path.join(self.out_dir, "manifest.json")

    def write(self) -> None:
        os.makedirs(self.out_dir, exist_ok=True)
        body = {
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "input_path": self.input_path,
            "input_sha256": self.input_sha256,
            "started": self.started,
            "finished": self.finished,
            "status": self.status,
            "produced": self.produced,
        }
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump(body, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def add(self, *paths: str) -> None:
        for p in paths:
            rel = os.path.relpath(p, self.out_dir)
            if rel not in self.produced:
                self.produced.append(rel)

    def finalize(self, status: str = "complete") -> None:
        self.finished = _utc_now()
        self.status = status
        self.write()


def write_kv_report(path: str, items: dict) -> None:
    """Flat ``key = value`` text report; floats at full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in items.items():
            if isinstance(value, float):
                value = repr(value)
            elif isinstance(value, np.ndarray):
                value = ",".join(repr(float(v)) for v in value.ravel())
            fh.write(f"{key} = {value}\n")


def read_kv(path: str) -> dict[str, str]:
    """Parse a flat key = value file; '#' starts a comment, blanks skipped."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise LoadError(f"{path}:{lineno}: expected 'key = value'")
            key, value = text.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def parse_vector(text: str) -> np.ndarray:
    return np.array([float(t) for t in text.split(",") if t.strip() != ""])
