"""On-disk formats: energy-ledger CSV, map snapshots, and event logs.

Snapshot layout: one JSON header line (utf-8, '\\n'-terminated) with keys
nx, ny, q, t, target, endianness ("little"), followed by the raw map values
as little-endian float64, row-major, node index varying slower than the
component index.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np

from .action import LEDGER_COLUMNS, EnergyLedger, EnergyRecord
from .errors import SnapshotError
from .singular import SingularEvent


def write_ledger_csv(ledger: EnergyLedger, path: str):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(LEDGER_COLUMNS)
        for rec in ledger.records:
            w.writerow([repr(v) for v in rec.row()])


def read_ledger_csv(path: str) -> EnergyLedger:
    ledger = EnergyLedger()
    with open(path, newline="") as f:
        r = csv.reader(f)
        header = next(r)
        if header != LEDGER_COLUMNS:
            raise SnapshotError(f"unexpected ledger columns in {path}: {header}")
        for row in r:
            vals = dict(zip(LEDGER_COLUMNS, (float(v) for v in row)))
            ledger.append(EnergyRecord(**vals))
    return ledger


def write_snapshot(path: str, values: np.ndarray, t: float, target_name: str):
    if values.ndim != 3:
        raise SnapshotError(f"snapshot values must be (nx, ny, q), got {values.shape}")
    nx, ny, q = values.shape
    header = {"nx": nx, "ny": ny, "q": q, "t": float(t),
              "target": target_name, "endianness": "little"}
    with open(path, "wb") as f:
        f.write((json.dumps(header) + "\n").encode("utf-8"))
        f.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_snapshot(path: str):
    """Returns (values, header_dict)."""
    with open(path, "rb") as f:
        line = f.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise SnapshotError(f"bad snapshot header in {path}: {e}") from e
        for key in ("nx", "ny", "q", "t", "endianness"):
            if key not in header:
                raise SnapshotError(f"snapshot header missing {key!r} in {path}")
        if header["endianness"] != "little":
            raise SnapshotError(f"unsupported endianness {header['endianness']!r}")
        nx, ny, q = int(header["nx"]), int(header["ny"]), int(header["q"])
        raw = f.read()
    expected = nx * ny * q * 8
    if len(raw) != expected:
        raise SnapshotError(f"snapshot {path} truncated: expected {expected} "
                            f"payload bytes at offset {len(line)}, got {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8").reshape(nx, ny, q).astype(float)
    return values, header


def write_events_jsonl(events, path: str):
    with open(path, "w") as f:
        for ev in events:
            f.write(json.dumps(ev.to_dict()) + "\n")


def read_events_jsonl(path: str):
    events = []
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            d = json.loads(line)
            events.append(SingularEvent(t=d["t"], ix=d["ix"], iy=d["iy"],
                                        R=d["R"], local_energy=d["local_energy"],
                                        kind=d["kind"]))
    return events


# aliases matching the external-interface naming
export_csv = write_ledger_csv
export_snapshot = write_snapshot


def write_run_outputs(state, out_dir: str, prefix: str = "run"):
    """Ledger, final snapshot, and events for a completed flow state."""
    os.makedirs(out_dir, exist_ok=True)
    write_ledger_csv(state.ledger, os.path.join(out_dir, f"{prefix}_ledger.csv"))
    write_snapshot(os.path.join(out_dir, f"{prefix}_final.snap"),
                   state.u.values, state.t, state.target.name)
    write_events_jsonl(state.events, os.path.join(out_dir, f"{prefix}_events.jsonl"))
