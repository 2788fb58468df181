"""Frequency traces and their CSV / sidecar JSON file formats."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class TraceFormatError(ValueError):
    pass


@dataclass
class FrequencyTrace:
    t: np.ndarray
    f: np.ndarray
    annotations: dict = field(default_factory=lambda: {"events": [], "ufls_trips": []})
    pm: dict[str, np.ndarray] | None = None     # per-unit Pm, machine base
    saturated: bool = False

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.f = np.asarray(self.f, dtype=float)
        if self.t.ndim != 1 or self.t.shape != self.f.shape or self.t.size == 0:
            raise TraceFormatError("trace needs matching, non-empty time and frequency arrays")
        if not np.all(np.isfinite(self.t)) or not np.all(np.isfinite(self.f)):
            raise TraceFormatError("trace contains non-finite samples")
        if np.any(np.diff(self.t) <= 0):
            raise TraceFormatError("trace times must be strictly increasing")
        if np.any(self.f <= 0):
            raise TraceFormatError("trace frequencies must be positive")

    @property
    def event_times(self) -> list[float]:
        return [e["t_s"] for e in self.annotations.get("events", [])]

    def window(self, t0: float, t1: float) -> "FrequencyTrace":
        keep = (self.t >= t0) & (self.t <= t1)
        return FrequencyTrace(self.t[keep], self.f[keep])


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".events.json")


def write_trace_csv(trace: FrequencyTrace, path) -> list[Path]:
    """Write the trace CSV plus its annotation sidecar; returns both paths."""
    path = Path(path)
    cols = ["time_s", "freq_hz"]
    data = [trace.t, trace.f]
    fmts = ["{:.6f}", "{:.9f}"]
    if trace.pm is not None:
        for uid, series in trace.pm.items():
            cols.append(f"pm_{uid}_pu")
            data.append(series)
            fmts.append("{:.9f}")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in zip(*data):
            fh.write(",".join(fmt.format(x) for fmt, x in zip(fmts, row)) + "\n")
    side = sidecar_path(path)
    annotations = {"events": trace.annotations.get("events", []),
                   "ufls_trips": trace.annotations.get("ufls_trips", [])}
    side.write_text(json.dumps(annotations, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return [path, side]


def read_trace_csv(path) -> FrequencyTrace:
    """Read a trace CSV; picks up the annotation sidecar when one exists."""
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = [h.strip() for h in next(reader)]
            rows = [r for r in reader if r]
    except (OSError, StopIteration, UnicodeDecodeError, csv.Error) as exc:
        raise TraceFormatError(f"{path}: cannot read trace ({exc})") from None
    if header[:2] != ["time_s", "freq_hz"]:
        raise TraceFormatError(f"{path}: header must start with time_s,freq_hz")
    try:
        arr = np.array([[float(x) for x in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise TraceFormatError(f"{path}: non-numeric sample ({exc})") from None
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] != len(header):
        raise TraceFormatError(f"{path}: ragged or empty trace")
    pm = None
    if len(header) > 2:
        pm = {h[3:-3]: arr[:, j] for j, h in enumerate(header[2:], start=2)
              if h.startswith("pm_") and h.endswith("_pu")}
    annotations = {"events": [], "ufls_trips": []}
    side = sidecar_path(path)
    if side.exists():
        try:
            annotations.update(json.loads(side.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise TraceFormatError(f"{side}: bad annotation sidecar ({exc})") from None
    return FrequencyTrace(arr[:, 0], arr[:, 1], annotations=annotations, pm=pm)
