"""Frequency-response metrics: ROCOF, nadir, settling time and settling frequency."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .trace import FrequencyTrace

_EPS = 1e-9

# Report rows in the order measurement/simulation comparisons are usually tabulated.
_ROWS = (
    ("nadir_hz", "Frequency nadir (Hz)", 3),
    ("rocof_mhz_per_s", "Rate of change of frequency (mHz/s)", 1),
    ("settling_time_s", "Frequency settling time (s)", 1),
    ("settling_freq_hz", "Settling frequency (Hz)", 3),
)


class TraceTooShortError(ValueError):
    pass


class EventNotFoundError(LookupError):
    pass


@dataclass(frozen=True)
class MetricsConfig:
    rocof_window: tuple[float, float] = (0.0, 0.5)   # offsets after the event, s
    settle_band_mhz: float = 5.0
    settle_tail_s: float = 5.0

    def __post_init__(self):
        start, end = self.rocof_window
        if not end > start >= 0:
            raise ValueError("rocof window needs end > start >= 0")
        if not self.settle_band_mhz > 0 or not self.settle_tail_s > 0:
            raise ValueError("settling band and tail must be positive")

    def to_dict(self) -> dict:
        return {"rocof_window_s": list(self.rocof_window),
                "settle_band_mhz": self.settle_band_mhz,
                "settle_tail_s": self.settle_tail_s}


@dataclass(frozen=True)
class FrequencyMetrics:
    rocof_mhz_per_s: float
    nadir_hz: float
    settling_time_s: float
    settling_freq_hz: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "FrequencyMetrics":
        return cls(**{f.name: float(d[f.name]) for f in fields(cls)})


@dataclass(frozen=True)
class MetricsDelta:
    """Absolute metric differences in Hz, mHz/s, s and Hz."""
    rocof_mhz_per_s: float
    nadir_hz: float
    settling_time_s: float
    settling_freq_hz: float

    def to_dict(self) -> dict:
        return asdict(self)

    def rounded(self) -> "MetricsDelta":
        """Round to the precision differences are conventionally reported at."""
        return MetricsDelta(**{name: round(getattr(self, name), nd) for name, _, nd in _ROWS})


def _ls_slope(t: np.ndarray, f: np.ndarray) -> float:
    tc = t - t.mean()
    return float(np.dot(tc, f - f.mean()) / np.dot(tc, tc))


def _time_mean(t: np.ndarray, f: np.ndarray) -> float:
    if t.size == 1:
        return float(f[0])
    return float(np.trapezoid(f, t) / (t[-1] - t[0]))


def compute_metrics(trace: FrequencyTrace, t_event: float,
                    cfg: MetricsConfig = MetricsConfig()) -> FrequencyMetrics:
    t, f = trace.t, trace.f
    post = t >= t_event - _EPS
    if not post.any():
        raise TraceTooShortError("no samples at or after the event time")
    start, end = cfg.rocof_window
    if t[-1] - t_event < max(end, cfg.settle_tail_s) - _EPS:
        raise TraceTooShortError(
            f"trace ends {t[-1] - t_event:.3f} s after the event; needs at least "
            f"{max(end, cfg.settle_tail_s):.3f} s")

    rel = t - t_event
    win = (rel >= start - _EPS) & (rel <= end + _EPS)
    if win.sum() < 2:
        raise TraceTooShortError("fewer than two samples in the ROCOF window")
    rocof = abs(_ls_slope(t[win], f[win])) * 1000.0

    idx = np.flatnonzero(post)
    i_nadir = idx[np.argmin(f[idx])]
    nadir = float(f[i_nadir])

    tail = t >= t[-1] - cfg.settle_tail_s - _EPS
    settle_f = _time_mean(t[tail], f[tail])

    band = cfg.settle_band_mhz / 1000.0
    after = np.arange(i_nadir, t.size)
    outside = after[np.abs(f[after] - settle_f) > band]
    if outside.size == 0:
        i_settle = i_nadir
    else:
        i_settle = min(outside[-1] + 1, t.size - 1)
    return FrequencyMetrics(
        rocof_mhz_per_s=rocof,
        nadir_hz=nadir,
        settling_time_s=float(t[i_settle] - t_event),
        settling_freq_hz=settle_f,
    )


def compare_metrics(a: FrequencyMetrics, b: FrequencyMetrics) -> MetricsDelta:
    return MetricsDelta(**{name: abs(getattr(a, name) - getattr(b, name))
                           for name, _, _ in _ROWS})


def average_deltas(deltas) -> MetricsDelta:
    deltas = list(deltas)
    if not deltas:
        raise ValueError("nothing to average")
    return MetricsDelta(**{name: float(np.mean([getattr(d, name) for d in deltas]))
                           for name, _, _ in _ROWS})


def sliding_slopes(t: np.ndarray, f: np.ndarray, window_s: float = 0.5):
    """Least-squares slope (Hz/s) of every window ``[t_i, t_i + window_s]``.

    Returns ``(starts, slopes)`` for windows that fit inside the trace.
    """
    t = np.asarray(t, dtype=float)
    f = np.asarray(f, dtype=float)
    ends = np.searchsorted(t, t + window_s + _EPS, side="right")
    valid = t + window_s <= t[-1] + _EPS
    tc = t - t[0]
    fc = f - f[0]
    zero = np.zeros(1)
    s1 = np.concatenate([zero, np.cumsum(tc)])
    sf = np.concatenate([zero, np.cumsum(fc)])
    stt = np.concatenate([zero, np.cumsum(tc * tc)])
    stf = np.concatenate([zero, np.cumsum(tc * fc)])
    starts = np.flatnonzero(valid)
    j = ends[starts]
    n = (j - starts).astype(float)
    sx = s1[j] - s1[starts]
    sy = sf[j] - sf[starts]
    sxx = stt[j] - stt[starts]
    sxy = stf[j] - stf[starts]
    den = n * sxx - sx * sx
    with np.errstate(invalid="ignore", divide="ignore"):
        slopes = np.where(n >= 2, (n * sxy - sx * sy) / den, 0.0)
    return starts, slopes


def detect_event_time(trace: FrequencyTrace, rocof_trigger_mhz_per_s: float = 10.0,
                      window_s: float = 0.5) -> float:
    """Onset time of the first disturbance in an unannotated trace.

    The first 0.5 s window whose slope exceeds the trigger locates the event
    coarsely; the onset is then the first sample inside that window whose
    forward difference exceeds the trigger with the same sign.
    """
    t, f = trace.t, trace.f
    if t.size < 2 or np.max(np.diff(t)) > 0.1 + _EPS:
        raise ValueError("event detection needs samples at most 0.1 s apart")
    trigger = rocof_trigger_mhz_per_s / 1000.0
    starts, slopes = sliding_slopes(t, f, window_s)
    hits = np.flatnonzero(np.abs(slopes) > trigger)
    if hits.size == 0:
        raise EventNotFoundError("no event detected")
    i = starts[hits[0]]
    sign = np.sign(slopes[hits[0]])
    stop = np.searchsorted(t, t[i] + window_s + _EPS, side="right") - 1
    for j in range(i, stop):
        step = (f[j + 1] - f[j]) / (t[j + 1] - t[j])
        if sign * step > trigger:
            return float(t[j])
    return float(t[i])


def format_comparison(measured: FrequencyMetrics, simulated: FrequencyMetrics,
                      labels=("Measurement", "Simulation")) -> str:
    delta = compare_metrics(measured, simulated)
    head = f"{'Metric':<38}{labels[0]:>14}{labels[1]:>14}{'Difference':>14}"
    lines = [head, "-" * len(head)]
    for name, label, nd in _ROWS:
        lines.append(f"{label:<38}{getattr(measured, name):>14.{nd}f}"
                     f"{getattr(simulated, name):>14.{nd}f}{getattr(delta, name):>14.{nd}f}")
    return "\n".join(lines)


def format_average_block(deltas) -> str:
    """Per-case absolute differences followed by their average row."""
    deltas = list(deltas)
    head = f"{'Case':<10}" + "".join(f"{label:>38}" for _, label, _ in _ROWS)
    lines = [head, "-" * len(head)]
    rows = [(str(i + 1), d) for i, d in enumerate(deltas)]
    rows.append(("Average", average_deltas(deltas)))
    for tag, d in rows:
        lines.append(f"{tag:<10}" + "".join(
            f"{getattr(d, name):>38.{nd}f}" for name, _, nd in _ROWS))
    return "\n".join(lines)
