"""Centre-of-inertia frequency simulation with TGOV1 governors and UFLS.

Per unit on the system base, with ``dw = (f - f0) / f0``::

    2 H_sys d(dw)/dt = dPm_total - dP_event + dP_shed - d_load (P_load / S_base) dw

Events and relay actions take effect on step boundaries; a trip time that is
not a multiple of ``dt`` is moved to the next grid point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .metrics import FrequencyMetrics, MetricsConfig, compare_metrics, compute_metrics
from .model import SystemCase, TripEvent
from .trace import FrequencyTrace

F_COLLAPSE_HZ = 55.0


class SimulationError(RuntimeError):
    pass


class FrequencyCollapseError(SimulationError):
    def __init__(self, t: float, f: float, trace: FrequencyTrace):
        self.t, self.f, self.trace = t, f, trace
        super().__init__(f"frequency collapse: {f:.3f} Hz at t = {t:.3f} s "
                         f"(limit {F_COLLAPSE_HZ} Hz)")


class IntegrationError(SimulationError):
    def __init__(self, step: int, t: float):
        self.step, self.t = step, t
        super().__init__(f"non-finite state at step {step} (t = {t:.4f} s)")


@dataclass(frozen=True)
class UflsStage:
    threshold_hz: float
    shed_fraction: float
    delay_s: float = 0.0


@dataclass(frozen=True)
class UflsTable:
    stages: tuple[UflsStage, ...]

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        thr = [s.threshold_hz for s in self.stages]
        if any(b >= a for a, b in zip(thr, thr[1:])):
            raise ValueError("UFLS thresholds must be strictly decreasing")
        for s in self.stages:
            if not 0 < s.shed_fraction <= 1:
                raise ValueError("UFLS shed fraction must lie in (0, 1]")
            if not s.delay_s >= 0:
                raise ValueError("UFLS delay must be non-negative")

    def arrays(self):
        return (np.array([s.threshold_hz for s in self.stages], dtype=float),
                np.array([s.shed_fraction for s in self.stages], dtype=float),
                np.array([s.delay_s for s in self.stages], dtype=float))


NO_UFLS = UflsTable(())


@dataclass(frozen=True)
class SimConfig:
    dt_s: float = 0.01
    t_end_s: float = 60.0
    ufls: UflsTable | None = None
    record_per_unit: bool = False

    def __post_init__(self):
        if not 0 < self.dt_s <= 0.1:
            raise ValueError("dt_s must lie in (0, 0.1]")
        if not self.t_end_s > 0:
            raise ValueError("t_end_s must be positive")

    def to_dict(self) -> dict:
        d = {"dt_s": self.dt_s, "t_end_s": self.t_end_s,
             "record_per_unit": self.record_per_unit, "ufls": None}
        if self.ufls is not None:
            d["ufls"] = [{"threshold_hz": s.threshold_hz, "shed_fraction": s.shed_fraction,
                          "delay_s": s.delay_s} for s in self.ufls.stages]
        return d


def _grid_index(t: float, dt: float) -> int:
    return max(0, math.ceil(t / dt - 1e-9))


def _unit_arrays(case: SystemCase):
    n = len(case.units)
    sb = case.s_base
    cols = {k: np.empty(n) for k in ("w", "h", "r", "t1", "a", "t3", "vmin", "vmax", "d_t", "p0")}
    active = np.zeros(n, dtype=np.bool_)
    for i, u in enumerate(case.units):
        cols["w"][i] = u.s_rated / sb
        cols["h"][i] = u.h
        cols["p0"][i] = u.loading
        g = u.governor
        if g is not None and u.responsive:
            active[i] = True
            cols["r"][i], cols["t1"][i], cols["t3"][i] = g.r, g.t1_s, g.t3_s
            cols["a"][i] = g.t2_s / g.t3_s
            cols["vmin"][i], cols["vmax"][i], cols["d_t"][i] = g.v_min, g.v_max, g.d_t
        else:
            cols["r"][i] = cols["t1"][i] = cols["t3"][i] = 1.0
            cols["a"][i] = cols["d_t"][i] = 0.0
            cols["vmin"][i], cols["vmax"][i] = -np.inf, np.inf
    return cols, active


def simulate(case: SystemCase, event: TripEvent, cfg: SimConfig = SimConfig()) -> FrequencyTrace:
    """Integrate the system response to ``event``; returns the frequency trace.

    An event at or beyond the horizon never fires and the trace stays flat.
    """
    mw = event.resolve(case)
    trip_idx = -1
    if event.unit_id is not None:
        trip_idx = [u.id for u in case.units].index(event.unit_id)

    dt = cfg.dt_s
    n_steps = _grid_index(cfg.t_end_s, dt)
    k_event = _grid_index(event.t_event, dt)
    cols, active = _unit_arrays(case)
    thr, frac, delay = (cfg.ufls or NO_UFLS).arrays()

    freq, pm, status, last, saturated, trip_time, shed_pu = _kernel.integrate(
        dt, n_steps, case.f0, k_event, mw / case.s_base, trip_idx,
        cols["w"], cols["h"], active, cols["r"], cols["t1"], cols["a"], cols["t3"],
        cols["vmin"], cols["vmax"], cols["d_t"], cols["p0"],
        case.p_load / case.s_base, case.d_load, thr, frac, delay,
        cfg.record_per_unit, F_COLLAPSE_HZ)

    t = np.arange(n_steps + 1) * dt
    events = []
    if k_event < n_steps:
        ev = {"t_s": k_event * dt, "magnitude_mw": mw}
        if event.unit_id is not None:
            ev["unit_id"] = event.unit_id
        events.append(ev)
    trips = []
    for i in np.flatnonzero(~np.isnan(trip_time)):
        trips.append({"stage": int(i) + 1, "t_s": float(trip_time[i]),
                      "threshold_hz": float(thr[i]),
                      "shed_mw": float(shed_pu[i] * case.s_base)})
    annotations = {"events": events, "ufls_trips": trips}

    if status == _kernel.NOT_FINITE:
        raise IntegrationError(last, last * dt)
    stop = last + 1
    per_unit = None
    if cfg.record_per_unit:
        per_unit = {u.id: pm[:stop, i].copy() for i, u in enumerate(case.units)}
    trace = FrequencyTrace(t[:stop], freq[:stop], annotations=annotations,
                           pm=per_unit, saturated=bool(saturated))
    if status == _kernel.COLLAPSE:
        raise FrequencyCollapseError(float(t[last]), float(freq[last]), trace)
    return trace


def apply_ufls(trace: FrequencyTrace, table: UflsTable,
               p_load_mw: float | None = None) -> list[dict]:
    """Load-shed actions the relay table would take on ``trace``.

    Stages trip once, after the frequency stays below their threshold for
    the stage delay.  With ``p_load_mw`` the shed MW is reported as well,
    each stage taking its fraction of the load left by earlier stages.
    """
    thr, frac, delay = table.arrays()
    trip_time = _kernel.ufls_scan(trace.t, trace.f, thr, delay)
    fired = [i for i in range(len(thr)) if not np.isnan(trip_time[i])]
    fired.sort(key=lambda i: (trip_time[i], i))
    load = p_load_mw
    actions = []
    for i in fired:
        action = {"stage": i + 1, "t_s": float(trip_time[i]),
                  "threshold_hz": float(thr[i]), "shed_fraction": float(frac[i])}
        if load is not None:
            action["shed_mw"] = frac[i] * load
            load -= action["shed_mw"]
        actions.append(action)
    return actions


@dataclass
class ConvergenceReport:
    dt_s: float
    coarse: FrequencyMetrics
    fine: FrequencyMetrics
    saturated: bool
    deltas: dict = field(default_factory=dict)

    @property
    def nadir_delta_hz(self) -> float:
        return self.deltas["nadir_hz"]

    def to_dict(self) -> dict:
        return {"dt_s": self.dt_s, "dt_half_s": self.dt_s / 2,
                "nadir_delta_hz": self.nadir_delta_hz, "saturated": self.saturated,
                "deltas": self.deltas, "coarse": self.coarse.to_dict(),
                "fine": self.fine.to_dict()}


def verify_convergence(case: SystemCase, event: TripEvent, cfg: SimConfig = SimConfig(),
                       metrics_cfg: MetricsConfig = MetricsConfig()) -> ConvergenceReport:
    """Metric changes when the step size is halved.

    No threshold is applied; ``saturated`` marks runs where limits make the
    dynamics non-smooth and the order-4 error estimate does not hold.
    """
    coarse = simulate(case, event, cfg)
    fine_cfg = SimConfig(dt_s=cfg.dt_s / 2, t_end_s=cfg.t_end_s, ufls=cfg.ufls)
    fine = simulate(case, event, fine_cfg)
    t_ev = coarse.event_times[0]
    m_coarse = compute_metrics(coarse, t_ev, metrics_cfg)
    m_fine = compute_metrics(fine, fine.event_times[0], metrics_cfg)
    saturated = coarse.saturated or fine.saturated or bool(coarse.annotations["ufls_trips"])
    return ConvergenceReport(cfg.dt_s, m_coarse, m_fine, saturated,
                             compare_metrics(m_coarse, m_fine).to_dict())
