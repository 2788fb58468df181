"""Three-step governor and inertia calibration against measured event metrics.

The steps run in a fixed order, each a scalar search:

1. responsive governor capacity ``kappa``, matched on settling frequency;
2. reheater time multiplier ``t3_mult`` (t2 co-scaled), matched on nadir and
   settling time;
3. uniform inertia multiplier ``h_mult``, matched on ROCOF.

A step's result is only kept when it lowers the total normalized metric
residual.  Governor time constant t1 is never adjusted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .metrics import (FrequencyMetrics, MetricsConfig, MetricsDelta, compare_metrics,
                      compute_metrics)
from .model import SystemCase, TripEvent
from .search import golden_section, golden_section_int
from .simulator import SimConfig, SimulationError, simulate
from .trace import FrequencyTrace, read_trace_csv

# Normalizing scales for the total residual: typical acceptable differences
# in Hz, mHz/s, s and Hz.
DEFAULT_RESIDUAL_SCALE = MetricsDelta(rocof_mhz_per_s=4.2, nadir_hz=0.005,
                                      settling_time_s=1.4, settling_freq_hz=0.006)


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class CalibrationTargets:
    metrics: FrequencyMetrics
    event: TripEvent
    trace: FrequencyTrace | None = None

    def __post_init__(self):
        if self.metrics.nadir_hz > self.metrics.settling_freq_hz:
            raise ValueError("target nadir lies above the target settling frequency")


@dataclass(frozen=True)
class CalibrationConfig:
    t3_bounds: tuple[float, float] = (0.25, 4.0)
    h_bounds: tuple[float, float] = (0.5, 2.0)
    mult_tol: float = 1e-3
    settle_freq_tol_hz: float = 1e-4
    step2_tol: float = 1e-4          # weighted nadir / settling-time objective
    rocof_tol_mhz: float = 1e-3
    nadir_weight: float = 10.0       # per Hz
    settle_time_weight: float = 0.01 # per s
    outer_passes: int = 2
    horizon_s: float = 60.0          # simulated time after the event
    dt_s: float = 0.01
    refine_window_s: float = 30.0
    refine_span: float = 0.25
    refine_cycles: int = 2
    residual_scale: MetricsDelta = DEFAULT_RESIDUAL_SCALE
    metrics: MetricsConfig = MetricsConfig()

    def to_dict(self) -> dict:
        return {
            "t3_bounds": list(self.t3_bounds), "h_bounds": list(self.h_bounds),
            "mult_tol": self.mult_tol, "settle_freq_tol_hz": self.settle_freq_tol_hz,
            "step2_tol": self.step2_tol, "rocof_tol_mhz": self.rocof_tol_mhz,
            "nadir_weight": self.nadir_weight,
            "settle_time_weight": self.settle_time_weight,
            "outer_passes": self.outer_passes, "horizon_s": self.horizon_s,
            "dt_s": self.dt_s, "refine_window_s": self.refine_window_s,
            "refine_span": self.refine_span, "refine_cycles": self.refine_cycles,
            "residual_scale": self.residual_scale.to_dict(),
            "metrics": self.metrics.to_dict(),
            "inertia_scaling": "uniform",
        }


@dataclass(frozen=True)
class StepResult:
    value: float
    objective: float
    iterations: int
    converged: bool


@dataclass
class CalibrationResult:
    kappa: float
    t3_mult: float
    h_mult: float
    n_responsive: int
    residuals: MetricsDelta
    total_residual: float
    metrics: FrequencyMetrics
    iterations: dict
    converged: dict
    history: list = field(default_factory=list)
    trace_rmse_hz: float | None = None

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa, "t3_mult": self.t3_mult, "h_mult": self.h_mult,
            "n_responsive": self.n_responsive,
            "residuals": self.residuals.to_dict(),
            "total_residual": self.total_residual,
            "metrics": self.metrics.to_dict(),
            "iterations": self.iterations, "converged": self.converged,
            "history": self.history, "trace_rmse_hz": self.trace_rmse_hz,
        }


def responsive_pool(case: SystemCase) -> list[int]:
    """Indices of governed responsive units, largest first (ties by id)."""
    pool = [i for i, u in enumerate(case.units) if u.governed and u.responsive]
    return sorted(pool, key=lambda i: (-case.units[i].s_rated, case.units[i].id))


def kappa_levels(case: SystemCase) -> np.ndarray:
    """Achievable responsive-capacity fractions, one per retained unit count."""
    pool = responsive_pool(case)
    sizes = np.array([case.units[i].s_rated for i in pool])
    levels = np.cumsum(sizes) / sizes.sum()
    if levels.size:
        levels[-1] = 1.0    # the full pool, free of cumsum rounding
    return levels


def kappa_count(case: SystemCase, kappa: float) -> int:
    """Smallest number of pool units whose capacity reaches ``kappa``."""
    levels = kappa_levels(case)
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    return int(np.searchsorted(levels, kappa - 1e-12)) + 1


def apply_calibration(case: SystemCase, kappa: float = 1.0, t3_mult: float = 1.0,
                      h_mult: float = 1.0) -> SystemCase:
    """Case with governor capacity reduced to ``kappa`` and t3/t2/h scaled."""
    return _apply(case, kappa_count(case, kappa), t3_mult, h_mult)


def _apply(case: SystemCase, k: int, t3_mult: float, h_mult: float) -> SystemCase:
    keep = set(responsive_pool(case)[:k])
    pool = set(responsive_pool(case))
    units = []
    for i, u in enumerate(case.units):
        gov = u.governor
        if gov is not None and t3_mult != 1.0:
            gov = replace(gov, t2_s=gov.t2_s * t3_mult, t3_s=gov.t3_s * t3_mult)
        responsive = (i in keep) if i in pool else u.responsive
        units.append(replace(u, h=u.h * h_mult, governor=gov, responsive=responsive))
    return replace(case, units=tuple(units))


def _pre_event_level(trace: FrequencyTrace, t_event: float) -> float:
    pre = trace.t < t_event
    return float(trace.f[pre].mean()) if pre.any() else float(trace.f[0])


class _Problem:
    """Simulation-backed objective evaluations with memoization."""

    def __init__(self, case: SystemCase, targets: CalibrationTargets, cfg: CalibrationConfig,
                 need_pool: bool = True):
        if need_pool and not responsive_pool(case):
            raise CalibrationError("no governed units to calibrate")
        self.case = case
        self.targets = targets
        self.cfg = cfg
        self.n = len(responsive_pool(case))
        self.levels = kappa_levels(case)
        self.sim_cfg = SimConfig(dt_s=cfg.dt_s, t_end_s=targets.event.t_event + cfg.horizon_s)
        self._cache = {}

    def run(self, k: int, t3m: float, hm: float):
        key = (k, float(t3m), float(hm))
        if key not in self._cache:
            case = _apply(self.case, k, t3m, hm)
            try:
                trace = simulate(case, self.targets.event, self.sim_cfg)
                m = compute_metrics(trace, trace.event_times[0], self.cfg.metrics)
            except SimulationError:
                trace, m = None, None
            self._cache[key] = (trace, m)
        return self._cache[key]

    def metrics(self, k, t3m, hm) -> FrequencyMetrics | None:
        return self.run(k, t3m, hm)[1]

    def delta(self, k, t3m, hm) -> MetricsDelta | None:
        m = self.metrics(k, t3m, hm)
        return None if m is None else compare_metrics(m, self.targets.metrics)

    def total(self, k, t3m, hm) -> float:
        d = self.delta(k, t3m, hm)
        if d is None:
            return np.inf
        s = self.cfg.residual_scale
        return (d.rocof_mhz_per_s / s.rocof_mhz_per_s + d.nadir_hz / s.nadir_hz
                + d.settling_time_s / s.settling_time_s
                + d.settling_freq_hz / s.settling_freq_hz)

    # step objectives
    def f_settle(self, k, t3m, hm) -> float:
        d = self.delta(k, t3m, hm)
        return np.inf if d is None else d.settling_freq_hz

    def f_reheat(self, k, t3m, hm) -> float:
        d = self.delta(k, t3m, hm)
        if d is None:
            return np.inf
        return self.cfg.nadir_weight * d.nadir_hz + self.cfg.settle_time_weight * d.settling_time_s

    def f_rocof(self, k, t3m, hm) -> float:
        d = self.delta(k, t3m, hm)
        return np.inf if d is None else d.rocof_mhz_per_s

    def rmse(self, k, t3m, hm) -> float:
        meas = self.targets.trace
        trace = self.run(k, t3m, hm)[0]
        if trace is None:
            return np.inf
        t_ev = self.targets.event.t_event
        sel = (meas.t >= t_ev) & (meas.t <= t_ev + self.cfg.refine_window_s)
        dev_meas = meas.f[sel] - _pre_event_level(meas, t_ev)
        dev_sim = np.interp(meas.t[sel], trace.t, trace.f) - _pre_event_level(trace, t_ev)
        return float(np.sqrt(np.mean((dev_sim - dev_meas) ** 2)))

    # the three steps; each returns a StepResult in its own parameter
    def step1(self, t3m=1.0, hm=1.0) -> tuple[int, StepResult]:
        tol = self.cfg.settle_freq_tol_hz
        f0 = self.f_settle(self.n, t3m, hm)
        if f0 <= tol:
            return self.n, StepResult(1.0, f0, 0, True)
        res = golden_section_int(lambda k: self.f_settle(k, t3m, hm), 1, self.n)
        k = int(res.x)
        converged = res.fx <= tol or not res.at_bound
        return k, StepResult(float(self.levels[k - 1]), res.fx, res.iterations, converged)

    def _continuous(self, fn, bounds, start, tol) -> StepResult:
        f_start = fn(start)
        if f_start <= tol:
            return StepResult(start, f_start, 0, True)
        res = golden_section(fn, bounds[0], bounds[1], tol=self.cfg.mult_tol)
        x, fx = res.x, res.fx
        if f_start < fx:
            x, fx = start, f_start
        at_bound = min(abs(x - bounds[0]), abs(x - bounds[1])) <= self.cfg.mult_tol
        return StepResult(x, fx, res.iterations, fx <= tol or not at_bound)

    def step2(self, k, hm=1.0, start=1.0) -> StepResult:
        return self._continuous(lambda m: self.f_reheat(k, m, hm), self.cfg.t3_bounds,
                                start, self.cfg.step2_tol)

    def step3(self, k, t3m=1.0, start=1.0) -> StepResult:
        return self._continuous(lambda m: self.f_rocof(k, t3m, m), self.cfg.h_bounds,
                                start, self.cfg.rocof_tol_mhz)


def step1_governor_capacity(case: SystemCase, targets: CalibrationTargets,
                            cfg: CalibrationConfig = CalibrationConfig()) -> StepResult:
    """Responsive capacity fraction matching the target settling frequency."""
    return _Problem(case, targets, cfg).step1()[1]


def step2_reheater(case: SystemCase, targets: CalibrationTargets,
                   cfg: CalibrationConfig = CalibrationConfig()) -> StepResult:
    """Reheater multiplier matching target nadir and settling time."""
    p = _Problem(case, targets, cfg)
    return p.step2(p.n)


def step3_inertia(case: SystemCase, targets: CalibrationTargets,
                  cfg: CalibrationConfig = CalibrationConfig()) -> StepResult:
    """Uniform inertia multiplier matching the target ROCOF.

    Works on cases without governors, since only inertia is varied.
    """
    p = _Problem(case, targets, cfg, need_pool=False)
    return p.step3(p.n)


def calibrate(case: SystemCase, targets: CalibrationTargets,
              cfg: CalibrationConfig = CalibrationConfig()) -> CalibrationResult:
    p = _Problem(case, targets, cfg)
    k, t3m, hm = p.n, 1.0, 1.0
    total = p.total(k, t3m, hm)
    history = [{"pass": 0, "step": "initial", "kappa": 1.0, "t3_mult": 1.0,
                "h_mult": 1.0, "accepted": True, "total_residual": total}]
    iterations = {"step1": 0, "step2": 0, "step3": 0}
    converged = {"step1": True, "step2": True, "step3": True}

    def consider(step, cand, res, pass_no):
        nonlocal k, t3m, hm, total
        cand_total = p.total(*cand)
        accepted = cand_total < total
        if accepted:
            k, t3m, hm = cand
            total = cand_total
        iterations[step] += res.iterations
        converged[step] = res.converged
        history.append({"pass": pass_no, "step": step, "kappa": float(p.levels[k - 1]),
                        "t3_mult": t3m, "h_mult": hm, "candidate": res.value,
                        "accepted": accepted, "total_residual": total})

    for pass_no in range(1, cfg.outer_passes + 2):
        before = total
        k1, r1 = p.step1(t3m, hm)
        consider("step1", (k1, t3m, hm), r1, pass_no)
        r2 = p.step2(k, hm, start=t3m)
        consider("step2", (k, r2.value, hm), r2, pass_no)
        r3 = p.step3(k, t3m, start=hm)
        consider("step3", (k, t3m, r3.value), r3, pass_no)
        if not total < before or total == 0.0:
            break

    rmse = None
    if targets.trace is not None:
        rmse = p.rmse(k, t3m, hm)
        for _ in range(cfg.refine_cycles):
            lo = max(cfg.t3_bounds[0], t3m * (1 - cfg.refine_span))
            hi = min(cfg.t3_bounds[1], t3m * (1 + cfg.refine_span))
            cand_h = hm
            res = golden_section(lambda m: p.rmse(k, m, cand_h), lo, hi, tol=cfg.mult_tol)
            if res.fx < rmse:
                t3m, rmse = res.x, res.fx
            lo = max(cfg.h_bounds[0], hm * (1 - cfg.refine_span))
            hi = min(cfg.h_bounds[1], hm * (1 + cfg.refine_span))
            cand_t = t3m
            res = golden_section(lambda m: p.rmse(k, cand_t, m), lo, hi, tol=cfg.mult_tol)
            if res.fx < rmse:
                hm, rmse = res.x, res.fx
        total = p.total(k, t3m, hm)
        history.append({"pass": "refine", "step": "trace_rmse", "kappa": float(p.levels[k - 1]),
                        "t3_mult": t3m, "h_mult": hm, "accepted": True,
                        "total_residual": total, "rmse_hz": rmse})

    m = p.metrics(k, t3m, hm)
    if m is None:
        raise CalibrationError("calibrated case does not simulate")
    return CalibrationResult(
        kappa=float(p.levels[k - 1]), t3_mult=t3m, h_mult=hm, n_responsive=k,
        residuals=compare_metrics(m, targets.metrics), total_residual=total, metrics=m,
        iterations=iterations, converged=converged, history=history, trace_rmse_hz=rmse)


def calibrated_case(case: SystemCase, result: CalibrationResult) -> SystemCase:
    return _apply(case, result.n_responsive, result.t3_mult, result.h_mult)


def targets_from_dict(doc: dict, base_dir: Path | None = None) -> CalibrationTargets:
    ev = doc["event"]
    event = TripEvent(t_event=float(ev["t_event_s"]),
                      magnitude=None if "magnitude_mw" not in ev else float(ev["magnitude_mw"]),
                      unit_id=ev.get("unit_id"))
    trace = None
    if doc.get("trace_csv"):
        path = Path(doc["trace_csv"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        trace = read_trace_csv(path)
    return CalibrationTargets(FrequencyMetrics.from_dict(doc["metrics"]), event, trace)


def load_targets(path) -> list[CalibrationTargets]:
    """Targets file: a single target object, a list, or ``{"events": [...]}``."""
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if isinstance(doc, dict) and "events" in doc:
        doc = doc["events"]
    docs = doc if isinstance(doc, list) else [doc]
    return [targets_from_dict(d, path.parent) for d in docs]
