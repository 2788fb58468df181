"""High-renewable scenarios by displacement of synchronous generation, and sweeps."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

from .metrics import FrequencyMetrics, MetricsConfig, compute_metrics
from .model import RenewableKind, RenewableUnit, SystemCase, TripEvent
from .simulator import SimConfig, SimulationError, UflsStage, UflsTable, apply_ufls, simulate
from .trace import FrequencyTrace

_TOL = 1e-9
STAGE1_UFLS = UflsTable((UflsStage(59.3, 0.05, 0.0),))


class InfeasibleScenarioError(ValueError):
    def __init__(self, message: str, max_share_pct: float | None = None):
        self.max_share_pct = max_share_pct
        if max_share_pct is not None:
            message += f" (maximum feasible renewable share {max_share_pct:.3f}%)"
        super().__init__(message)


class DisplacementStrategy(enum.Enum):
    RETIRE_SMALLEST_FIRST = "retire_smallest_first"
    PROPORTIONAL_DERATE = "proportional_derate"
    PRIORITY_LIST = "priority_list"


@dataclass(frozen=True)
class ScenarioSpec:
    wind_pct: float
    pv_pct: float
    strategy: DisplacementStrategy = DisplacementStrategy.RETIRE_SMALLEST_FIRST
    priority: tuple[str, ...] = ()     # unit ids, for PRIORITY_LIST

    def __post_init__(self):
        if self.wind_pct < 0 or self.pv_pct < 0:
            raise InfeasibleScenarioError("renewable shares must be non-negative")
        if not self.wind_pct + self.pv_pct < 100:
            raise InfeasibleScenarioError("wind plus PV share must stay below 100%")

    @property
    def total_pct(self) -> float:
        return self.wind_pct + self.pv_pct


def _partial(unit, keep: float):
    # A partly displaced unit keeps its loading and its inertia constant on
    # the reduced rating.
    return replace(unit, p_gen=unit.p_gen * keep, s_rated=unit.s_rated * keep)


def build_scenario(base: SystemCase, spec: ScenarioSpec) -> SystemCase:
    """Replace synchronous generation with wind and PV to reach ``spec``.

    Total generation, load and the system MVA base are held fixed, so
    inertia constants stay comparable across scenarios.
    """
    gen = base.total_generation
    have = {kind: sum(r.p_gen for r in base.renewables if r.kind is kind)
            for kind in RenewableKind}
    want = {RenewableKind.WIND_DFIG: spec.wind_pct / 100.0 * gen,
            RenewableKind.PV: spec.pv_pct / 100.0 * gen}
    add = {}
    for kind in RenewableKind:
        extra = want[kind] - have[kind]
        if extra < -_TOL * gen:
            raise InfeasibleScenarioError(
                f"requested {kind.value} share is below the existing "
                f"{100.0 * have[kind] / gen:.3f}%")
        add[kind] = max(extra, 0.0)
    displaced = sum(add.values())
    if displaced <= _TOL * gen:
        return base

    units = list(base.units)
    strategy = spec.strategy
    if strategy is DisplacementStrategy.PROPORTIONAL_DERATE:
        keep = 1.0 - displaced / base.sync_generation
        units = [_partial(u, keep) for u in units]
    else:
        if strategy is DisplacementStrategy.RETIRE_SMALLEST_FIRST:
            order = sorted(range(len(units)), key=lambda i: (units[i].s_rated, units[i].id))
        else:
            ids = [u.id for u in units]
            unknown = [p for p in spec.priority if p not in ids]
            if unknown:
                raise InfeasibleScenarioError(f"priority list names unknown units {unknown}")
            order = [ids.index(p) for p in spec.priority]
        remaining = displaced
        retired = set()
        for i in order:
            if remaining <= _TOL * gen:
                break
            u = units[i]
            if u.p_gen <= 0:
                continue
            if u.p_gen <= remaining + _TOL * gen:
                retired.add(i)
                remaining -= u.p_gen
            else:
                units[i] = _partial(u, 1.0 - remaining / u.p_gen)
                remaining = 0.0
        if remaining > _TOL * gen:
            listed = sum(base.units[i].p_gen for i in order)
            max_pct = 100.0 * (sum(have.values()) + listed) / gen
            raise InfeasibleScenarioError("displacement exceeds the units available", max_pct)
        if len(retired) == len(units):
            raise InfeasibleScenarioError("scenario retires every synchronous unit", None)
        units = [u for i, u in enumerate(units) if i not in retired]

    renewables = list(base.renewables)
    names = {r.id for r in renewables}
    for kind, mw in add.items():
        if mw > _TOL * gen:
            rid = f"{kind.value}_scenario"
            while rid in names:
                rid += "_"
            renewables.append(RenewableUnit(rid, kind, mw))
    return replace(base, units=tuple(units), renewables=tuple(renewables),
                   s_base_mva=base.s_base)


@dataclass
class SweepRow:
    label: str
    metrics: FrequencyMetrics | None = None
    ufls_flags: list[str] = field(default_factory=list)
    status: str = "ok"               # ok | infeasible | failed
    message: str = ""
    trace: FrequencyTrace | None = None
    case: SystemCase | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def level_specs(levels, wind_pct: float = 15.0,
                strategy: DisplacementStrategy = DisplacementStrategy.RETIRE_SMALLEST_FIRST):
    """``("base", None)`` followed by one spec per total renewable level (%)."""
    rows = [("base", lambda: None)]
    for lvl in levels:
        def make(lvl=lvl):
            return ScenarioSpec(wind_pct, lvl - wind_pct, strategy)
        rows.append((f"{lvl:g}%", make))
    return rows


def _run_row(base, label, make_spec, event, cfg, metrics_cfg, ufls_check):
    row = SweepRow(label)
    try:
        spec = make_spec() if callable(make_spec) else make_spec
        case = base if spec is None else build_scenario(base, spec)
        mw = event.resolve(case)
        if event.unit_id is None and not mw < case.sync_generation:
            raise InfeasibleScenarioError(
                f"trip of {mw:g} MW exceeds the remaining synchronous generation "
                f"{case.sync_generation:.1f} MW")
    except (InfeasibleScenarioError, ValueError) as exc:
        row.status, row.message = "infeasible", str(exc)
        return row
    row.case = case
    try:
        trace = simulate(case, event, cfg)
        row.metrics = compute_metrics(trace, trace.event_times[0], metrics_cfg)
    except (SimulationError, ValueError) as exc:
        row.status, row.message = "failed", str(exc)
        return row
    row.trace = trace
    if ufls_check is not None:
        for action in apply_ufls(trace, ufls_check):
            row.ufls_flags.append(f"UFLS stage {action['stage']} would trigger")
    return row


def penetration_sweep(base: SystemCase, specs, event: TripEvent,
                      cfg: SimConfig = SimConfig(), metrics_cfg: MetricsConfig = MetricsConfig(),
                      ufls_check: UflsTable | None = STAGE1_UFLS, jobs: int = 1) -> list[SweepRow]:
    """One simulation and metric extraction per ``(label, spec)`` entry.

    ``spec`` may be ``None`` (the base case), a ScenarioSpec, or a callable
    producing one; construction errors mark that row infeasible.  Rows come
    back in input order.
    """
    specs = list(specs)

    def run(item):
        label, spec = item
        return _run_row(base, label, spec, event, cfg, metrics_cfg, ufls_check)

    if jobs > 1 and len(specs) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, specs))
    return [run(item) for item in specs]


SWEEP_COLUMNS = ("label", "rocof_mhz_per_s", "nadir_hz", "settling_time_s",
                 "settling_freq_hz", "ufls_flags")


def sweep_csv(rows) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        if r.metrics is None:
            vals = ["", "", "", ""]
            flags = f"{r.status.upper()}: {r.message}"
        else:
            m = r.metrics
            vals = [f"{m.rocof_mhz_per_s:.3f}", f"{m.nadir_hz:.4f}",
                    f"{m.settling_time_s:.2f}", f"{m.settling_freq_hz:.4f}"]
            flags = "; ".join(r.ufls_flags)
        flags = '"' + flags.replace('"', "'") + '"' if ("," in flags or '"' in flags) else flags
        lines.append(",".join([r.label, *vals, flags]))
    return "\n".join(lines) + "\n"
