"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .calibration import (CalibrationConfig, CalibrationError, calibrate, calibrated_case,
                          load_targets)
from .metrics import (EventNotFoundError, MetricsConfig, average_deltas, compute_metrics,
                      detect_event_time, format_average_block, format_comparison)
from .model import CaseParseError, CaseValidationError, TripEvent, load_case, serialize_case
from .scenario import (DisplacementStrategy, InfeasibleScenarioError, ScenarioSpec,
                       UflsStage, UflsTable, build_scenario, level_specs, penetration_sweep,
                       sweep_csv)
from .simulator import SimConfig, SimulationError, simulate, verify_convergence
from .trace import TraceFormatError, read_trace_csv, write_trace_csv

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class CommandOutcome:
    exit_code: int
    artifacts_written: list = field(default_factory=list)
    summary: str = ""


def _dump_json(obj, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ------------------------------------------------------------------ helpers

def _event_from_args(args) -> TripEvent:
    if args.event:
        doc = json.loads(Path(args.event).read_text(encoding="utf-8"))
        unknown = set(doc) - {"t_event_s", "magnitude_mw", "unit_id"}
        if unknown:
            raise ValueError(f"event file has unknown keys {sorted(unknown)}")
        return TripEvent(float(doc.get("t_event_s", 1.0)),
                         None if doc.get("magnitude_mw") is None else float(doc["magnitude_mw"]),
                         doc.get("unit_id"))
    if args.event_mw is not None:
        return TripEvent(args.event_time, args.event_mw)
    if args.trip_unit:
        return TripEvent(args.event_time, unit_id=args.trip_unit)
    raise UsageError("an event is required: --event, --event-mw or --trip-unit")


def _ufls_from_args(args) -> UflsTable | None:
    if not args.ufls_stage:
        return None
    stages = []
    for text in args.ufls_stage:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise UsageError(f"--ufls-stage expects THRESHOLD:FRACTION[:DELAY], got {text!r}")
        vals = [float(p) for p in parts]
        stages.append(UflsStage(vals[0], vals[1], vals[2] if len(vals) == 3 else 0.0))
    return UflsTable(tuple(stages))


def _sim_config(args, record=False) -> SimConfig:
    return SimConfig(dt_s=args.dt, t_end_s=args.t_end, ufls=_ufls_from_args(args),
                     record_per_unit=record)


def _metrics_config(args) -> MetricsConfig:
    start, end = (float(x) for x in args.rocof_window.split(","))
    return MetricsConfig((start, end), args.settle_band_mhz, args.settle_tail)


def _metrics_text(m) -> str:
    return (f"ROCOF {m.rocof_mhz_per_s:.1f} mHz/s, nadir {m.nadir_hz:.4f} Hz, "
            f"settling time {m.settling_time_s:.2f} s, "
            f"settling frequency {m.settling_freq_hz:.4f} Hz")


def _event_time(trace, args, path) -> tuple[float, str]:
    if args.event_time is not None:
        return args.event_time, "flag"
    if trace.event_times:
        return float(trace.event_times[0]), "sidecar"
    if args.auto_detect:
        return detect_event_time(trace, args.trigger_mhz), "detected"
    raise UsageError(f"{path}: no event time (use --event-time, --auto-detect or a sidecar)")


# ----------------------------------------------------------------- commands

def cmd_simulate(args) -> CommandOutcome:
    case = load_case(args.case)
    event = _event_from_args(args)
    event.resolve(case)
    cfg = _sim_config(args, record=args.record_per_unit)
    trace = simulate(case, event, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    written = write_trace_csv(trace, out)
    m = compute_metrics(trace, trace.event_times[0])
    lines = [f"trace written to {written[0]}", _metrics_text(m)]
    if trace.annotations["ufls_trips"]:
        lines.append(f"UFLS stages tripped: {len(trace.annotations['ufls_trips'])}")
    return CommandOutcome(EXIT_OK, written, "\n".join(lines))


def cmd_metrics(args) -> CommandOutcome:
    mcfg = _metrics_config(args)
    trace = read_trace_csv(args.trace)
    t_ev, source = _event_time(trace, args, args.trace)
    m = compute_metrics(trace, t_ev, mcfg)
    doc = {**m.to_dict(), "event_time_s": t_ev, "event_time_source": source,
           "config": mcfg.to_dict()}
    summary = _metrics_text(m)
    if args.measured:
        meas = read_trace_csv(args.measured)
        t_meas, src_meas = _event_time(meas, args, args.measured)
        mm = compute_metrics(meas, t_meas, mcfg)
        doc = {"measurement": {**mm.to_dict(), "event_time_s": t_meas,
                               "event_time_source": src_meas},
               "simulation": {**m.to_dict(), "event_time_s": t_ev, "event_time_source": source},
               "difference": {k: abs(doc[k] - mm.to_dict()[k]) for k in m.to_dict()},
               "config": mcfg.to_dict()}
        summary = format_comparison(mm, m)
    written = []
    if args.out:
        written.append(_dump_json(doc, Path(args.out)))
    return CommandOutcome(EXIT_OK, written, summary)


def cmd_calibrate(args) -> CommandOutcome:
    case = load_case(args.case)
    targets = load_targets(args.targets)
    cfg = CalibrationConfig(outer_passes=args.outer_passes, horizon_s=args.horizon,
                            dt_s=args.dt)
    out_dir = Path(args.out_dir)
    results, written, lines = [], [], []
    for i, tgt in enumerate(targets, start=1):
        tgt.event.resolve(case)
        res = calibrate(case, tgt, cfg)
        results.append(res)
        name = "case_calibrated.json" if len(targets) == 1 else f"case_calibrated_{i}.json"
        patched = out_dir / name
        patched.parent.mkdir(parents=True, exist_ok=True)
        patched.write_text(serialize_case(calibrated_case(case, res)), encoding="utf-8")
        written.append(patched)
        flags = "" if all(res.converged.values()) else "  [unconverged: " + ", ".join(
            k for k, v in res.converged.items() if not v) + "]"
        lines.append(f"event {i}: kappa {res.kappa:.3f}, t3_mult {res.t3_mult:.3f}, "
                     f"h_mult {res.h_mult:.3f}{flags}")
    doc = {"config": cfg.to_dict(),
           "events": [{"index": i, "result": r.to_dict(), "patched_case": str(p.name)}
                      for i, (r, p) in enumerate(zip(results, written), start=1)]}
    if len(results) > 1:
        doc["average_difference"] = average_deltas(r.residuals for r in results).to_dict()
        lines.append("")
        lines.append(format_average_block(r.residuals for r in results))
    written.insert(0, _dump_json(doc, out_dir / "calibration.json"))
    return CommandOutcome(EXIT_OK, written, "\n".join(lines))


def _strategy(args) -> DisplacementStrategy:
    return DisplacementStrategy(args.strategy)


def cmd_scenario_build(args) -> CommandOutcome:
    case = load_case(args.case)
    priority = tuple(p for p in (args.priority or "").split(",") if p)
    spec = ScenarioSpec(args.wind_pct, args.pv_pct, _strategy(args), priority)
    new = build_scenario(case, spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(serialize_case(new), encoding="utf-8")
    return CommandOutcome(EXIT_OK, [out], f"scenario case written to {out}")


def _level_file_tag(label: str) -> str:
    return label.replace("%", "pct").replace(".", "p")


def cmd_sweep(args) -> CommandOutcome:
    case = load_case(args.case)
    event = _event_from_args(args)
    try:
        levels = [float(x) for x in args.levels.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--levels must be comma-separated numbers, got {args.levels!r}") from None
    specs = level_specs(levels, args.wind_pct, _strategy(args))
    cfg = _sim_config(args)
    ufls_check = UflsTable((UflsStage(args.ufls_threshold, 0.05, 0.0),))
    rows = penetration_sweep(case, specs, event, cfg, ufls_check=ufls_check, jobs=args.jobs)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = out_dir / "sweep.csv"
    table.write_text(sweep_csv(rows), encoding="utf-8")
    written = [table]
    for r in rows:
        if r.trace is not None:
            written.extend(write_trace_csv(r.trace, out_dir / f"trace_{_level_file_tag(r.label)}.csv"))
    doc = {"config": {"sim": cfg.to_dict(), "metrics": MetricsConfig().to_dict(),
                      "wind_pct": args.wind_pct, "strategy": args.strategy,
                      "ufls_threshold_hz": args.ufls_threshold,
                      "event": {"t_event_s": event.t_event, "magnitude_mw": event.magnitude,
                                "unit_id": event.unit_id},
                      "d_load": case.d_load},
           "rows": [{"label": r.label, "status": r.status, "message": r.message,
                     "metrics": None if r.metrics is None else r.metrics.to_dict(),
                     "ufls_flags": r.ufls_flags} for r in rows]}
    written.insert(1, _dump_json(doc, out_dir / "sweep.json"))
    code = EXIT_OK if any(r.ok for r in rows) else EXIT_RUNTIME
    return CommandOutcome(code, written, sweep_csv(rows).rstrip())


def cmd_convergence(args) -> CommandOutcome:
    case = load_case(args.case)
    event = _event_from_args(args)
    event.resolve(case)
    report = verify_convergence(case, event, _sim_config(args))
    doc = {**report.to_dict(), "config": _sim_config(args).to_dict()}
    written = [_dump_json(doc, Path(args.out))] if args.out else []
    note = " (limits active: no threshold applies)" if report.saturated else ""
    return CommandOutcome(EXIT_OK, written,
                          f"nadir change dt={report.dt_s:g} -> {report.dt_s / 2:g}: "
                          f"{report.nadir_delta_hz:.3e} Hz{note}")


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_event_flags(p):
    p.add_argument("--event", help="event JSON {t_event_s, magnitude_mw | unit_id}")
    p.add_argument("--event-mw", type=float, help="trip magnitude in MW")
    p.add_argument("--trip-unit", help="trip the named synchronous unit")
    p.add_argument("--event-time", type=float, default=1.0, help="event time in s")


def _add_sim_flags(p):
    p.add_argument("--dt", type=float, default=0.01, help="integration step, s")
    p.add_argument("--t-end", type=float, default=60.0, help="simulated horizon, s")
    p.add_argument("--ufls-stage", action="append",
                   help="UFLS stage THRESHOLD_HZ:FRACTION[:DELAY_S]; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gridfreq", description=__doc__.splitlines()[0],
                     allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate a trip event")
    p.add_argument("case")
    _add_event_flags(p)
    _add_sim_flags(p)
    p.add_argument("--record-per-unit", action="store_true")
    p.add_argument("--out", default="trace.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("metrics", help="frequency-response metrics of a trace")
    p.add_argument("trace")
    p.add_argument("--measured", help="measured trace to compare against")
    p.add_argument("--event-time", type=float)
    p.add_argument("--auto-detect", action="store_true")
    p.add_argument("--trigger-mhz", type=float, default=10.0)
    p.add_argument("--rocof-window", default="0.0,0.5")
    p.add_argument("--settle-band-mhz", type=float, default=5.0)
    p.add_argument("--settle-tail", type=float, default=5.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("calibrate", help="three-step calibration against event targets")
    p.add_argument("case")
    p.add_argument("targets")
    p.add_argument("--out-dir", default="calibration")
    p.add_argument("--outer-passes", type=int, default=2)
    p.add_argument("--horizon", type=float, default=60.0)
    p.add_argument("--dt", type=float, default=0.01)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("scenario", help="renewable scenario tools")
    ssub = p.add_subparsers(dest="scenario_command", required=True, parser_class=_Parser)
    b = ssub.add_parser("build", help="build a displacement scenario case")
    b.add_argument("case")
    b.add_argument("--wind-pct", type=float, required=True)
    b.add_argument("--pv-pct", type=float, required=True)
    b.add_argument("--strategy", default="retire_smallest_first",
                   choices=[s.value for s in DisplacementStrategy])
    b.add_argument("--priority", help="comma-separated unit ids for priority_list")
    b.add_argument("--out", default="scenario_case.json")
    b.set_defaults(func=cmd_scenario_build)

    p = sub.add_parser("sweep", help="metrics across renewable penetration levels")
    p.add_argument("case")
    p.add_argument("--levels", default="20,40,60", help="total renewable %%, comma-separated")
    p.add_argument("--wind-pct", type=float, default=15.0)
    p.add_argument("--strategy", default="retire_smallest_first",
                   choices=[s.value for s in DisplacementStrategy])
    p.add_argument("--ufls-threshold", type=float, default=59.3)
    p.add_argument("--jobs", type=int, default=int(os.environ.get("GRIDFREQ_JOBS", "1")))
    p.add_argument("--out-dir", default="sweep")
    _add_event_flags(p)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("convergence", help="step-size audit (dt vs dt/2)")
    p.add_argument("case")
    _add_event_flags(p)
    _add_sim_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convergence)
    return parser


def run(argv=None) -> CommandOutcome:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (SimulationError, EventNotFoundError) as exc:
        return CommandOutcome(EXIT_RUNTIME, summary=f"error: {exc}")
    except (UsageError, CaseParseError, CaseValidationError, TraceFormatError,
            CalibrationError, InfeasibleScenarioError, OSError, ValueError, KeyError) as exc:
        return CommandOutcome(EXIT_INVALID, summary=f"error: {exc}")


def main(argv=None) -> int:
    outcome = run(argv)
    stream = sys.stdout if outcome.exit_code == EXIT_OK else sys.stderr
    if outcome.summary:
        print(outcome.summary, file=stream)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
