"""Centre-of-inertia frequency response simulation and model calibration."""

from .calibration import (CalibrationConfig, CalibrationResult, CalibrationTargets,
                          apply_calibration, calibrate, step1_governor_capacity,
                          step2_reheater, step3_inertia)
from .governor import (GovernorState, Tgov1Params, tgov1_init, tgov1_steady_state,
                       tgov1_step_output)
from .metrics import (FrequencyMetrics, MetricsConfig, MetricsDelta, compare_metrics,
                      compute_metrics, detect_event_time)
from .model import (RenewableKind, RenewableUnit, SynchronousUnit, SystemCase, TripEvent,
                    parse_case, penetration_shares, serialize_case, system_inertia)
from .scenario import (DisplacementStrategy, ScenarioSpec, build_scenario,
                       penetration_sweep)
from .simulator import (SimConfig, UflsStage, UflsTable, apply_ufls, simulate,
                        verify_convergence)
from .trace import FrequencyTrace, read_trace_csv, write_trace_csv

__version__ = "0.1.0"
