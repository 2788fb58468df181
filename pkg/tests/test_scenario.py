import numpy as np
import pytest

from gridfreq.governor import Tgov1Params
from gridfreq.metrics import compute_metrics
from gridfreq.model import (SynchronousUnit, SystemCase, TripEvent, penetration_shares,
                            system_inertia)
from gridfreq.scenario import (STAGE1_UFLS, DisplacementStrategy, InfeasibleScenarioError,
                               ScenarioSpec, build_scenario, level_specs, penetration_sweep,
                               sweep_csv)
from gridfreq.simulator import SimConfig, simulate


def equal_fleet(n=10):
    units = [SynchronousUnit(f"u{i:02d}", 100.0, 80.0, 4.0, Tgov1Params(), True)
             for i in range(n)]
    return SystemCase(units=units, p_load=80.0 * n)


def mixed_fleet():
    sizes = [500.0, 300.0, 300.0, 200.0, 120.0]
    units = [SynchronousUnit(f"m{i}", s, 0.8 * s, 3.0 + i, Tgov1Params(), True)
             for i, s in enumerate(sizes)]
    return SystemCase(units=units, p_load=0.8 * sum(sizes))


def test_twenty_percent_shares():
    case = build_scenario(mixed_fleet(), ScenarioSpec(15, 5))
    shares = penetration_shares(case)
    assert shares["wind_pct"] == pytest.approx(15.0)
    assert shares["pv_pct"] == pytest.approx(5.0)
    assert shares["total_renewable_pct"] == pytest.approx(20.0)


def test_zero_shares_identity():
    base = mixed_fleet()
    assert build_scenario(base, ScenarioSpec(0, 0)) == base


def test_equal_fleet_sixty_percent():
    base = equal_fleet()
    case = build_scenario(base, ScenarioSpec(15, 45))
    assert len(case.units) == 4
    survivors = sum(u.h * u.s_rated for u in case.units) / case.s_base
    assert system_inertia(case) == pytest.approx(survivors)
    assert system_inertia(case) == pytest.approx(0.4 * system_inertia(base), rel=1e-12)
    # ties broken by id, so the lowest ids go first
    assert [u.id for u in case.units] == ["u06", "u07", "u08", "u09"]


def test_marginal_unit_partially_displaced():
    base = mixed_fleet()
    case = build_scenario(base, ScenarioSpec(15, 5))
    displaced = 0.2 * base.total_generation            # 227.2 MW
    # smallest first: m4 (96 MW) retired whole, m3 (160 MW) carries the rest
    assert [u.id for u in case.units] == ["m0", "m1", "m2", "m3"]
    m3 = case.unit("m3")
    assert m3.p_gen == pytest.approx(160.0 - (displaced - 96.0))
    assert m3.loading == pytest.approx(0.8)
    assert m3.h == base.unit("m3").h
    assert case.unit("m2") == base.unit("m2")


@pytest.mark.parametrize("strategy", list(DisplacementStrategy))
def test_balance_inertia_and_base_preserved(strategy):
    base = mixed_fleet()
    prio = ("m4", "m3", "m2", "m1", "m0")
    case = build_scenario(base, ScenarioSpec(15, 25, strategy, prio))
    assert case.total_generation == pytest.approx(case.p_load, rel=1e-6)
    assert case.p_load == base.p_load
    assert case.s_base == base.s_base
    assert system_inertia(case) < system_inertia(base)
    assert penetration_shares(case)["total_renewable_pct"] == pytest.approx(40.0)


def test_proportional_derate_keeps_every_unit():
    base = mixed_fleet()
    case = build_scenario(base, ScenarioSpec(15, 25, DisplacementStrategy.PROPORTIONAL_DERATE))
    assert [u.id for u in case.units] == [u.id for u in base.units]
    for a, b in zip(base.units, case.units):
        assert b.p_gen == pytest.approx(0.6 * a.p_gen)
        assert b.loading == pytest.approx(a.loading)
        assert b.h == a.h
    assert system_inertia(case) == pytest.approx(0.6 * system_inertia(base))


def test_priority_list_order_and_shortfall():
    base = mixed_fleet()
    case = build_scenario(base, ScenarioSpec(15, 5, DisplacementStrategy.PRIORITY_LIST,
                                             ("m0",)))
    assert case.unit("m0").p_gen == pytest.approx(400.0 - 227.2)
    with pytest.raises(InfeasibleScenarioError) as exc:
        build_scenario(base, ScenarioSpec(15, 25, DisplacementStrategy.PRIORITY_LIST,
                                          ("m4", "m3")))
    assert exc.value.max_share_pct == pytest.approx(100.0 * 256.0 / 1136.0)
    with pytest.raises(InfeasibleScenarioError):
        build_scenario(base, ScenarioSpec(15, 5, DisplacementStrategy.PRIORITY_LIST, ("zz",)))


def test_spec_limits():
    with pytest.raises(InfeasibleScenarioError):
        ScenarioSpec(50, 50)
    with pytest.raises(InfeasibleScenarioError):
        ScenarioSpec(-1, 5)


def test_share_below_existing_renewables(ercot):
    with pytest.raises(InfeasibleScenarioError):
        build_scenario(ercot, ScenarioSpec(5, 5))


def test_retirement_is_deterministic(ercot):
    spec = ScenarioSpec(15, 25)
    assert build_scenario(ercot, spec) == build_scenario(ercot, spec)


EVENT = TripEvent(1.0, 1129.0)


@pytest.fixture(scope="module")
def ercot_sweep(ercot):
    return penetration_sweep(ercot, level_specs([20, 40, 60]), EVENT)


def test_sweep_orderings(ercot_sweep):
    assert [r.label for r in ercot_sweep] == ["base", "20%", "40%", "60%"]
    m = [r.metrics for r in ercot_sweep]
    rocof = [x.rocof_mhz_per_s for x in m]
    nadir = [x.nadir_hz for x in m]
    ts = [x.settling_time_s for x in m]
    sf = [x.settling_freq_hz for x in m]
    assert all(b > a for a, b in zip(rocof, rocof[1:]))
    assert all(b < a for a, b in zip(nadir, nadir[1:]))
    assert all(b >= a for a, b in zip(ts, ts[1:]))
    assert all(b < a for a, b in zip(sf, sf[1:]))


def test_sweep_ufls_flags_track_nadir(ercot_sweep):
    for row in ercot_sweep:
        below = row.metrics.nadir_hz < 59.3
        assert (row.ufls_flags == ["UFLS stage 1 would trigger"]) == below


def test_sweep_flags_deep_dip(ercot):
    rows = penetration_sweep(ercot, level_specs([60]), TripEvent(1.0, 2500.0))
    assert rows[1].metrics.nadir_hz < 59.3
    assert rows[1].ufls_flags == ["UFLS stage 1 would trigger"]


def test_sweep_parallel_matches_serial(ercot, ercot_sweep):
    par = penetration_sweep(ercot, level_specs([20, 40, 60]), EVENT, jobs=4)
    assert [r.metrics for r in par] == [r.metrics for r in ercot_sweep]
    assert sweep_csv(par) == sweep_csv(ercot_sweep)


def test_infeasible_row_does_not_stop_sweep(ercot):
    rows = penetration_sweep(ercot, level_specs([20, 99]), EVENT)
    assert [r.status for r in rows] == ["ok", "ok", "infeasible"]
    text = sweep_csv(rows)
    last = text.strip().splitlines()[-1]
    assert last.startswith("99%,,,,,")
    assert "INFEASIBLE" in last


def test_single_row_sweep_is_composition(fleet10):
    ev = TripEvent(1.0, 500.0)
    cfg = SimConfig(t_end_s=40.0)
    (row,) = penetration_sweep(fleet10, [("base", None)], ev, cfg)
    direct = compute_metrics(simulate(fleet10, ev, cfg), 1.0)
    assert row.metrics == direct


def test_sweep_csv_columns(ercot_sweep):
    lines = sweep_csv(ercot_sweep).splitlines()
    assert lines[0] == "label,rocof_mhz_per_s,nadir_hz,settling_time_s,settling_freq_hz,ufls_flags"
    assert len(lines) == 5
    assert np.isclose(float(lines[1].split(",")[2]), ercot_sweep[0].metrics.nadir_hz, atol=1e-4)


def test_uniform_fleet_sweep_monotone():
    base = equal_fleet(20)
    rows = penetration_sweep(base, level_specs(range(20, 90, 10)), TripEvent(1.0, 60.0),
                             ufls_check=STAGE1_UFLS)
    m = [r.metrics for r in rows if r.ok]
    assert len(m) == len(rows)
    assert all(b.rocof_mhz_per_s >= a.rocof_mhz_per_s for a, b in zip(m, m[1:]))
    assert all(b.nadir_hz <= a.nadir_hz for a, b in zip(m, m[1:]))
