import json

import numpy as np
import pytest

from gridfreq.governor import Tgov1Params
from gridfreq.model import (CaseParseError, CaseValidationError, RenewableKind, RenewableUnit,
                            SynchronousUnit, SystemCase, TripEvent, case_to_dict, parse_case,
                            penetration_shares, serialize_case, system_inertia)
from gridfreq.reference import ERCOT_TOTAL_GENERATION_MW, ERCOT_TOTAL_LOAD_MW


def _doc(**over):
    doc = {"f0": 60.0, "p_load_mw": 800.0, "d_load": 1.0,
           "units": [{"id": "g1", "s_rated_mva": 1000.0, "p_gen_mw": 800.0, "h_s": 5.0}]}
    doc.update(over)
    return doc


def test_minimal_case_derives_s_base():
    case = parse_case(json.dumps(_doc()))
    assert case.s_base == 1000.0
    assert case.units[0].governor is None
    assert not case.units[0].responsive


def test_table1_totals_rejected_unless_losses_folded():
    units = [{"id": "g1", "s_rated_mva": 90000.0, "p_gen_mw": ERCOT_TOTAL_GENERATION_MW,
              "h_s": 4.0}]
    with pytest.raises(CaseValidationError, match="power imbalance"):
        parse_case(json.dumps(_doc(p_load_mw=ERCOT_TOTAL_LOAD_MW, units=units)))
    case = parse_case(json.dumps(_doc(p_load_mw=ERCOT_TOTAL_GENERATION_MW, units=units)))
    assert case.p_load == pytest.approx(75735.83)


def test_negative_inertia_rejected():
    doc = _doc()
    doc["units"][0]["h_s"] = -1
    with pytest.raises(CaseValidationError, match="inertia must be positive"):
        parse_case(json.dumps(doc))


def test_validation_lists_every_violation():
    doc = _doc(p_load_mw=700.0)
    doc["units"][0]["h_s"] = -1
    doc["units"][0]["responsive"] = True
    with pytest.raises(CaseValidationError) as exc:
        parse_case(json.dumps(doc))
    text = " ".join(exc.value.violations)
    assert "inertia" in text and "no governor" in text and "imbalance" in text


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d["units"][0].update(colour="red"), "units[0]"),
    (lambda d: d.update(extra=1), "<root>"),
    (lambda d: d["units"][0].update(h_s="five"), "units[0].h_s"),
    (lambda d: d["units"][0].pop("p_gen_mw"), "units[0]"),
    (lambda d: d.update(renewables=[{"id": "r", "kind": "hydro", "p_gen_mw": 1}]),
     "renewables[0].kind"),
    (lambda d: d["units"][0].update(governor={"r": 0.05, "tau": 1}), "units[0].governor"),
])
def test_schema_errors_name_the_path(mutate, path):
    doc = _doc()
    mutate(doc)
    with pytest.raises(CaseParseError) as exc:
        parse_case(json.dumps(doc))
    assert exc.value.path == path


def test_not_json():
    with pytest.raises(CaseParseError):
        parse_case("{units: ")


def test_governor_defaults_fill_missing_values():
    doc = _doc()
    doc["units"][0]["governor"] = {"r": 0.04}
    case = parse_case(json.dumps(doc))
    g = case.units[0].governor
    assert (g.r, g.t1_s, g.t2_s, g.t3_s, g.v_max, g.v_min, g.d_t) == (0.04, 0.5, 2.1, 7.0, 1.0, 0.0, 0.0)
    assert case.units[0].responsive


def test_governor_invariants_checked():
    doc = _doc()
    doc["units"][0]["governor"] = {"t2_s": 8.0, "t3_s": 7.0}
    with pytest.raises(CaseValidationError, match="t2_s"):
        parse_case(json.dumps(doc))
    doc["units"][0]["governor"] = {"v_max": 0.7}
    with pytest.raises(CaseValidationError, match="valve limits"):
        parse_case(json.dumps(doc))


def _unit(i, h, s):
    return SynchronousUnit(f"g{i}", s, 0.5 * s, h)


def test_system_inertia_examples():
    one = SystemCase(units=[_unit(1, 5.0, 1000.0)], p_load=500.0)
    assert system_inertia(one) == 5.0
    two = SystemCase(units=[_unit(1, 3.0, 500.0), _unit(2, 5.0, 500.0)], p_load=500.0)
    assert system_inertia(two) == 4.0
    with_pv = SystemCase(units=two.units, renewables=[RenewableUnit("pv", RenewableKind.PV, 300.0)],
                         p_load=800.0)
    assert system_inertia(with_pv) == 4.0


@pytest.mark.parametrize("seed", range(5))
def test_system_inertia_linear_in_each_h(seed):
    rng = np.random.default_rng(seed)
    hs = rng.uniform(2, 8, 4)
    ss = rng.uniform(100, 900, 4)
    base = SystemCase(units=[_unit(i, h, s) for i, (h, s) in enumerate(zip(hs, ss))],
                      p_load=0.5 * ss.sum(), s_base_mva=float(ss.sum()))
    j, dh = rng.integers(4), rng.uniform(0.1, 2)
    bumped = list(base.units)
    bumped[j] = SynchronousUnit(bumped[j].id, bumped[j].s_rated, bumped[j].p_gen, bumped[j].h + dh)
    case2 = SystemCase(units=bumped, p_load=base.p_load, s_base_mva=base.s_base_mva)
    assert system_inertia(case2) - system_inertia(base) == pytest.approx(dh * ss[j] / ss.sum())


@pytest.mark.parametrize("wind, pv, sync, expect", [
    (0, 0, 100, (0, 0, 0)),
    (15, 5, 80, (15, 5, 20)),
    (15, 45, 40, (15, 45, 60)),
])
def test_penetration_shares(wind, pv, sync, expect):
    ren = []
    if wind:
        ren.append(RenewableUnit("w", RenewableKind.WIND_DFIG, wind))
    if pv:
        ren.append(RenewableUnit("p", RenewableKind.PV, pv))
    case = SystemCase(units=[SynchronousUnit("g", 200.0, sync, 4.0)], renewables=ren, p_load=100.0)
    shares = penetration_shares(case)
    assert [shares[k] for k in ("wind_pct", "pv_pct", "total_renewable_pct")] == pytest.approx(expect)
    assert shares["wind_pct"] + shares["pv_pct"] == shares["total_renewable_pct"]


def _random_case(rng):
    units = []
    for i in range(rng.integers(1, 6)):
        s = float(rng.uniform(50, 2000))
        gov = None
        if rng.random() < 0.6:
            t3 = float(rng.uniform(1, 12))
            gov = Tgov1Params(r=float(rng.uniform(0.03, 0.08)), t1_s=float(rng.uniform(0.1, 1)),
                              t2_s=float(rng.uniform(0, t3)), t3_s=t3, v_max=1.0,
                              v_min=0.0, d_t=float(rng.uniform(0, 0.5)))
        units.append(SynchronousUnit(f"g{i}", s, float(rng.uniform(0, 1)) * s,
                                     float(rng.uniform(1, 9)), gov,
                                     bool(gov is not None and rng.random() < 0.7)))
    ren = [RenewableUnit(f"r{i}", rng.choice(list(RenewableKind)), float(rng.uniform(0, 300)))
           for i in range(rng.integers(0, 3))]
    load = sum(u.p_gen for u in units) + sum(r.p_gen for r in ren)
    s_base = float(rng.uniform(500, 5000)) if rng.random() < 0.3 else None
    return SystemCase(units=units, renewables=ren, p_load=load,
                      d_load=float(rng.uniform(0, 2)), f0=float(rng.choice([50.0, 60.0])),
                      s_base_mva=s_base)


@pytest.mark.parametrize("seed", range(25))
def test_serialize_parse_round_trip(seed):
    case = _random_case(np.random.default_rng(seed))
    again = parse_case(serialize_case(case))
    assert again == case
    assert case_to_dict(again) == case_to_dict(case)


def test_trip_event_resolution():
    case = SystemCase(units=[SynchronousUnit("g1", 1000.0, 800.0, 5.0)], p_load=800.0)
    assert TripEvent(1.0, 100.0).resolve(case) == 100.0
    assert TripEvent(1.0, unit_id="g1").resolve(SystemCase(
        units=[case.units[0], SynchronousUnit("g2", 100.0, 50.0, 3.0)], p_load=850.0)) == 800.0
    with pytest.raises(ValueError, match="below total generation"):
        TripEvent(1.0, 800.0).resolve(case)
    with pytest.raises(ValueError, match="unknown unit"):
        TripEvent(1.0, unit_id="nope").resolve(case)
    with pytest.raises(ValueError):
        TripEvent(1.0)
    with pytest.raises(ValueError):
        TripEvent(1.0, -5.0)
