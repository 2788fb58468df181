"""Synthetic reference cases used by the examples, sweeps and acceptance runs."""

from __future__ import annotations

from .governor import Tgov1Params
from .model import RenewableKind, RenewableUnit, SynchronousUnit, SystemCase

# System totals of the 2015 summer-peak planning model; losses (generation
# minus load) are folded into the effective load.
ERCOT_TOTAL_GENERATION_MW = 75735.83
ERCOT_TOTAL_LOAD_MW = 74127.61
ERCOT_EXISTING_WIND_MW = 10000.0


def single_unit_case(h: float = 5.0, s_rated: float = 1000.0, p_gen: float = 800.0,
                     governor: Tgov1Params | None = None, d_load: float = 0.0,
                     pv_mw: float = 0.0) -> SystemCase:
    renewables = ()
    if pv_mw:
        renewables = (RenewableUnit("pv1", RenewableKind.PV, pv_mw),)
    unit = SynchronousUnit("g1", s_rated, p_gen, h, governor, governor is not None)
    return SystemCase(units=(unit,), renewables=renewables, p_load=p_gen + pv_mw,
                      d_load=d_load)


def ten_unit_fleet(loading: float = 0.85, d_load: float = 1.0) -> SystemCase:
    """Ten governed steam units of mixed size and inertia, all responsive."""
    sizes = [2000, 1800, 1600, 1450, 1300, 1150, 1000, 900, 800, 700]
    inertia = [5.5, 5.0, 4.8, 4.5, 4.2, 4.0, 3.8, 3.5, 3.2, 3.0]
    units = tuple(
        SynchronousUnit(f"g{i + 1:02d}", p / loading, float(p), h, Tgov1Params(), True)
        for i, (p, h) in enumerate(zip(sizes, inertia)))
    total = float(sum(sizes))
    return SystemCase(units=units, p_load=total, d_load=d_load)


def ercot_aggregate_case(n_units: int = 30, loading: float = 0.85,
                         responsive_every: int = 10, responsive_offset: int = 4,
                         d_load: float = 1.0) -> SystemCase:
    """Aggregate fleet scaled to the interconnection totals.

    ``n_units`` synchronous units with sizes rising linearly from 1 to 6 parts
    share the non-wind generation.  Units whose size rank ``i`` satisfies
    ``i % responsive_every == responsive_offset`` provide governor response;
    the others carry governors that are blocked.  Existing wind carries
    about 10 GW.
    """
    sync_mw = ERCOT_TOTAL_GENERATION_MW - ERCOT_EXISTING_WIND_MW
    weights = [1.0 + 5.0 * i / (n_units - 1) for i in range(n_units)]
    scale = sync_mw / sum(weights)
    units = []
    for i, wgt in enumerate(weights):
        p = wgt * scale
        h = 3.0 + 3.0 * ((i * 7) % n_units) / (n_units - 1)
        units.append(SynchronousUnit(
            f"u{i + 1:03d}", p / loading, p, h, Tgov1Params(),
            responsive=(i % responsive_every == responsive_offset)))
    wind = (RenewableUnit("wind_existing", RenewableKind.WIND_DFIG, ERCOT_EXISTING_WIND_MW),)
    return SystemCase(units=tuple(units), renewables=wind,
                      p_load=ERCOT_TOTAL_GENERATION_MW, d_load=d_load)
