"""TGOV1 steam turbine-governor block.

Two-state realization: a governor lag ``v`` (valve position, limited to
``[v_min, v_max]``) feeding a reheater lead-lag whose internal state is
``x_ll``.  All quantities are per unit on the machine base and speed
deviation ``dw`` is per unit of nominal frequency.

    u      = p_ref - dw / r
    dv/dt  = (u - v) / t1            (gated at the valve limits)
    y      = (t2/t3) * v + x_ll
    dx/dt  = ((1 - t2/t3) * v - x_ll) / t3
    p_mech = y - d_t * dw
"""

from __future__ import annotations

from dataclasses import dataclass


class GovernorInitError(ValueError):
    """Initial loading lies outside the valve limits."""


@dataclass(frozen=True)
class Tgov1Params:
    r: float = 0.05       # droop, pu speed per pu power
    t1_s: float = 0.5     # governor time constant
    t2_s: float = 2.1     # lead time constant
    t3_s: float = 7.0     # reheater time constant
    v_max: float = 1.0
    v_min: float = 0.0
    d_t: float = 0.0      # turbine damping

    @property
    def hp_fraction(self) -> float:
        """Share of turbine power developed ahead of the reheater (t2/t3)."""
        return self.t2_s / self.t3_s

    def violations(self) -> list[str]:
        out = []
        if not self.r > 0:
            out.append("droop r must be positive")
        if not self.t1_s > 0:
            out.append("t1_s must be positive")
        if not self.t3_s > 0:
            out.append("t3_s must be positive")
        if not 0 <= self.t2_s <= self.t3_s:
            out.append("t2_s must satisfy 0 <= t2_s <= t3_s")
        if not self.v_min < self.v_max:
            out.append("v_min must be below v_max")
        if not self.d_t >= 0:
            out.append("d_t must be non-negative")
        return out


@dataclass(frozen=True)
class GovernorState:
    v: float
    x_ll: float


def tgov1_init(params: Tgov1Params, p0: float) -> GovernorState:
    """Equilibrium state at zero speed deviation producing ``p_mech == p0``."""
    if not params.v_min <= p0 <= params.v_max:
        raise GovernorInitError(
            f"initial loading {p0!r} pu outside valve limits "
            f"[{params.v_min}, {params.v_max}]")
    a = params.t2_s / params.t3_s
    return GovernorState(v=p0, x_ll=(1.0 - a) * p0)


def tgov1_step_output(state: GovernorState, params: Tgov1Params, p_ref: float,
                      dw: float) -> tuple[float, float, float]:
    """Return ``(dv_dt, dx_ll_dt, p_mech)`` for the current state.

    The valve state is read through the limits, and its derivative is
    zeroed when it would push further into a limit it already sits on.
    """
    a = params.t2_s / params.t3_s
    v = min(max(state.v, params.v_min), params.v_max)
    u = p_ref - dw / params.r
    dv = (u - v) / params.t1_s
    if (v >= params.v_max and dv > 0.0) or (v <= params.v_min and dv < 0.0):
        dv = 0.0
    dx = ((1.0 - a) * v - state.x_ll) / params.t3_s
    p_mech = a * v + state.x_ll - params.d_t * dw
    return dv, dx, p_mech


def tgov1_steady_state(params: Tgov1Params, p_ref: float, dw: float) -> float:
    """DC output of the block for a constant speed deviation."""
    v = min(max(p_ref - dw / params.r, params.v_min), params.v_max)
    return v - params.d_t * dw
