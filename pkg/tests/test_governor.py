import numpy as np
import pytest
from scipy import signal

from gridfreq.governor import (GovernorInitError, GovernorState, Tgov1Params, tgov1_init,
                               tgov1_steady_state, tgov1_step_output)


def _integrate(params, state, p_ref, dw, t_end, dt=0.01):
    """Plain RK4 over the block outputs with constant speed deviation."""
    v, x = state.v, state.x_ll

    def f(v, x):
        dv, dx, _ = tgov1_step_output(GovernorState(v, x), params, p_ref, dw)
        return dv, dx

    for _ in range(int(round(t_end / dt))):
        a1 = f(v, x)
        a2 = f(v + 0.5 * dt * a1[0], x + 0.5 * dt * a1[1])
        a3 = f(v + 0.5 * dt * a2[0], x + 0.5 * dt * a2[1])
        a4 = f(v + dt * a3[0], x + dt * a3[1])
        v += dt / 6 * (a1[0] + 2 * a2[0] + 2 * a3[0] + a4[0])
        x += dt / 6 * (a1[1] + 2 * a2[1] + 2 * a3[1] + a4[1])
        v = min(max(v, params.v_min), params.v_max)
    return GovernorState(v, x), tgov1_step_output(GovernorState(v, x), params, p_ref, dw)[2]


@pytest.mark.parametrize("p0", [0.0, 0.35, 0.8, 1.0])
def test_init_is_exact_equilibrium(p0):
    params = Tgov1Params()
    state = tgov1_init(params, p0)
    dv, dx, pm = tgov1_step_output(state, params, p0, 0.0)
    assert (dv, dx) == (0.0, 0.0)
    assert pm == pytest.approx(p0, abs=1e-15)
    assert state.v == p0
    assert state.x_ll == pytest.approx(p0 * (1 - 2.1 / 7.0))


def test_init_outside_limits_fails():
    with pytest.raises(GovernorInitError):
        tgov1_init(Tgov1Params(), 1.01)
    with pytest.raises(GovernorInitError):
        tgov1_init(Tgov1Params(), -0.01)


def test_valve_step_splits_by_hp_fraction():
    params = Tgov1Params(t2_s=2.1, t3_s=7.0)
    s0 = tgov1_init(params, 0.5)
    jump = 0.2
    pm0 = tgov1_step_output(s0, params, 0.5, 0.0)[2]
    pm1 = tgov1_step_output(GovernorState(s0.v + jump, s0.x_ll), params, 0.5, 0.0)[2]
    assert (pm1 - pm0) / jump == pytest.approx(0.3, abs=1e-12)


def test_lead_lag_matches_transfer_function():
    """State-space realization against (1 + T2 s) / ((1 + T1 s)(1 + T3 s)) from scipy."""
    params = Tgov1Params(r=0.05, t1_s=0.5, t2_s=2.1, t3_s=7.0, v_max=10.0, v_min=-10.0)
    dw = -0.001
    t = np.arange(0, 20.0001, 0.01)
    tf = signal.lti([params.t2_s, 1.0], np.polymul([params.t1_s, 1.0], [params.t3_s, 1.0]))
    _, y = signal.step(tf, T=t)
    expected = 0.5 - dw / params.r * y
    state = tgov1_init(params, 0.5)
    for ti in (5.0, 20.0):
        _, pm = _integrate(params, state, 0.5, dw, ti)
        assert pm == pytest.approx(expected[int(round(ti / 0.01))], abs=1e-7)


def test_dc_gain_closed_form():
    params = Tgov1Params(r=0.05, v_max=10.0, v_min=-10.0)
    assert tgov1_steady_state(params, 0.8, -0.001) == pytest.approx(0.82)
    _, pm = _integrate(params, tgov1_init(params, 0.8), 0.8, -0.001, 150.0)
    assert pm == pytest.approx(0.82, abs=1e-6)


def test_steady_state_examples():
    params = Tgov1Params()
    assert tgov1_steady_state(params, 0.7, 0.0) == 0.7
    assert tgov1_steady_state(Tgov1Params(v_max=0.95), 0.9, -0.01) == 0.95


def test_anti_windup_gates_only_toward_limit():
    params = Tgov1Params(v_max=1.0)
    pinned = GovernorState(1.0, 0.7)
    dv_push, _, _ = tgov1_step_output(pinned, params, 1.0, -0.01)
    dv_release, _, _ = tgov1_step_output(pinned, params, 1.0, 0.01)
    assert dv_push == 0.0
    assert dv_release < 0.0


def test_valve_never_leaves_limits_under_large_deviation():
    params = Tgov1Params(v_max=1.0, v_min=0.0)
    s, _ = _integrate(params, tgov1_init(params, 0.9), 0.9, -0.05, 10.0)
    assert s.v == 1.0
    s, _ = _integrate(params, tgov1_init(params, 0.1), 0.1, +0.05, 10.0)
    assert s.v == 0.0


@pytest.mark.parametrize("seed", range(4))
def test_superposition_below_limits(seed):
    rng = np.random.default_rng(seed)
    t3 = rng.uniform(2, 10)
    params = Tgov1Params(r=rng.uniform(0.03, 0.08), t1_s=rng.uniform(0.1, 1.0),
                         t2_s=rng.uniform(0, t3), t3_s=t3, v_max=5.0, v_min=-5.0)
    st = tgov1_init(params, 0.5)
    d1, d2 = -0.0007, 0.0003
    _, p1 = _integrate(params, st, 0.5, d1, 3.0)
    _, p2 = _integrate(params, st, 0.5, d2, 3.0)
    _, p12 = _integrate(params, st, 0.5, d1 + d2, 3.0)
    assert (p12 - 0.5) == pytest.approx((p1 - 0.5) + (p2 - 0.5), abs=1e-9)
