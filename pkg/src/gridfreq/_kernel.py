"""Compiled fixed-step RK4 loop for the centre-of-inertia swing model.

State vector layout: ``[dw, v_0..v_{n-1}, x_0..x_{n-1}]`` where ``dw`` is the
per-unit speed deviation and ``v``/``x`` are the TGOV1 lag and lead-lag
states of each unit (machine base).  Only units flagged ``active`` integrate
their governor; the others hold mechanical power.
"""

import numpy as np
from numba import njit

OK = 0
COLLAPSE = 1
NOT_FINITE = 2


@njit(cache=True, nogil=True)
def ufls_update(t, f, thr, delay, below_since, trip_time, fired):
    """Advance the UFLS relay timers by one sample.

    ``below_since``/``trip_time`` hold NaN while a stage is idle/untripped.
    Sets ``fired[i]`` for stages that trip on this sample; returns their count.
    """
    count = 0
    for i in range(thr.shape[0]):
        fired[i] = False
        if not np.isnan(trip_time[i]):
            continue
        if f < thr[i]:
            if np.isnan(below_since[i]):
                below_since[i] = t
            if t - below_since[i] >= delay[i] - 1e-9:
                trip_time[i] = t
                fired[i] = True
                count += 1
        else:
            below_since[i] = np.nan
    return count


@njit(cache=True, nogil=True)
def _rhs(y, out, ev_on, dp_event, trip_idx, w, active, r, t1, a, t3, vmin,
         vmax, d_t, p0, pm0, two_h_pre, two_h_post, shed_pu, load_pu, d_load):
    n = w.shape[0]
    dw = y[0]
    dpm = 0.0
    for i in range(n):
        if not active[i]:
            out[1 + i] = 0.0
            out[1 + n + i] = 0.0
            continue
        v = y[1 + i]
        if v > vmax[i]:
            v = vmax[i]
        elif v < vmin[i]:
            v = vmin[i]
        x = y[1 + n + i]
        u = p0[i] - dw / r[i]
        dv = (u - v) / t1[i]
        if (v >= vmax[i] and dv > 0.0) or (v <= vmin[i] and dv < 0.0):
            dv = 0.0
        out[1 + i] = dv
        out[1 + n + i] = ((1.0 - a[i]) * v - x) / t3[i]
        if ev_on and i == trip_idx:
            continue
        dpm += (a[i] * v + x - d_t[i] * dw - pm0[i]) * w[i]
    dp = dpm + shed_pu - d_load * load_pu * dw
    two_h = two_h_pre
    if ev_on:
        dp -= dp_event
        two_h = two_h_post
    out[0] = dp / two_h


@njit(cache=True, nogil=True)
def integrate(dt, n_steps, f0, k_event, dp_event, trip_idx, w, h, active, r,
              t1, a, t3, vmin, vmax, d_t, p0, load_pu, d_load, ufls_thr,
              ufls_frac, ufls_delay, record_pm, f_collapse):
    n = w.shape[0]
    n_st = ufls_thr.shape[0]
    m = 1 + 2 * n

    pm0 = np.empty(n)
    y = np.zeros(m)
    for i in range(n):
        x0 = (1.0 - a[i]) * p0[i]
        y[1 + i] = p0[i]
        y[1 + n + i] = x0
        pm0[i] = a[i] * p0[i] + x0

    two_h_pre = 0.0
    for i in range(n):
        two_h_pre += 2.0 * h[i] * w[i]
    two_h_post = two_h_pre
    if trip_idx >= 0:
        two_h_post -= 2.0 * h[trip_idx] * w[trip_idx]

    freq = np.full(n_steps + 1, np.nan)
    freq[0] = f0
    n_rec = n_steps + 1 if record_pm else 0
    pm = np.full((n_rec, n), np.nan)
    if record_pm:
        for i in range(n):
            pm[0, i] = p0[i]

    below_since = np.full(n_st, np.nan)
    trip_time = np.full(n_st, np.nan)
    shed_mw_pu = np.zeros(n_st)
    fired = np.zeros(n_st, dtype=np.bool_)
    shed_pu = 0.0
    load_now = load_pu

    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    saturated = False
    status = OK
    last = n_steps

    for k in range(n_steps):
        ev_on = k >= k_event
        for i in range(n):
            if active[i] and not (ev_on and i == trip_idx):
                v = y[1 + i]
                u = p0[i] - y[0] / r[i]
                if (v >= vmax[i] and u > vmax[i]) or (v <= vmin[i] and u < vmin[i]):
                    saturated = True

        _rhs(y, k1, ev_on, dp_event, trip_idx, w, active, r, t1, a, t3, vmin,
             vmax, d_t, p0, pm0, two_h_pre, two_h_post, shed_pu, load_now, d_load)
        for j in range(m):
            tmp[j] = y[j] + 0.5 * dt * k1[j]
        _rhs(tmp, k2, ev_on, dp_event, trip_idx, w, active, r, t1, a, t3, vmin,
             vmax, d_t, p0, pm0, two_h_pre, two_h_post, shed_pu, load_now, d_load)
        for j in range(m):
            tmp[j] = y[j] + 0.5 * dt * k2[j]
        _rhs(tmp, k3, ev_on, dp_event, trip_idx, w, active, r, t1, a, t3, vmin,
             vmax, d_t, p0, pm0, two_h_pre, two_h_post, shed_pu, load_now, d_load)
        for j in range(m):
            tmp[j] = y[j] + dt * k3[j]
        _rhs(tmp, k4, ev_on, dp_event, trip_idx, w, active, r, t1, a, t3, vmin,
             vmax, d_t, p0, pm0, two_h_pre, two_h_post, shed_pu, load_now, d_load)
        for j in range(m):
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
        for i in range(n):
            if y[1 + i] > vmax[i]:
                y[1 + i] = vmax[i]
                saturated = True
            elif y[1 + i] < vmin[i]:
                y[1 + i] = vmin[i]
                saturated = True

        f = f0 * (1.0 + y[0])
        freq[k + 1] = f
        if record_pm:
            for i in range(n):
                if ev_on and i == trip_idx:
                    pm[k + 1, i] = 0.0
                elif active[i]:
                    pm[k + 1, i] = a[i] * y[1 + i] + y[1 + n + i] - d_t[i] * y[0]
                else:
                    pm[k + 1, i] = p0[i]
        if not np.isfinite(f):
            status = NOT_FINITE
            last = k + 1
            break
        if f < f_collapse:
            status = COLLAPSE
            last = k + 1
            break

        if n_st > 0 and ufls_update((k + 1) * dt, f, ufls_thr, ufls_delay,
                                    below_since, trip_time, fired) > 0:
            for i in range(n_st):
                if fired[i]:
                    amount = ufls_frac[i] * load_now
                    shed_mw_pu[i] = amount
                    shed_pu += amount
                    load_now -= amount

    return freq, pm, status, last, saturated, trip_time, shed_mw_pu


@njit(cache=True, nogil=True)
def ufls_scan(t, f, thr, delay):
    """Offline relay evaluation over a whole trace; returns stage trip times."""
    n_st = thr.shape[0]
    below_since = np.full(n_st, np.nan)
    trip_time = np.full(n_st, np.nan)
    fired = np.zeros(n_st, dtype=np.bool_)
    for k in range(t.shape[0]):
        ufls_update(t[k], f[k], thr, delay, below_since, trip_time, fired)
    return trip_time
