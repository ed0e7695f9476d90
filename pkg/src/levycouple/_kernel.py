"""Compiled inner loop of the coupled jump simulation.

State layout (float64 array ``st``):
  0 t, 1 coupled flag, 2 coupling time, 3 Euler grid index, 4 next sample index,
  5 blow-up flag, 6 max | |Rv| - |v| | over reflected jumps.
"""

import numpy as np
from numba import njit

DRIFT_ZERO = 0
DRIFT_LINEAR = 1
DRIFT_DOUBLE_WELL = 2

MEAS_STABLE = 0
MEAS_SHELL = 1
MEAS_TABLE = 2

COALESCE = 0
REFLECT = 1
SYNC_LARGE = 2
SYNC_COUPLED = 3


@njit(cache=True, nogil=True)
def _drift(x, code, prm, out):
    d = x.shape[0]
    if code == DRIFT_LINEAR:
        for i in range(d):
            s = 0.0
            for j in range(d):
                s -= prm[i * d + j] * x[j]
            out[i] = s
    elif code == DRIFT_DOUBLE_WELL:
        for i in range(d):
            out[i] = x[i] - x[i] * x[i] * x[i]
    else:
        for i in range(d):
            out[i] = 0.0


@njit(cache=True, nogil=True)
def _radial(r, code, mprm, tr, tq):
    if code == MEAS_STABLE:
        return r ** (-mprm[0] - mprm[1])
    if code == MEAS_SHELL:
        return 1.0 if (r >= mprm[1] / mprm[2] and r <= mprm[1]) else 0.0
    if r < tr[0] or r > tr[tr.shape[0] - 1]:
        return 0.0
    return np.interp(r, tr, tq)


@njit(cache=True, nogil=True)
def _norm(v):
    s = 0.0
    for i in range(v.shape[0]):
        s += v[i] * v[i]
    return np.sqrt(s)


@njit(cache=True, nogil=True)
def _rho(v, z, m, eta, code, mprm, tr, tq):
    nz = _norm(z)
    if nz == 0.0:
        return 1.0
    nv = _norm(v)
    qv = _radial(nv, code, mprm, tr, tq) if nv > eta else 0.0
    if qv == 0.0:
        return 1.0
    nw = _norm(v + z)
    if nw > m:
        return 0.0
    qw = _radial(nw, code, mprm, tr, tq) if nw > eta else 0.0
    return min(qv, qw) / qv


@njit(cache=True, nogil=True)
def _euler(x, y, st, t_target, h, dcode, dprm, bx, by, bound):
    coupled = st[1] > 0.5
    d = x.shape[0]
    while st[0] < t_target:
        k = st[3]
        g = (k + 1.0) * h
        end = g if g < t_target else t_target
        dt = end - st[0]
        _drift(x, dcode, dprm, bx)
        if not coupled:
            _drift(y, dcode, dprm, by)
        for i in range(d):
            x[i] += dt * bx[i]
            if coupled:
                y[i] = x[i]
            else:
                y[i] += dt * by[i]
        st[0] = end
        if end >= g:
            st[3] = k + 1.0
        nx = _norm(x)
        if not (nx < bound) or not (_norm(y) < bound):
            st[5] = 1.0
            return


@njit(cache=True, nogil=True)
def advance(x, y, st, t_stop, times, jumps, us, sample_t, sx, sy,
            h, dcode, dprm, mcode, mprm, tr, tq, m, eta, bound,
            decisions, counts, rec, xj, yj, stop_when_coupled):
    """Run the pair from ``st[0]`` to ``t_stop`` through the given jumps.

    Returns 1 if the caller may stop early (coupled after the last sample
    time with ``stop_when_coupled``), 2 on blow-up, 0 otherwise.
    """
    d = x.shape[0]
    bx = np.empty(d)
    by = np.empty(d)
    rv = np.empty(d)
    nsamp = sample_t.shape[0]
    j = 0
    njump = times.shape[0]
    while True:
        si = int(st[4])
        t_next_s = sample_t[si] if si < nsamp else np.inf
        t_next_j = times[j] if j < njump else np.inf
        t_ev = min(t_next_s, t_next_j, t_stop)
        _euler(x, y, st, t_ev, h, dcode, dprm, bx, by, bound)
        if st[5] > 0.5:
            return 2
        if t_next_s <= t_ev and t_next_s <= t_next_j:
            for i in range(d):
                sx[si, i] = x[i]
                sy[si, i] = y[i]
            st[4] = si + 1.0
            continue
        if t_next_j <= t_ev:
            v = jumps[j]
            if st[1] > 0.5:
                for i in range(d):
                    x[i] += v[i]
                    y[i] = x[i]
                dec = SYNC_COUPLED
            elif _norm(v) > m:
                for i in range(d):
                    x[i] += v[i]
                    y[i] += v[i]
                dec = SYNC_LARGE
            else:
                z = x - y
                r = _rho(v, z, m, eta, mcode, mprm, tr, tq)
                if us[j] < r:
                    for i in range(d):
                        x[i] += v[i]
                        y[i] = x[i]
                    st[1] = 1.0
                    st[2] = times[j]
                    dec = COALESCE
                else:
                    nz = _norm(z)
                    ev = 0.0
                    for i in range(d):
                        ev += z[i] * v[i]
                    ev /= nz * nz
                    for i in range(d):
                        rv[i] = v[i] - 2.0 * ev * z[i]
                    err = abs(_norm(rv) - _norm(v))
                    if err > st[6]:
                        st[6] = err
                    for i in range(d):
                        x[i] += v[i]
                        y[i] += rv[i]
                    dec = REFLECT
            decisions[j] = dec
            counts[dec] += 1
            if rec:
                for i in range(d):
                    xj[j, i] = x[i]
                    yj[j, i] = y[i]
            if not (_norm(x) < bound) or not (_norm(y) < bound):
                st[5] = 1.0
                return 2
            j += 1
            continue
        # reached t_stop
        break
    if stop_when_coupled and st[1] > 0.5 and int(st[4]) >= nsamp:
        return 1
    return 0
