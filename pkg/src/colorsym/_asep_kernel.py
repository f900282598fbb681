"""Compiled ensemble kernel for colored ASEP on a finite window.

Bonds are indexed by their left site ``b`` (sites ``b, b+1`` of the window
array).  Only bonds carrying two different colors can change the state, so
they are kept in two indexable sets: increasing pairs (candidate rate
``r_max``) and decreasing pairs (candidate rate ``q * r_max``).  A candidate
on bond ``b`` at time ``t`` is accepted with probability ``r(z, t) / r_max``
(thinning), which samples the time-inhomogeneous Poisson clocks exactly.

Random draws per replica, in order: one uniform per pre-swap; per candidate
event one uniform for the waiting time, one for the bond, and one for the
acceptance unless the field is constant; one uniform per post-swap.
"""

import math

import numba as nb
import numpy as np

from .rng import uniform

RATE_SPLIT_SINUSOID = 0
RATE_PIECEWISE_TIME = 1
NO_POSITION = np.iinfo(np.int64).min


@nb.njit(cache=True)
def rate_at(code, params, z, t):
    if code == RATE_SPLIT_SINUSOID:
        # z0, base_left, amp_left, base_right, amp_right, freq, phase
        s = math.sin(params[5] * t + params[6])
        if z < params[0]:
            return params[1] + params[2] * s
        return params[3] + params[4] * s
    # z0, m, breakpoints[m], left[m+1], right[m+1]
    m = int(params[1])
    k = 0
    while k < m and t >= params[2 + k]:
        k += 1
    if z < params[0]:
        return params[2 + m + k]
    return params[3 + 2 * m + k]


@nb.njit(cache=True)
def _refresh_range(c, b0, b1, kind, inc, inc_pos, dec, dec_pos, counts):
    """Re-classify bonds ``b0 <= b < b1``; counts = [n_inc, n_dec]."""
    for b in range(b0, b1):
        new = 0
        if c[b] < c[b + 1]:
            new = 1
        elif c[b] > c[b + 1]:
            new = 2
        old = kind[b]
        if new == old:
            continue
        if old == 1:
            k = inc_pos[b]
            last = inc[counts[0] - 1]
            inc[k] = last
            inc_pos[last] = k
            counts[0] -= 1
        elif old == 2:
            k = dec_pos[b]
            last = dec[counts[1] - 1]
            dec[k] = last
            dec_pos[last] = k
            counts[1] -= 1
        if new == 1:
            inc_pos[b] = counts[0]
            inc[counts[0]] = b
            counts[0] += 1
        elif new == 2:
            dec_pos[b] = counts[1]
            dec[counts[1]] = b
            counts[1] += 1
        kind[b] = new


@nb.njit(cache=True)
def _discrete_swaps(c, bonds, xs, q, s, lo, hi, check):
    """Apply W_{b,x} in order; returns False if a change touched the margin."""
    ok = True
    for j in range(bonds.shape[0]):
        b = bonds[j]
        u = uniform(s)
        if c[b] < c[b + 1]:
            p = xs[j]
        elif c[b] > c[b + 1]:
            p = q * xs[j]
        else:
            p = 0.0
        if u < p:
            tmp = c[b]
            c[b] = c[b + 1]
            c[b + 1] = tmp
            if check and (b < lo or b + 1 > hi):
                ok = False
    return ok


@nb.njit(cache=True)
def run_batch(init, zmin, pre_b, pre_x, post_b, post_x, q, t_end,
              rcode, rparams, r_max, constant, tsign, toff,
              infinite, margin, states, obs_lo, obs_hi, track_color, n_track,
              out_obs, out_track, out_flag, out_swaps):
    n = init.shape[0]
    nbond = n - 1
    lo = margin + 1          # changes must stay within sites [lo, hi]
    hi = n - 2 - margin
    c = np.empty(n, np.int64)
    kind = np.zeros(nbond, np.int8)
    inc = np.empty(nbond, np.int64)
    dec = np.empty(nbond, np.int64)
    inc_pos = np.full(nbond, -1, np.int64)
    dec_pos = np.full(nbond, -1, np.int64)
    counts = np.zeros(2, np.int64)
    for r in range(states.shape[0]):
        s = states[r]
        c[:] = init
        ok = _discrete_swaps(c, pre_b, pre_x, q, s, lo, hi, infinite)
        counts[0] = 0
        counts[1] = 0
        kind[:] = 0
        _refresh_range(c, 0, nbond, kind, inc, inc_pos, dec, dec_pos, counts)
        t = 0.0
        swaps = 0
        while ok:
            n_inc = counts[0]
            n_dec = counts[1]
            w = n_inc + q * n_dec
            if w <= 0.0:
                break
            t += -math.log(1.0 - uniform(s)) / (r_max * w)
            if t > t_end:
                break
            v = uniform(s) * w
            if v < n_inc:
                b = inc[int(v)]
            else:
                k = int((v - n_inc) / q)
                if k >= n_dec:
                    k = n_dec - 1
                b = dec[k]
            if not constant:
                if uniform(s) * r_max >= rate_at(rcode, rparams, zmin + b, tsign * t + toff):
                    continue
            tmp = c[b]
            c[b] = c[b + 1]
            c[b + 1] = tmp
            swaps += 1
            if infinite and (b < lo or b + 1 > hi):
                ok = False
                break
            _refresh_range(c, max(b - 1, 0), min(b + 2, nbond), kind, inc, inc_pos, dec, dec_pos, counts)
        if ok:
            ok = _discrete_swaps(c, post_b, post_x, q, s, lo, hi, infinite)
        out_flag[r] = not ok
        out_swaps[r] = swaps
        for i in range(obs_hi - obs_lo):
            out_obs[r, i] = c[obs_lo + i]
        k = 0
        for i in range(n):
            if k >= n_track:
                break
            if c[i] == track_color:
                out_track[r, k] = zmin + i
                k += 1
        while k < n_track:
            out_track[r, k] = NO_POSITION
            k += 1
