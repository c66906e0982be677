"""Compiled inner loops for long runs.

These mirror the reference step functions in ``dynamics`` operation for
operation so that trajectories agree bit for bit; ``tests/test_dynamics.py``
holds them to that.
"""

import numpy as np
from numba import njit

COCA = 0
CODA = 1
MARTINS = 2

STOP_NONE = 0
STOP_CONVERGED = 1
STOP_OSCILLATING = 2

# audit counter slots
A_TRICHOTOMY = 0
A_STEP_LAW = 1
A_CLOSURE = 2
A_CHECKED = 3

_ONE_BELOW = np.nextafter(1.0, 0.0)
_TINY = np.nextafter(0.0, 1.0)


@njit(cache=True)
def _quantize(p, prev):
    if p < 0.5:
        return 0
    if p > 0.5:
        return 1
    return prev


@njit(cache=True, inline="always")
def _audit_coda(indptr, indices, p, q, p_new, q_new, tol, counts, plus_buf, recount):
    n = p.shape[0]
    if recount:
        for i in range(n):
            c = 0
            for e in range(indptr[i], indptr[i + 1]):
                c += q[indices[e]]
            plus_buf[i] = c
    bad_tri = 0
    bad_law = 0
    bad_closure = 0
    checked = 0
    for i in range(n):
        b = p_new[i]
        if not (0.0 < b < 1.0):
            bad_closure += 1
        deg = indptr[i + 1] - indptr[i]
        plus = plus_buf[i]
        minus = deg - plus
        if q[i] == 0 and minus >= plus and q_new[i] != 0:
            bad_law += 1
        if q[i] == 1 and plus >= minus and q_new[i] != 1:
            bad_law += 1
        if deg == 0:
            continue
        checked += 1
        r = plus / deg
        a = p[i]
        if abs(a - r) <= tol:
            ok = abs(b - a) <= tol and abs(b - r) <= tol
        elif a < r:
            ok = a <= b + tol and b <= r + tol
        else:
            ok = a + tol >= b and b + tol >= r
        if not ok:
            bad_tri += 1
    counts[A_TRICHOTOMY] += bad_tri
    counts[A_STEP_LAW] += bad_law
    counts[A_CLOSURE] += bad_closure
    counts[A_CHECKED] += checked


@njit(cache=True)
def advance(
    model, indptr, indices, f_up, p, q, q_prev, have_prev, nsteps, tol, window, osc_window,
    counters, last_dp, first_flip, last_flip, k0, audit, audit_tol, audit_counts,
):
    """Advance up to ``nsteps`` synchronous steps in place.

    ``counters`` holds [unchanged-q run, alternation run]; ``last_dp`` holds the last
    max |dp|. Returns (steps taken, stop code, have_prev).
    """
    n = p.shape[0]
    p_new = np.empty(n)
    q_new = np.empty(n, dtype=np.int8)
    # r only moves when some action does; recount lazily
    ratio = np.empty(n)
    audit_plus = np.empty(n, dtype=np.int64)
    q_moved = True
    f_down = 1.0 / f_up if f_up > 0 else 0.0
    for s in range(nsteps):
        if model == CODA and q_moved:
            for i in range(n):
                lo = indptr[i]
                hi = indptr[i + 1]
                if hi > lo:
                    plus = 0.0
                    for e in range(lo, hi):
                        plus += q[indices[e]]
                    ratio[i] = plus / (hi - lo)
        for i in range(n):
            lo = indptr[i]
            hi = indptr[i + 1]
            deg = hi - lo
            pi = p[i]
            if deg == 0:
                p_new[i] = pi
            elif model == CODA:
                p_new[i] = pi + pi * (1.0 - pi) * (ratio[i] - pi)
            elif model == COCA:
                acc = 0.0
                for e in range(lo, hi):
                    acc += p[indices[e]] - pi
                p_new[i] = pi + pi * (1.0 - pi) / deg * acc
            else:
                odds = pi / (1.0 - pi)
                for e in range(lo, hi):
                    if q[indices[e]] == 1:
                        odds = odds * f_up
                    else:
                        odds = odds * f_down
                v = odds / (1.0 + odds)
                if v >= 1.0:
                    v = _ONE_BELOW
                elif v <= 0.0:
                    v = _TINY
                p_new[i] = v
        same = True
        alt = have_prev
        dp = 0.0
        k = k0 + s + 1
        for i in range(n):
            qi = _quantize(p_new[i], q[i])
            q_new[i] = qi
            if qi != q[i]:
                same = False
                if first_flip[i] < 0:
                    first_flip[i] = k
                last_flip[i] = k
            if qi != q_prev[i]:
                alt = False
            d = abs(p_new[i] - p[i])
            if d > dp:
                dp = d
        if same:
            alt = False
        if audit and model == CODA:
            _audit_coda(indptr, indices, p, q, p_new, q_new, audit_tol, audit_counts, audit_plus, q_moved)
        counters[0] = counters[0] + 1 if same else 0
        counters[1] = counters[1] + 1 if alt else 0
        last_dp[0] = dp
        for i in range(n):
            q_prev[i] = q[i]
            q[i] = q_new[i]
            p[i] = p_new[i]
        have_prev = True
        q_moved = not same
        if dp < tol and counters[0] >= window:
            return s + 1, STOP_CONVERGED, have_prev
        if counters[1] >= osc_window:
            return s + 1, STOP_OSCILLATING, have_prev
    return nsteps, STOP_NONE, have_prev
