"""Interval arithmetic kernels behind the reservation tables and slot search.

Every scheduling decision funnels into a handful of queries over per-resource
interval arrays (sorted by start): peak occupancy of a window, earliest start
that fits a new interval under a capacity bound, and the earliest aligned
four-leg chain across four tables.  These run millions of times per benchmark,
so they are compiled with numba when available.

Set ``FMSCHED_NO_NUMBA=1`` to force the plain NumPy/Python path (the same
source, un-jitted).  ``NUMBA_ENABLED`` reports which path is active;
``benchmarks/bench_kernels.py`` compares the two.
"""

from __future__ import annotations

import os

import numpy as np


def _numba_disabled() -> bool:
    flag = os.environ.get("FMSCHED_NO_NUMBA", "").strip().lower()
    return flag not in ("", "0", "false", "no")


NUMBA_ENABLED = False
if not _numba_disabled():
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        pass

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        # identity decorator so the module works without numba
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


@njit(cache=True)
def max_overlap(starts, ends, lo, hi):
    """Peak number of intervals simultaneously covering an instant in [lo, hi).

    ``starts`` must be sorted ascending; intervals are half-open.
    """
    n = starts.shape[0]
    k = 0
    for i in range(n):
        if starts[i] >= hi:
            break
        if ends[i] > lo:
            k += 1
    if k == 0:
        return 0
    ss = np.empty(k, np.int64)
    ee = np.empty(k, np.int64)
    j = 0
    for i in range(n):
        if starts[i] >= hi:
            break
        if ends[i] > lo:
            ss[j] = starts[i] if starts[i] > lo else lo
            ee[j] = ends[i]
            j += 1
    ss.sort()
    ee.sort()
    best = 0
    cur = 0
    a = 0
    b = 0
    # sweep; at equal instants the closing end wins (half-open intervals)
    while a < k:
        if ss[a] < ee[b]:
            cur += 1
            if cur > best:
                best = cur
            a += 1
        else:
            cur -= 1
            b += 1
    return best


@njit(cache=True)
def busy_sum(starts, ends, lo, hi):
    """Total interval length overlapping the window [lo, hi)."""
    total = 0
    for i in range(starts.shape[0]):
        if starts[i] >= hi:
            break
        s = starts[i] if starts[i] > lo else lo
        e = ends[i] if ends[i] < hi else hi
        if e > s:
            total += e - s
    return total


@njit(cache=True)
def earliest_fit(starts, ends, cap, not_before, length, latest_start):
    """Smallest s in [not_before, latest_start] where [s, s+length) still fits.

    "Fits" means adding one more interval keeps occupancy <= cap everywhere.
    Candidate starts are not_before and the ends of existing intervals, which
    is sufficient: occupancy can only drop at an interval end.  Returns -1
    when nothing fits.
    """
    if latest_start < not_before:
        return np.int64(-1)
    if max_overlap(starts, ends, not_before, not_before + length) < cap:
        return np.int64(not_before)
    n = starts.shape[0]
    k = 0
    for i in range(n):
        e = ends[i]
        if e > not_before and e <= latest_start:
            k += 1
    if k == 0:
        return np.int64(-1)
    cand = np.empty(k, np.int64)
    j = 0
    for i in range(n):
        e = ends[i]
        if e > not_before and e <= latest_start:
            cand[j] = e
            j += 1
    cand.sort()
    prev = np.int64(-1)
    for j in range(k):
        c = cand[j]
        if c == prev:
            continue
        prev = c
        if max_overlap(starts, ends, c, c + length) < cap:
            return c
    return np.int64(-1)


@njit(cache=True)
def chain_fit(
    m_starts, m_ends, m_cap,
    c_starts, c_ends, c_cap,
    k_starts, k_ends, k_cap,
    b_starts, b_ends, b_cap,
    t_main, t_station, duration, dwell,
    not_before, deadline,
):
    """Earliest main-transport start for an aligned four-leg chain.

    Legs, all offset from the returned start s: main transport [s, s+t_main),
    station transport [s+t_main, s+t_main+t_station), machining for
    ``duration``, buffering for ``dwell``.  Machining must end by ``deadline``.
    Each leg must fit its table (m = main conveyor, c = station conveyor,
    k = machine, b = buffer).  Returns -1 when no chain fits.

    Skip-ahead search: whenever a leg is blocked at the current s, jump to the
    earliest position where that leg alone fits; the jump can never pass over
    a jointly-feasible start.
    """
    lead = t_main + t_station
    latest = deadline - lead - duration
    if latest < not_before:
        return np.int64(-1)
    s = np.int64(not_before)
    while s <= latest:
        if max_overlap(m_starts, m_ends, s, s + t_main) >= m_cap:
            ns = earliest_fit(m_starts, m_ends, m_cap, s + 1, t_main, latest)
            if ns < 0:
                return np.int64(-1)
            s = ns
            continue
        ls = s + t_main
        if max_overlap(c_starts, c_ends, ls, ls + t_station) >= c_cap:
            ns = earliest_fit(c_starts, c_ends, c_cap, ls + 1, t_station, latest + t_main)
            if ns < 0:
                return np.int64(-1)
            s = ns - t_main
            continue
        ls = s + lead
        if max_overlap(k_starts, k_ends, ls, ls + duration) >= k_cap:
            ns = earliest_fit(k_starts, k_ends, k_cap, ls + 1, duration, latest + lead)
            if ns < 0:
                return np.int64(-1)
            s = ns - lead
            continue
        ls = s + lead + duration
        if max_overlap(b_starts, b_ends, ls, ls + dwell) >= b_cap:
            ns = earliest_fit(b_starts, b_ends, b_cap, ls + 1, dwell, latest + lead + duration)
            if ns < 0:
                return np.int64(-1)
            s = ns - lead - duration
            continue
        return s
    return np.int64(-1)


def python_impl(func):
    """Uncompiled version of a kernel (for benchmarks and cross-checks)."""
    return getattr(func, "py_func", func)
