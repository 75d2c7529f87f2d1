"""Kernel correctness against tick-by-tick brute force, on both backends."""

import numpy as np

from fmsched import kernels
from fmsched.kernels import python_impl

from conftest import brute_earliest, brute_max_overlap, rng


def random_table(gen, n, span=120, max_len=25):
    starts = np.sort(gen.integers(0, span, size=n).astype(np.int64))
    lengths = gen.integers(1, max_len, size=n).astype(np.int64)
    return starts, starts + lengths


def test_max_overlap_matches_brute_force():
    gen = rng(1)
    impls = [kernels.max_overlap, python_impl(kernels.max_overlap)]
    for _ in range(300):
        starts, ends = random_table(gen, int(gen.integers(0, 12)))
        lo = int(gen.integers(0, 110))
        hi = lo + int(gen.integers(1, 40))
        want = brute_max_overlap(starts, ends, lo, hi)
        for f in impls:
            assert f(starts, ends, lo, hi) == want


def test_busy_sum_matches_brute_force():
    gen = rng(2)
    impls = [kernels.busy_sum, python_impl(kernels.busy_sum)]
    for _ in range(300):
        starts, ends = random_table(gen, int(gen.integers(0, 12)))
        lo = int(gen.integers(0, 110))
        hi = lo + int(gen.integers(1, 40))
        want = sum(max(0, min(e, hi) - max(s, lo)) for s, e in zip(starts, ends))
        for f in impls:
            assert f(starts, ends, lo, hi) == want


def test_earliest_fit_matches_integer_scan():
    gen = rng(3)
    impls = [kernels.earliest_fit, python_impl(kernels.earliest_fit)]
    for _ in range(400):
        starts, ends = random_table(gen, int(gen.integers(0, 10)))
        cap = int(gen.integers(1, 4))
        not_before = int(gen.integers(0, 60))
        duration = int(gen.integers(1, 30))
        horizon = int(gen.integers(not_before + 1, 200))
        want = brute_earliest(starts, ends, cap, not_before, duration, horizon)
        for f in impls:
            got = int(f(starts, ends, cap, not_before, duration, horizon - duration))
            assert got == (want if want is not None else -1)


def brute_chain_fit(tables, caps, t_main, t_station, duration, dwell, not_before, deadline):
    lead = t_main + t_station
    offs = [0, t_main, lead, lead + duration]
    lens = [t_main, t_station, duration, dwell]
    latest = deadline - lead - duration
    for s in range(not_before, latest + 1):
        ok = True
        for (starts, ends), cap, off, ln in zip(tables, caps, offs, lens):
            if brute_max_overlap(starts, ends, s + off, s + off + ln) >= cap:
                ok = False
                break
        if ok:
            return s
    return -1


def test_chain_fit_matches_brute_force():
    gen = rng(4)
    impls = [kernels.chain_fit, python_impl(kernels.chain_fit)]
    for _ in range(200):
        tables = [random_table(gen, int(gen.integers(0, 8)), span=90, max_len=20) for _ in range(4)]
        caps = [int(gen.integers(1, 3)) for _ in range(4)]
        t_main = int(gen.integers(1, 8))
        t_station = int(gen.integers(1, 8))
        duration = int(gen.integers(1, 20))
        dwell = int(gen.integers(1, 15))
        not_before = int(gen.integers(0, 40))
        deadline = int(gen.integers(not_before + 1, 160))
        want = brute_chain_fit(tables, caps, t_main, t_station, duration, dwell, not_before, deadline)
        args = []
        for (starts, ends), cap in zip(tables, caps):
            args += [starts, ends, cap]
        args += [t_main, t_station, duration, dwell, not_before, deadline]
        for f in impls:
            assert int(f(*args)) == want


def test_empty_tables():
    empty = np.empty(0, np.int64)
    assert kernels.max_overlap(empty, empty, 0, 10) == 0
    assert kernels.busy_sum(empty, empty, 0, 10) == 0
    assert int(kernels.earliest_fit(empty, empty, 1, 5, 10, 100)) == 5
