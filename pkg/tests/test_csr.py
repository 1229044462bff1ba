import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ssmsim.core import SsmConfig, train
from ssmsim.csr import (
    CsrMasks,
    CsrState,
    TimingSpec,
    bitstream,
    csr_new,
    csr_tap,
    csr_tick,
    mask_from_csr,
    quantize_p,
    tap_frequencies,
    timing_check,
)
from ssmsim.datasets import bars_and_stripes
from ssmsim.exceptions import ParameterError


def observable(state):
    return tuple(csr_tap(state, i) for i in range(state.n_bits))


@pytest.mark.parametrize("k, value", [(0, 0), (10, 1)])
def test_constant_rings(k, value):
    s = csr_new(10, k, seed=5)
    for _ in range(25):
        assert set(observable(s)) == {value}
        s = csr_tick(s)


def test_seeds_permute_same_population():
    a, b = csr_new(10, 5, seed=1), csr_new(10, 5, seed=2)
    assert sum(a.bits) == sum(b.bits) == 5
    assert sorted(a.bits) == sorted(b.bits)
    assert a.offset == b.offset == 0


def test_new_rejects_overfull():
    with pytest.raises(ParameterError):
        csr_new(10, 11)
    with pytest.raises(ParameterError):
        csr_new(0, 0)


def test_period_n_returns_to_start():
    s0 = csr_new(10, 3, seed=4)
    s = s0
    for _ in range(10):
        s = csr_tick(s)
    assert observable(s) == observable(s0)
    assert s == s0


def test_single_tick_shifts_taps():
    s = CsrState((1, 0, 0))
    t = csr_tick(s)
    assert observable(s) == (1, 0, 0)
    assert observable(t) == (0, 0, 1)


def test_popcount_after_million_ticks():
    s = csr_new(10, 3, seed=8)
    s = csr_tick(s, 10**6)
    assert s.n_ones == 3 and sum(s.bits) == 3


@given(st.integers(1, 40), st.data())
def test_popcount_under_any_tick_sequence(n, data):
    k = data.draw(st.integers(0, n))
    s = csr_new(n, k, seed=data.draw(st.integers(0, 2**32)))
    for step in data.draw(st.lists(st.integers(0, 3 * n), max_size=20)):
        s = csr_tick(s, step)
        assert int(s.taps().sum()) == k


def test_tap_window_exact_counts():
    s = csr_new(10, 3, seed=0)
    for start in range(10):
        window_start = csr_tick(s, start)
        for i in range(10):
            ones = 0
            w = window_start
            for _ in range(10):
                ones += csr_tap(w, i)
                w = csr_tick(w)
            assert ones == 3


def test_long_run_frequency_exact():
    s = csr_new(10, 3, seed=6)
    freqs = tap_frequencies(s, 1000)
    assert np.all(freqs == 0.3)
    assert s.p == 0.3


def test_taps_differ_but_share_rate():
    s = csr_new(10, 3, seed=2)
    taps = observable(s)
    assert len(set(taps)) == 2
    assert all(bitstream(s, i, 10).mean() == 0.3 for i in range(10))


def test_single_one_never_coincides():
    s = csr_new(7, 1, seed=3)
    for _ in range(14):
        assert sum(observable(s)) == 1
        s = csr_tick(s)


def test_tap_out_of_range():
    with pytest.raises(ParameterError):
        csr_tap(csr_new(4, 1), 4)
    with pytest.raises(ParameterError):
        csr_tap(csr_new(4, 1), -1)


def test_quantize_p():
    assert quantize_p(0.33, 10) == (3, 0.3)
    assert quantize_p(1.0, 10) == (10, 1.0)
    with pytest.raises(ParameterError):
        quantize_p(1.5)


# -- mask_from_csr ---------------------------------------------------------

def test_mask_row_is_ring_rotation():
    s = csr_tick(csr_new(10, 4, seed=1), 3)
    mask, _ = mask_from_csr(s, (1, 10), 1)
    assert mask.sum() == 4
    assert tuple(mask[0]) == observable(s)


def test_mask_repeats_with_period_n():
    s = csr_new(10, 4, seed=1)
    mask, _ = mask_from_csr(s, (6, 7), 1)
    flat = mask.ravel()
    assert np.array_equal(flat[10:], flat[:-10])


def test_consecutive_masks_are_cyclic_shift():
    s = csr_new(10, 3, seed=9)
    m1, s = mask_from_csr(s, (2, 5), 1)
    m2, _ = mask_from_csr(s, (2, 5), 1)
    assert np.array_equal(np.roll(m1.ravel(), -1), m2.ravel())


def test_mask_deterministic():
    s = csr_new(10, 3, seed=9)
    a = mask_from_csr(s, (4, 3), 2)
    b = mask_from_csr(s, (4, 3), 2)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_csr_masks_drive_training():
    X, _ = bars_and_stripes()
    k, p = quantize_p(0.33, 10)
    src = CsrMasks(csr_new(10, k, seed=0), ticks_per_sample=1)
    net, metrics = train(X, None, SsmConfig(num_epochs=3, p=0.33), mask_source=src)
    assert net.p == 0.3
    assert len(metrics) == 3


# -- timing ------------------------------------------------------------------

def test_timing_valid_with_margin():
    rep = timing_check(TimingSpec(clock_period=100, switch_time=20, setup_margin=5))
    assert rep.valid
    assert rep.min_period_ns == 25
    assert rep.max_frequency_mhz == pytest.approx(40.0, abs=1e-12)


def test_timing_violation_at_short_clock():
    assert not timing_check(TimingSpec(clock_period=10, switch_time=20, setup_margin=5)).valid
    assert not timing_check(TimingSpec(clock_period=10, switch_time=20, setup_margin=0)).valid


def test_timing_boundary_inclusive():
    assert timing_check(TimingSpec(clock_period=20, switch_time=20, setup_margin=0)).valid


def test_timing_spec_validation():
    with pytest.raises(ParameterError):
        TimingSpec(clock_period=0)
    with pytest.raises(ParameterError):
        TimingSpec(setup_margin=-1)
