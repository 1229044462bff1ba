"""Circular shift register (CSR) Bernoulli source.

A ring of N D flip-flops holding k ones circulates once per clock. Every
flip-flop output ("tap") emits a periodic bitstream whose rate over any N
consecutive ticks is exactly k/N. Taps are strongly correlated with each
other, which is the price paid for the tiny hardware; the harness exposes
rather than hides that.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._validation import check_count
from .exceptions import ParameterError

DEFAULT_N_BITS = 10


@dataclass(frozen=True)
class CsrState:
    bits: tuple
    offset: int = 0
    n_ones: int = field(init=False)

    def __post_init__(self):
        if not self.bits:
            raise ParameterError("a CSR needs at least one flip-flop")
        if any(b not in (0, 1) for b in self.bits):
            raise ParameterError("CSR bits must be 0 or 1")
        if not 0 <= self.offset < len(self.bits):
            raise ParameterError("offset out of range")
        object.__setattr__(self, "n_ones", sum(self.bits))

    @property
    def n_bits(self):
        return len(self.bits)

    @property
    def p(self):
        return self.n_ones / self.n_bits

    def taps(self):
        """All tap outputs at the current instant."""
        return np.roll(np.array(self.bits, dtype=np.uint8), -self.offset)


def csr_new(n_bits=DEFAULT_N_BITS, n_ones=0, seed=0) -> CsrState:
    n_bits = check_count(n_bits, "n_bits")
    n_ones = check_count(n_ones, "n_ones", minimum=0)
    if n_ones > n_bits:
        raise ParameterError(f"n_ones={n_ones} exceeds n_bits={n_bits}")
    bits = np.zeros(n_bits, dtype=int)
    bits[:n_ones] = 1
    bits = np.random.default_rng(seed).permutation(bits)
    return CsrState(tuple(int(b) for b in bits))


def csr_tick(state: CsrState, n=1) -> CsrState:
    return CsrState(state.bits, (state.offset + n) % state.n_bits)


def csr_tap(state: CsrState, i) -> int:
    if not 0 <= i < state.n_bits:
        raise ParameterError(f"tap {i} out of range for a {state.n_bits}-bit ring")
    return state.bits[(i + state.offset) % state.n_bits]


def quantize_p(p, n_bits=DEFAULT_N_BITS):
    """Nearest realizable ``(k, k/N)`` for a requested probability."""
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    k = int(round(p * n_bits))
    return k, k / n_bits


def mask_from_csr(state: CsrState, shape, ticks_per_sample=1):
    """Wire synapse ``(r, c)`` to tap ``(r*cols + c) mod N`` and read a mask.

    Returns ``(mask, advanced_state)``; the ring is clocked
    ``ticks_per_sample`` times after the read. Masks larger than the ring
    repeat with period N along the flattened synapse index.
    """
    size = int(np.prod(shape))
    taps = np.arange(size) % state.n_bits
    mask = state.taps()[taps].reshape(shape)
    return mask, csr_tick(state, ticks_per_sample)


def tap_index(row, col, cols, n_bits):
    return (row * cols + col) % n_bits


class CsrMasks:
    """Mask source for :func:`ssmsim.core.train` backed by a CSR."""

    def __init__(self, state: CsrState, ticks_per_sample=1):
        self.state = state
        self.ticks_per_sample = check_count(ticks_per_sample, "ticks_per_sample", minimum=0)

    @property
    def p(self):
        return self.state.p

    def draw(self, shape):
        mask, self.state = mask_from_csr(self.state, shape, self.ticks_per_sample)
        return mask


def bitstream(state: CsrState, tap, n_ticks):
    """``n_ticks`` successive outputs of one tap, starting at the current instant."""
    if not 0 <= tap < state.n_bits:
        raise ParameterError(f"tap {tap} out of range")
    idx = (tap + state.offset + np.arange(n_ticks)) % state.n_bits
    return np.array(state.bits, dtype=np.uint8)[idx]


def tap_frequencies(state: CsrState, n_ticks):
    """Fraction of ones emitted by every tap over ``n_ticks`` clock cycles."""
    return np.array([bitstream(state, i, n_ticks).mean() for i in range(state.n_bits)])


@dataclass(frozen=True)
class TimingSpec:
    clock_period: float = 100.0  # ns
    switch_time: float = 20.0  # ns, memristor low -> high
    setup_margin: float = 5.0  # ns

    def __post_init__(self):
        if self.clock_period <= 0 or self.switch_time <= 0:
            raise ParameterError("clock_period and switch_time must be positive")
        if self.setup_margin < 0:
            raise ParameterError("setup_margin must be non-negative")


@dataclass(frozen=True)
class TimingReport:
    valid: bool
    min_period_ns: float
    max_frequency_mhz: float
    slack_ns: float


def timing_check(spec: TimingSpec) -> TimingReport:
    """Can a memristive flip-flop settle within one clock period?

    The boundary ``clock_period == switch_time + setup_margin`` is valid.
    """
    min_period = spec.switch_time + spec.setup_margin
    return TimingReport(
        valid=spec.clock_period >= min_period,
        min_period_ns=min_period,
        max_frequency_mhz=1e3 / min_period,
        slack_ns=spec.clock_period - min_period,
    )
