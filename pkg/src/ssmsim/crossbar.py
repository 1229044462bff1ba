"""Behavioral model of the two-crossbar SSM hardware.

Each synapse is a synaptic sampling cell (SSC): a memristor behind a pass
gate driven by one RNG tap. Signed weights use a differential pair of
columns, ``w ∝ g_pos - g_neg``. Column currents are the masked weighted sums;
an ideal activation block maps them through the erf curve, and a
winner-take-all stage picks the largest readout score.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.special import erf

from ._validation import check_count, check_finite, check_unit_interval
from .core import forward_reference
from .csr import tap_index
from .exceptions import DimensionError, ParameterError, ReadDisturbError

V_PROG = 2.0  # nominal programming voltage, V


@dataclass(frozen=True)
class MemristorDevice:
    g_on: float = 1e-4  # S
    g_off: float = 1e-6  # S
    v_threshold: float = 1.08  # V
    switch_time: float = 20.0  # ns, full 0 -> 1 at V_PROG
    x: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.x <= 1.0:
            raise ParameterError(f"device state x={self.x} outside [0, 1]")
        if not 0 < self.g_off < self.g_on:
            raise ParameterError("need 0 < g_off < g_on")
        if self.v_threshold <= 0 or self.switch_time <= 0:
            raise ParameterError("v_threshold and switch_time must be positive")

    @property
    def g(self):
        return self.g_off + self.x * (self.g_on - self.g_off)

    def x_for(self, g):
        return (g - self.g_off) / (self.g_on - self.g_off)


@dataclass(frozen=True)
class SynapticSamplingCell:
    device: MemristorDevice
    gate: int = 1

    def __post_init__(self):
        if self.gate not in (0, 1):
            raise ParameterError("gate must be 0 or 1")


def ssc_output(cell: SynapticSamplingCell, v_pre) -> float:
    """Current delivered to the column by one cell (non-destructive read)."""
    if abs(v_pre) > cell.device.v_threshold:
        raise ReadDisturbError(
            f"read voltage {v_pre} V exceeds device threshold {cell.device.v_threshold} V"
        )
    if not cell.gate:
        return 0.0
    return cell.device.g * v_pre


def write_pulse(device: MemristorDevice, v, dt, v_prog=V_PROG) -> MemristorDevice:
    """Apply a programming pulse of ``v`` volts for ``dt`` ns.

    Sub-threshold pulses are inert. Above threshold the state moves linearly in
    the overdrive, at a rate that completes a full transition in
    ``switch_time`` when driven at ``v_prog``.
    """
    if dt <= 0:
        raise ParameterError("pulse duration must be positive")
    overdrive = abs(v) - device.v_threshold
    if overdrive <= 0:
        return device
    dx = math.copysign(overdrive / (v_prog - device.v_threshold), v) * dt / device.switch_time
    return replace(device, x=min(1.0, max(0.0, device.x + dx)))


def program_device(device: MemristorDevice, g_target, max_pulses=20, tol=0.01,
                   v_prog=V_PROG, pulse_resolution=0.0):
    """Closed-loop program-and-verify toward ``g_target``.

    Each iteration reads the conductance and, if it is off by more than
    ``tol`` (relative), fires one pulse at ``±v_prog`` sized for the
    remaining state change. ``pulse_resolution`` (ns) rounds pulse widths to
    a driver grid; 0 means continuous widths.

    Returns ``(device, pulses_used, converged)``.
    """
    if not device.g_off <= g_target <= device.g_on:
        raise ParameterError(f"target conductance {g_target} outside device range")
    for n in range(max_pulses + 1):
        if abs(device.g - g_target) <= tol * g_target:
            return device, n, True
        if n == max_pulses:
            break
        dx = device.x_for(g_target) - device.x
        # a pulse at v_prog moves x by dt / switch_time
        dt = abs(dx) * device.switch_time
        if pulse_resolution:
            dt = max(pulse_resolution, round(dt / pulse_resolution) * pulse_resolution)
        device = write_pulse(device, math.copysign(v_prog, dx), dt, v_prog)
    return device, max_pulses, False


@dataclass(frozen=True)
class CrossbarProgram:
    """Conductance image of a trained network.

    ``scale`` / ``scale_out`` convert weights to conductance (S per unit
    weight) for the hidden and readout crossbars respectively. Hidden
    biases are applied by the activation block, not stored in the array.
    """

    g_pos: np.ndarray
    g_neg: np.ndarray
    g_pos_out: np.ndarray
    g_neg_out: np.ndarray
    scale: float
    scale_out: float
    b_hidden: np.ndarray
    quant_levels: int = 0
    device: MemristorDevice = MemristorDevice()
    act_gain: float = 1.0

    @property
    def shape(self):
        return self.g_pos.shape

    @property
    def shape_out(self):
        return self.g_pos_out.shape


class HwForwardTrace(NamedTuple):
    column_currents: np.ndarray
    activation_voltages: np.ndarray
    output_currents: np.ndarray
    output_scores: np.ndarray
    winner: np.ndarray


def _quantize(g, device, levels):
    span = device.g_on - device.g_off
    idx = np.round((g - device.g_off) / span * (levels - 1))
    return device.g_off + idx * span / (levels - 1)


def _encode(W, device, quant_levels):
    max_abs = float(np.max(np.abs(W))) if W.size else 0.0
    scale = (device.g_on - device.g_off) / max_abs if max_abs > 0 else 1.0
    g_pos = device.g_off + scale * np.maximum(W, 0.0)
    g_neg = device.g_off + scale * np.maximum(-W, 0.0)
    if max_abs > 0:
        # g_off + (g_on - g_off) need not round back to g_on
        g_pos = np.where(W == max_abs, device.g_on, g_pos)
        g_neg = np.where(-W == max_abs, device.g_on, g_neg)
    if quant_levels:
        g_pos = _quantize(g_pos, device, quant_levels)
        g_neg = _quantize(g_neg, device, quant_levels)
    return g_pos, g_neg, scale


def map_weights(net, device=MemristorDevice(), quant_levels=0, act_gain=1.0) -> CrossbarProgram:
    """Differential-pair conductance mapping; ``max|w|`` lands on ``g_on``.

    An all-zero weight matrix gets ``scale = 1``. With ``quant_levels > 0``
    conductances snap to that many evenly spaced levels in ``[g_off, g_on]``.
    """
    quant_levels = check_count(quant_levels, "quant_levels", minimum=0)
    if quant_levels == 1:
        raise ParameterError("quant_levels must be 0 (continuous) or >= 2")
    W = check_finite(net.W, "W")
    W_out = check_finite(net.W_out, "W_out")
    g_pos, g_neg, scale = _encode(W, device, quant_levels)
    g_pos_out, g_neg_out, scale_out = _encode(W_out, device, quant_levels)
    return CrossbarProgram(g_pos, g_neg, g_pos_out, g_neg_out, scale, scale_out,
                           np.array(net.b_hidden, dtype=np.float64), quant_levels, device,
                           act_gain)


def decode_weights(program: CrossbarProgram):
    """Weights seen by the hardware: ``((g_pos - g_neg) / scale, ...)`` for both arrays."""
    return ((program.g_pos - program.g_neg) / program.scale,
            (program.g_pos_out - program.g_neg_out) / program.scale_out)


def program_crossbar(program: CrossbarProgram, **verify_kwargs):
    """Program every device of ``program`` from the erased state.

    Returns ``(realized_program, pulse_counts)`` where the realized program
    holds the conductances actually reached, and ``pulse_counts`` maps array
    names to integer arrays of pulses spent per device.
    """
    realized, pulses = {}, {}
    for name in ("g_pos", "g_neg", "g_pos_out", "g_neg_out"):
        target = getattr(program, name)
        got = np.empty_like(target)
        used = np.zeros(target.shape, dtype=int)
        for idx in np.ndindex(target.shape):
            dev, n, _ = program_device(replace(program.device, x=0.0), float(target[idx]),
                                       **verify_kwargs)
            got[idx] = dev.g
            used[idx] = n
        realized[name] = got
        pulses[name] = used
    return replace(program, **realized), pulses


def _column_currents(v, g_pos, g_neg, mask):
    mask = np.asarray(mask)
    if mask.shape[-2:] != g_pos.shape:
        raise DimensionError(f"mask shape {mask.shape} does not match crossbar {g_pos.shape}")
    if mask.ndim == 3:
        i_pos = np.einsum("bn,bnm->bm", v, mask * g_pos)
        i_neg = np.einsum("bn,bnm->bm", v, mask * g_neg)
    else:
        i_pos = v @ (mask * g_pos)
        i_neg = v @ (mask * g_neg)
    return i_pos - i_neg


def wta(scores):
    """Index of the largest score; ties go to the lowest index.

    A 2-D input is treated as one score vector per row.
    """
    scores = check_finite(scores, "scores")
    if scores.shape[-1] == 0:
        raise ParameterError("winner-take-all needs at least one input")
    return np.argmax(scores, axis=-1)


def forward_hw(program: CrossbarProgram, v_in, masks) -> HwForwardTrace:
    """Run one input (or a batch of rows) through both crossbars and the WTA."""
    v = check_unit_interval(v_in, "v_in")
    if v.shape[-1] != program.shape[0]:
        raise DimensionError(f"input has {v.shape[-1]} entries, crossbar has {program.shape[0]} rows")
    m1, m2 = masks
    i1 = _column_currents(v, program.g_pos, program.g_neg, m1)
    act = 0.5 * (1.0 + erf(program.act_gain * (i1 / program.scale + program.b_hidden)))
    i2 = _column_currents(act, program.g_pos_out, program.g_neg_out, m2)
    scores = 0.5 * (1.0 + erf(program.act_gain * i2 / program.scale_out))
    return HwForwardTrace(i1, act, i2, scores, wta(scores))


def cellwise_currents(program: CrossbarProgram, v, mask):
    """Layer-1 column currents by summing :func:`ssc_output` cell by cell.

    Slow; exists as a cross-check for the vectorized path.
    """
    rows, cols = program.shape
    dev = program.device
    out = np.zeros(cols)
    for c in range(cols):
        for r in range(rows):
            gate = int(mask[r, c])
            for g, sign in ((program.g_pos[r, c], 1.0), (program.g_neg[r, c], -1.0)):
                cell = SynapticSamplingCell(replace(dev, x=float(np.clip(dev.x_for(g), 0.0, 1.0))), gate)
                out[c] += sign * ssc_output(cell, float(v[r]))
    return out


@dataclass(frozen=True)
class EquivalenceReport:
    n_inputs: int
    max_abs_score_diff: float
    max_abs_hidden_diff: float
    wta_agreement: float
    n_score_ties: int


def equivalence_report(net, program, inputs, masks) -> EquivalenceReport:
    """Compare reference and hardware scores under identical masks.

    ``masks`` is a sequence with one ``(hidden_mask, readout_mask)`` pair per
    input row. Agreement is the fraction of rows whose WTA winners match.
    """
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim != 2:
        raise DimensionError("inputs must be a 2-D array")
    masks = list(masks)
    if len(masks) != X.shape[0]:
        raise DimensionError("need one mask pair per input row")
    n = X.shape[0]
    if n == 0:
        return EquivalenceReport(0, 0.0, 0.0, float("nan"), 0)
    m1 = np.stack([m[0] for m in masks])
    m2 = np.stack([m[1] for m in masks])
    ref = forward_reference(net, X, (m1, m2))
    hw = forward_hw(program, X, (m1, m2))
    ref_win = wta(ref.scores)
    ties = int(np.sum(np.sum(ref.scores == ref.scores.max(axis=1, keepdims=True), axis=1) > 1))
    return EquivalenceReport(
        n_inputs=n,
        max_abs_score_diff=float(np.max(np.abs(ref.scores - hw.output_scores))),
        max_abs_hidden_diff=float(np.max(np.abs(ref.hidden - hw.activation_voltages))),
        wta_agreement=float(np.mean(ref_win == hw.winner)),
        n_score_ties=ties,
    )


def export_netlist(program: CrossbarProgram, n_bits=10):
    """Line-oriented netlist text for both crossbars and the WTA stage."""
    lines = []
    for g_pos, g_neg, act in ((program.g_pos, program.g_neg, True),
                              (program.g_pos_out, program.g_neg_out, False)):
        rows, cols = g_pos.shape
        lines.append(f"XBAR {rows} {cols}")
        for r in range(rows):
            for c in range(cols):
                lines.append(
                    f"SSC {r} {c} gpos={g_pos[r, c]:.9e} gneg={g_neg[r, c]:.9e} "
                    f"tap={tap_index(r, c, cols, n_bits)}"
                )
        if act:
            lines.extend(f"ACT {c}" for c in range(cols))
    lines.append(f"WTA {program.shape_out[1]}")
    return "\n".join(lines) + "\n"
