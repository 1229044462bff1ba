"""Area / power estimate for an SSM hardware instance.

All arithmetic is done in :class:`decimal.Decimal` so that unit-component
reports reproduce the technology table digit for digit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal

from ._validation import check_count
from .exceptions import ParameterError

CU_VARIANTS = ("cmos", "memristive")


def _cost(area, power):
    return (Decimal(str(area)), Decimal(str(power)))


@dataclass(frozen=True)
class TechnologyTable:
    """Per-instance costs as ``(area_um2, power_uW)`` pairs.

    ``peripherals`` optionally prices activation blocks (``"act"``, one per
    hidden and output column) and the WTA stage (``"wta"``, one per design);
    they are left out by default.
    """

    ssc: tuple = _cost("0.3525", "0.0196")
    cu_cmos: tuple = _cost("24.45", "3.440")
    cu_memristive: tuple = _cost("12.57", "50.7")
    dff_per_cu: int = 10
    peripherals: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("ssc", "cu_cmos", "cu_memristive"):
            object.__setattr__(self, name, _cost(*getattr(self, name)))
        object.__setattr__(self, "peripherals",
                           {k: _cost(*v) for k, v in self.peripherals.items()})
        for name, (a, p) in self._entries():
            if a <= 0 or p <= 0:
                raise ParameterError(f"{name}: area and power must be positive")
        check_count(self.dff_per_cu, "dff_per_cu")

    def _entries(self):
        yield "ssc", self.ssc
        yield "cu_cmos", self.cu_cmos
        yield "cu_memristive", self.cu_memristive
        yield from self.peripherals.items()

    def cu(self, variant):
        if variant not in CU_VARIANTS:
            raise ParameterError(f"unknown control-unit variant {variant!r}")
        return self.cu_cmos if variant == "cmos" else self.cu_memristive

    @classmethod
    def from_mapping(cls, values):
        """Build from flat keys such as ``ssc_area_um2`` / ``cu_cmos_power_uW``.

        Missing keys keep their defaults. ``act_*`` and ``wta_*`` keys add
        peripheral entries.
        """
        base = cls()
        kw = {}
        for name in ("ssc", "cu_cmos", "cu_memristive", "act", "wta"):
            a = values.get(f"{name}_area_um2")
            p = values.get(f"{name}_power_uW")
            if a is None and p is None:
                continue
            if name in ("act", "wta"):
                if a is None or p is None:
                    raise ParameterError(f"{name} needs both area and power")
                kw.setdefault("peripherals", {})[name] = (a, p)
            else:
                da, dp = getattr(base, name)
                kw[name] = (a if a is not None else da, p if p is not None else dp)
        if "dff_per_cu" in values:
            kw["dff_per_cu"] = int(values["dff_per_cu"])
        return cls(**kw)


@dataclass(frozen=True)
class CostReport:
    cu_variant: str
    dims: tuple
    counts: dict
    subtotals: dict  # component -> (area_um2, power_uW)
    total_area_um2: Decimal
    total_power_uW: Decimal

    def __add__(self, other):
        if self.cu_variant != other.cu_variant:
            raise ParameterError("cannot add reports for different control-unit variants")
        keys = list(dict.fromkeys([*self.counts, *other.counts]))
        zero = (Decimal(0), Decimal(0))
        counts = {k: self.counts.get(k, 0) + other.counts.get(k, 0) for k in keys}
        subtotals = {
            k: (self.subtotals.get(k, zero)[0] + other.subtotals.get(k, zero)[0],
                self.subtotals.get(k, zero)[1] + other.subtotals.get(k, zero)[1])
            for k in keys
        }
        return CostReport(self.cu_variant, (), counts, subtotals,
                          self.total_area_um2 + other.total_area_um2,
                          self.total_power_uW + other.total_power_uW)

    def as_text(self):
        lines = [f"control unit variant: {self.cu_variant}"]
        if self.dims:
            lines.append("network: {}-{}-{}".format(*self.dims))
        for k, n in self.counts.items():
            a, p = self.subtotals[k]
            lines.append(f"  {k:<4} x{n:<8} area {a} um2   power {p} uW")
        lines.append(f"total area  {self.total_area_um2} um2")
        lines.append(f"total power {self.total_power_uW} uW")
        return "\n".join(lines)

    def as_keyvalue(self):
        out = [f"cu_variant={self.cu_variant}"]
        for k, n in self.counts.items():
            a, p = self.subtotals[k]
            out += [f"n_{k}={n}", f"{k}_area_um2={a}", f"{k}_power_uW={p}"]
        out += [f"total_area_um2={self.total_area_um2}", f"total_power_uW={self.total_power_uW}"]
        return "\n".join(out)


def component_cost(n_ssc, n_cu, cu_variant="cmos", tech=None, peripherals=None) -> CostReport:
    """Cost of an explicit component list: SSCs, control units, and optional peripherals."""
    tech = tech or TechnologyTable()
    counts = {"ssc": int(n_ssc), "cu": int(n_cu)}
    unit = {"ssc": tech.ssc, "cu": tech.cu(cu_variant)}
    for name, n in (peripherals or {}).items():
        if name in tech.peripherals:
            counts[name] = int(n)
            unit[name] = tech.peripherals[name]
    if any(n < 0 for n in counts.values()):
        raise ParameterError("component counts must be non-negative")
    subtotals = {k: (counts[k] * unit[k][0], counts[k] * unit[k][1]) for k in counts}
    # absent components would pad the totals with trailing zeros
    used = [subtotals[k] for k in counts if counts[k]] or [(Decimal(0), Decimal(0))]
    return CostReport(cu_variant, (), counts, subtotals,
                      sum(a for a, _ in used), sum(p for _, p in used))


def default_n_cu(num_visible, num_hidden, num_outputs, tech=None):
    """One tap per synapse: ``ceil(total_synapses / dff_per_cu)``.

    Both cells of a differential pair are gated by the same tap.
    """
    tech = tech or TechnologyTable()
    n_syn = num_visible * num_hidden + num_hidden * num_outputs
    return math.ceil(n_syn / tech.dff_per_cu)


def estimate(num_visible, num_hidden, num_outputs, cu_variant="cmos", n_cu=None,
             tech=None, pair_multiplier=2) -> CostReport:
    """Area and power of a full visible-hidden-output design.

    SSC count covers both crossbars, times ``pair_multiplier`` (2 for the
    differential encoding of signed weights, 1 for unipolar accounting).
    ``n_cu`` defaults to one RNG tap per synapse.
    """
    for name, v in (("num_visible", num_visible), ("num_hidden", num_hidden),
                    ("num_outputs", num_outputs)):
        check_count(v, name)
    if pair_multiplier < 0:
        raise ParameterError("pair_multiplier must be non-negative")
    tech = tech or TechnologyTable()
    if n_cu is None:
        n_cu = default_n_cu(num_visible, num_hidden, num_outputs, tech)
    n_ssc = pair_multiplier * (num_visible * num_hidden + num_hidden * num_outputs)
    report = component_cost(n_ssc, n_cu, cu_variant, tech,
                            peripherals={"act": num_hidden + num_outputs, "wta": 1})
    return CostReport(cu_variant, (num_visible, num_hidden, num_outputs), report.counts,
                      report.subtotals, report.total_area_um2, report.total_power_uW)


@dataclass(frozen=True)
class TradeoffSummary:
    area_delta_um2: Decimal  # memristive - cmos
    power_delta_uW: Decimal  # memristive - cmos
    n_cu: int

    @property
    def area_saving_um2(self):
        return -self.area_delta_um2

    @property
    def power_increase_uW(self):
        return self.power_delta_uW

    @property
    def memristive_smaller(self):
        return self.area_delta_um2 < 0

    @property
    def memristive_hungrier(self):
        return self.power_delta_uW > 0

    def as_text(self):
        return (f"memristive vs cmos control units (n_cu={self.n_cu}): "
                f"area {self.area_delta_um2:+} um2, power {self.power_delta_uW:+} uW")


def compare_variants(report_cmos: CostReport, report_mem: CostReport) -> TradeoffSummary:
    if report_cmos.dims != report_mem.dims or report_cmos.counts != report_mem.counts:
        raise ParameterError("reports must describe the same network and component counts")
    return TradeoffSummary(report_mem.total_area_um2 - report_cmos.total_area_um2,
                           report_mem.total_power_uW - report_cmos.total_power_uW,
                           report_cmos.counts.get("cu", 0))
