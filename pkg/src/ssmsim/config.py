"""Flat ``key=value`` run configuration shared by every CLI subcommand."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from typing import Optional

from .core import SsmConfig
from .cost import CU_VARIANTS, TechnologyTable
from .crossbar import MemristorDevice
from .csr import DEFAULT_N_BITS, quantize_p
from .exceptions import ParameterError

RNG_SOURCES = ("ideal", "csr")


@dataclass
class RunConfig:
    # network / training
    num_visible: Optional[int] = None  # inferred from the dataset when unset
    num_hidden: int = 8
    num_outputs: Optional[int] = None  # inferred from labels when unset
    p: float = 0.5
    learn_rate: float = 0.05
    num_epochs: int = 200
    batch_size: int = 10
    seed: int = 0
    weight_init_scale: float = 0.1
    mask_refresh: str = "per-epoch"
    update_biases: bool = False
    # device
    g_on: float = 1e-4
    g_off: float = 1e-6
    v_threshold: float = 1.08
    switch_time: float = 20.0
    act_gain: float = 1.0
    quant_levels: int = 0
    # synapse RNG
    rng_source: str = "ideal"
    csr_bits: int = DEFAULT_N_BITS
    csr_ones: Optional[int] = None  # derived from p when unset
    ticks_per_sample: int = 1
    # cost model
    cu_variant: str = "cmos"
    n_cu: Optional[int] = None
    pair_multiplier: int = 2
    tech: dict = field(default_factory=dict)
    # paths, relative to --out unless absolute
    dataset: str = "dataset.csv"
    checkpoint: str = "checkpoint.txt"
    metrics: str = "metrics.txt"
    netlist: str = "netlist.txt"

    def __post_init__(self):
        if self.rng_source not in RNG_SOURCES:
            raise ParameterError(f"rng_source must be one of {RNG_SOURCES}")
        if self.cu_variant not in CU_VARIANTS:
            raise ParameterError(f"cu_variant must be one of {CU_VARIANTS}")
        if self.csr_ones is not None and not 0 <= self.csr_ones <= self.csr_bits:
            raise ParameterError("csr_ones must lie in [0, csr_bits]")
        if not 0.0 <= self.p <= 1.0:
            raise ParameterError(f"p must lie in [0, 1], got {self.p}")

    @property
    def csr_k(self):
        if self.csr_ones is not None:
            return self.csr_ones
        return quantize_p(self.p, self.csr_bits)[0]

    @property
    def realized_p(self):
        """The reliability actually used: k/N for a CSR source, ``p`` otherwise."""
        if self.rng_source == "csr":
            return self.csr_k / self.csr_bits
        return self.p

    def ssm_config(self, num_visible=None, num_outputs=None) -> SsmConfig:
        return SsmConfig(
            num_visible=num_visible or self.num_visible or 16,
            num_hidden=self.num_hidden,
            num_outputs=num_outputs or self.num_outputs or 2,
            p=self.realized_p,
            learn_rate=self.learn_rate,
            num_epochs=self.num_epochs,
            batch_size=self.batch_size,
            seed=self.seed,
            weight_init_scale=self.weight_init_scale,
            mask_refresh=self.mask_refresh,
            update_biases=self.update_biases,
        )

    def device(self) -> MemristorDevice:
        return MemristorDevice(g_on=self.g_on, g_off=self.g_off,
                               v_threshold=self.v_threshold, switch_time=self.switch_time)

    def technology(self) -> TechnologyTable:
        return TechnologyTable.from_mapping(self.tech)

    def to_text(self):
        """Fully resolved configuration, one ``key=value`` per line."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "tech":
                out.extend(f"tech.{k}={v[k]}" for k in sorted(v))
                continue
            out.append(f"{f.name}={_show(v)}")
        out.append(f"requested_p={_show(self.p)}")
        out.append(f"realized_p={_show(self.realized_p)}")
        return "\n".join(out) + "\n"


_DERIVED = ("requested_p", "realized_p")


def _show(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(name, raw, typ):
    raw = raw.strip()
    optional = typ.startswith("Optional")
    if optional and raw == "":
        return None
    base = typ.replace("Optional[", "").rstrip("]")
    try:
        if base == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if base == "int":
            return int(raw)
        if base == "float":
            return float(raw)
    except ValueError:
        raise ParameterError(f"config key {name!r}: cannot parse {raw!r} as {base}") from None
    return raw


def parse_pairs(pairs, base: RunConfig | None = None) -> RunConfig:
    """Apply ``(key, value)`` string pairs on top of ``base`` (or the defaults)."""
    types = {f.name: f.type for f in fields(RunConfig)}
    values = dataclasses.asdict(base) if base is not None else {}
    tech = dict(values.get("tech", {}))
    for key, raw in pairs:
        key = key.strip()
        if key.startswith("tech."):
            tech[key[5:]] = raw.strip()
            continue
        if key in _DERIVED:
            continue
        if key not in types or key == "tech":
            raise ParameterError(f"unknown config key {key!r}")
        values[key] = _coerce(key, raw, types[key])
    values["tech"] = tech
    return RunConfig(**values)


def parse_text(text, base=None) -> RunConfig:
    pairs = []
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"config line {n}: expected key=value")
        k, _, v = line.partition("=")
        pairs.append((k, v))
    return parse_pairs(pairs, base)


def load(path, base=None) -> RunConfig:
    with open(path) as fh:
        return parse_text(fh.read(), base)
