"""Synaptic Sampling Machine simulator: reference model and memristive crossbar model."""
from .core import (
    SsmConfig,
    SsmNetwork,
    EpochMetrics,
    activation_probability,
    cd_step,
    expected_preactivation,
    reconstruct,
    sample_mask,
    sample_states,
    stochastic_preactivation,
    train,
)
from .crossbar import (
    CrossbarProgram,
    MemristorDevice,
    SynapticSamplingCell,
    equivalence_report,
    forward_hw,
    map_weights,
    ssc_output,
    write_pulse,
    wta,
)
from .csr import CsrState, TimingSpec, csr_new, csr_tap, csr_tick, mask_from_csr, timing_check
from .cost import TechnologyTable, compare_variants, estimate
from .estimator import CrossbarSSM, SynapticSamplingMachine

__version__ = "0.1.0"
