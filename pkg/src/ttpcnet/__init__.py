"""Continuous-variable dense coding on a four-mode TTPC entangled state."""

__version__ = "0.1.0"

from .engine import (
    GaussianState,
    LinearForm,
    SymplecticOp,
    apply,
    beamsplitter,
    linear_form_variance,
    phase_shift,
    two_mode_squeezer,
    vacuum_state,
)
from .source import Relation, TtpcState, build_ttpc, correlation_variance, relation
from .protocols import (
    GainPair,
    ProtocolId,
    ProtocolSpec,
    SpectrumReport,
    closed_form_spectra,
    engine_spectra,
    protocol_spec,
)
from .capacity import CapacityReport, capacity, fig5_sweep, mutual_information
from .netsim import McEstimate, compare_mc_analytic, sample_run

__all__ = [
    "CapacityReport",
    "GainPair",
    "GaussianState",
    "LinearForm",
    "McEstimate",
    "ProtocolId",
    "ProtocolSpec",
    "Relation",
    "SpectrumReport",
    "SymplecticOp",
    "TtpcState",
    "apply",
    "beamsplitter",
    "build_ttpc",
    "capacity",
    "closed_form_spectra",
    "compare_mc_analytic",
    "correlation_variance",
    "engine_spectra",
    "fig5_sweep",
    "linear_form_variance",
    "mutual_information",
    "phase_shift",
    "protocol_spec",
    "relation",
    "sample_run",
    "two_mode_squeezer",
    "vacuum_state",
]
