"""Verification workbench for RED active queue management.

The package pairs a packet-level simulator of a RED bottleneck link with
a stochastic fluid model of the same system, plus the tooling needed to
drive both and compare their predictions: a traffic-script parser and
generator, a packet-log decoder with QoS metrics, a Fokker-Planck
density solver, and an HTTP service with a CLI front end.
"""

from .compare import CompareReport, compare_series, render_compare
from .errors import (
    ConfigError,
    DisjointRangeError,
    NoEquilibriumError,
    ParseError,
    RedbenchError,
    StabilityError,
)
from .fluid import (
    FluidEnsemble,
    FluidParams,
    FluidState,
    FPResult,
    Grid1D,
    MarkingProcess,
    diffusion,
    drift,
    euler_maruyama_ensemble_1d,
    fixed_point,
    marking_intensity,
    simulate_fluid,
    solve_fokker_planck_1d,
    step_euler_maruyama,
    window_fp_coefficients,
)
from .metrics import (
    FlowReport,
    PacketLogEntry,
    binned_series,
    decode,
    parse_packet_log,
    render_report,
    write_packet_log,
)
from .red import (
    DropCause,
    RedDecision,
    RedParams,
    RedState,
    drop_probability,
    ewma_update,
    red_decide,
)
from .sim import LinkConfig, SimResult, queue_timeseries, run_simulation
from .traffic import (
    Distribution,
    FlowSpec,
    generate_departures,
    parse_flow_script,
)

__version__ = "0.1.0"

__all__ = [
    "CompareReport",
    "ConfigError",
    "DisjointRangeError",
    "Distribution",
    "DropCause",
    "FPResult",
    "FlowReport",
    "FlowSpec",
    "FluidEnsemble",
    "FluidParams",
    "FluidState",
    "Grid1D",
    "LinkConfig",
    "MarkingProcess",
    "NoEquilibriumError",
    "PacketLogEntry",
    "ParseError",
    "RedbenchError",
    "RedDecision",
    "RedParams",
    "RedState",
    "SimResult",
    "StabilityError",
    "binned_series",
    "compare_series",
    "decode",
    "diffusion",
    "drift",
    "drop_probability",
    "euler_maruyama_ensemble_1d",
    "ewma_update",
    "fixed_point",
    "generate_departures",
    "marking_intensity",
    "parse_flow_script",
    "parse_packet_log",
    "queue_timeseries",
    "red_decide",
    "render_compare",
    "render_report",
    "run_simulation",
    "simulate_fluid",
    "solve_fokker_planck_1d",
    "step_euler_maruyama",
    "window_fp_coefficients",
    "write_packet_log",
]
