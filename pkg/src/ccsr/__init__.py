"""Chase combining with selective retransmission (CCSR) for OFDM links.

Analytical BER/throughput bounds, an offline threshold optimizer, the
protocol state machines and a Monte Carlo harness.
"""
from .analysis import BoundParams, ber_analytic, ber_bound_general, eta_analytic, throughput_eta
from .config import QPSK, ConfigError, ModulationSpec, NoiseSpec, ProtocolConfig, make_rng, snr_to_n0
from .optimizer import TauTable, build_table, optimize_tau
from .protocol import run_cycle, run_packet_cc, run_packet_ccsr
from .sim import PointResult, SweepSpec, run_point, run_sweep

__version__ = "0.1.0"

__all__ = [
    "BoundParams", "ConfigError", "ModulationSpec", "NoiseSpec", "PointResult", "ProtocolConfig", "QPSK",
    "SweepSpec", "TauTable", "ber_analytic", "ber_bound_general", "build_table", "eta_analytic", "make_rng",
    "optimize_tau", "run_cycle", "run_packet_cc", "run_packet_ccsr", "run_point", "run_sweep", "snr_to_n0",
    "throughput_eta",
]
