"""Tabled asymmetric numeral systems: coding tables, Markov redundancy analysis,
spread tuning and search, and key-derived spreads."""
from __future__ import annotations

__version__ = "0.1.0"

from .core import (BinaryFrame, CodingTables, SymbolDistribution, SymbolSpread, build_tables,
                   decode, encode, entropy, normalize, quantize, state_bits)
from .errors import CapExceeded, DecodeError, DistributionError, SingularSystem, SpreadError
from .markov import (EquilibriumDistribution, RedundancyReport, TransitionSystem, analyze,
                     build_transition_system, redundancy, simulate_empirical, solve_equilibrium)
from .optimize import SearchConfig, SearchTrace, exhaustive_spreads, quantized_search, swap_search
from .tuning import preferred_positions, rank_match_spread, spread_distance, tune_spread

__all__ = [
    "BinaryFrame", "CodingTables", "SymbolDistribution", "SymbolSpread", "build_tables",
    "decode", "encode", "entropy", "normalize", "quantize", "state_bits",
    "CapExceeded", "DecodeError", "DistributionError", "SingularSystem", "SpreadError",
    "EquilibriumDistribution", "RedundancyReport", "TransitionSystem", "analyze",
    "build_transition_system", "redundancy", "simulate_empirical", "solve_equilibrium",
    "SearchConfig", "SearchTrace", "exhaustive_spreads", "quantized_search", "swap_search",
    "preferred_positions", "rank_match_spread", "spread_distance", "tune_spread",
]
