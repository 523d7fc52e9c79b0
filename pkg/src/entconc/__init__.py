"""Exact simulation of entanglement concentration on small registers."""
from .analysis import YieldTable, expected_pairs_given_j, expected_pairs_total
from .combinat import binomial, rank, unrank
from .protocol import PairParams, prepare_state, run_protocol, run_trials
from .statevec import BitString, StateVector

__all__ = [
    "BitString", "PairParams", "StateVector", "YieldTable", "binomial",
    "expected_pairs_given_j", "expected_pairs_total", "prepare_state", "rank",
    "run_protocol", "run_trials", "unrank",
]
