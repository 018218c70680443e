"""Consensus and periodic synchronization under switching topologies and delays."""
from .conditions import (ConditionReport, check_proposition, check_stationary_corollary, check_theorem1,
                         check_theorem2, check_theorem3, estimate_wolfowitz_N, search_parameters)
from .errors import CapacityError, InvalidInputError, PreconditionError, ZeroPatternError
from .graphs import (DiGraph, graph_of, graph_period, is_scrambling_graph, is_sia, is_strongly_connected,
                     root_set)
from .lifting import DelayClassInfo, DelayedCoupling, LiftedMatrix, block_permutation, delay_classes, lift
from .matrix import (delta_matrix, hajnal_diameter, is_analog, left_product, scramblingness,
                     validate_stochastic)
from .process import (IID, Deterministic, Markov, TopologyProcess, expected_window_product, expected_window_sum,
                      sample_path, stationary_distribution)
from .simulate import (Trajectory, Verdict, classify, detect_consensus, detect_periodic_sync, run, run_path,
                       step)

__version__ = "0.1.0"
