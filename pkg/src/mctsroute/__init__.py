"""Hardware-agnostic qubit routing by Monte Carlo tree search."""

from .circuits import (Circuit, CircuitError, GateOp, PassThrough,
                       SliceDecomposition, cdr, circuit_from_pairs, depth,
                       eliminate_redundant, parse_circuit, random_circuit,
                       serialize_circuit, slice_circuit)
from .evaluators import Evaluation, make_analytic_evaluator
from .routing import (ActionSet, COMMIT, EMPTY_ACTION, FeatureSet, Move,
                      QubitMapping, RoutedCircuit, RoutingError, RoutingState,
                      VerificationResult, apply_move, extract_features,
                      greedy_schedule, initial_state, is_done, legal_moves,
                      routed_circuit, verify_routed)
from .search import (RouteResult, SearchConfig, SearchNode, TrainingSample,
                     backup, choose_action, reroot, reward, route,
                     simulate_once, uct)
from .topology import (DistanceTable, Topology, TopologyError, builtin,
                       compute_distances, from_edge_list, grid, line, ring)

__all__ = [name for name in dir() if not name.startswith("_")]
