"""Myopic distance-reduction router used as an internal comparison baseline."""

from __future__ import annotations

import random

import numpy as np

from .circuits import Circuit, depth as circuit_depth, eliminate_redundant
from .routing import (EMPTY_ACTION, QubitMapping, RoutedCircuit, RoutingError,
                      apply_move, initial_state, is_done, legal_moves,
                      routed_circuit, COMMIT)
from .topology import Topology


def _target_pairs(state) -> list[tuple[int, int]]:
    """One (node, target-node) row per qubit with pending work.

    Mutually-current pairs appear twice, so swaps serving a schedulable gate
    outweigh swaps chasing a one-sided target.
    """
    q2n = state.mapping.qubit_to_node
    circuit = state.circuit
    pairs = []
    for q in range(circuit.qubit_count):
        p = state.progress[q]
        queue = circuit.queues[q]
        if p < len(queue):
            g = circuit.gate(queue[p])
            a, b = g.qubits
            other = b if a == q else a
            pairs.append((q2n[q], q2n[other]))
    return pairs


def _reduction(dist, pairs, swap) -> int:
    a, b = swap
    total = 0
    for i, j in pairs:
        if i == a or i == b or j == a or j == b:
            i2 = b if i == a else a if i == b else i
            j2 = b if j == a else a if j == b else j
            total += int(dist[i, j]) - int(dist[i2, j2])
    return total


def greedy_baseline(circuit: Circuit, topology: Topology,
                    allocation: QubitMapping | None = None,
                    swap_duration: int = 1, seed: int = 0,
                    keep_redundant: bool = False,
                    max_layers: int | None = None) -> tuple[RoutedCircuit, QubitMapping, dict]:
    """Per layer: greedy-schedule, then stack positive distance-reducing SWAPs.

    Deadlocks (no gates scheduled and no useful swap available) are broken by
    one random legal SWAP after 8 stagnant layers.
    """
    work = circuit if keep_redundant else eliminate_redundant(circuit)
    input_depth = circuit_depth(work)
    cap = max_layers if max_layers is not None else 50 + 10 * input_depth
    dist = topology.distances().dist
    rng = random.Random(seed)

    state = initial_state(work, topology, allocation, swap_duration)
    stagnant = 0
    while not is_done(state):
        if state.timestep > cap:
            raise RoutingError(f"layer cap {cap} exceeded in greedy baseline")
        scheduled_here = sum(op[0] == "cx" for op in state.layers[-1])
        action = EMPTY_ACTION
        pairs = _target_pairs(state)
        added = 0
        while True:
            candidates = [m for m in legal_moves(state, action) if not m.is_commit]
            best = None
            best_red = 0
            for mv in candidates:  # legal_moves is edge-sorted: ties keep lowest pair
                red = _reduction(dist, pairs, mv.swap)
                if red > best_red:
                    best, best_red = mv, red
            if best is None:
                break
            state, action = apply_move(state, action, best)
            added += 1
            a, b = best.swap
            remap = lambda n: b if n == a else a if n == b else n
            pairs = [(remap(i), remap(j)) for i, j in pairs]
        if scheduled_here == 0:
            stagnant += 1
            if stagnant >= 8:
                # random-walk out of zero-sum local minima, every layer until
                # a gate schedules again
                candidates = [m for m in legal_moves(state, action) if not m.is_commit]
                if candidates:
                    state, action = apply_move(state, action, rng.choice(candidates))
        else:
            stagnant = 0
        state, action = apply_move(state, action, COMMIT)
    routed, final_mapping = routed_circuit(state)
    report = {
        "input_depth": input_depth,
        "output_depth": routed.depth,
        "swaps_added": routed.swap_count,
        "seed": seed,
    }
    return routed, final_mapping, report
