"""Heuristic evaluation of routing positions.

An evaluator is a pure callable (FeatureSet, Topology) -> Evaluation whose
prior covers the full move space (index 0 COMMIT, index 1+i a SWAP on edge i);
the search masks it to the legal moves and renormalizes, which is equivalent
to a masked softmax over the underlying scores.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .routing import FeatureSet
from .topology import Topology


@dataclass(frozen=True)
class Evaluation:
    value: float
    prior: np.ndarray


def _target_pairs(f: FeatureSet) -> np.ndarray:
    """Unique unordered (node, target-node) pairs, shape (P, 2)."""
    pairs = {(min(i, j), max(i, j))
             for i, j in enumerate(f.target_of) if j >= 0}
    if not pairs:
        return np.empty((0, 2), dtype=np.int64)
    return np.array(sorted(pairs), dtype=np.int64)


def make_analytic_evaluator(topology: Topology, gamma: float = 0.95,
                            gate_weight: float = 1.0):
    """Distance-based evaluator: no learning, works on any topology.

    Value is the discounted gate return still to be earned: each pending gate
    contributes gate_weight * gamma^(estimated layers until it can run), with
    a qubit's head gate delayed by its excess target distance and queued gates
    behind it delayed two further layers each. It is positive while work
    remains and zero exactly when routing is done, so zero-reward moves that
    merely postpone progress always lose value under per-move discounting.

    Swap priors are exponentiated one-step distance reductions over the unique
    target pairs the swap touches; COMMIT scores a reduction of zero.
    """
    dist = topology.distances().dist
    edges = np.array(topology.edges, dtype=np.int64) if topology.edges else \
        np.empty((0, 2), dtype=np.int64)
    n_moves = len(topology.edges) + 1

    def evaluate(f: FeatureSet, t: Topology) -> Evaluation:
        pairs = _target_pairs(f)
        if len(pairs) == 0:
            prior = np.zeros(n_moves)
            prior[0] = 1.0
            return Evaluation(0.0, prior)
        target = np.array(f.target_of, dtype=np.int64)
        nodes = np.nonzero(target >= 0)[0]
        delay = np.maximum(dist[nodes, target[nodes]] - 1, 0).astype(np.float64)
        k = np.array([f.resident_remaining[n] for n in nodes], dtype=np.float64)
        if gamma < 1.0:
            per_qubit = gamma ** delay * (1.0 - gamma ** (2.0 * k)) / (1.0 - gamma * gamma)
        else:
            per_qubit = k
        value = 0.5 * gate_weight * float(per_qubit.sum())
        # per-edge total distance reduction if that swap were added
        i, j = pairs[:, 0], pairs[:, 1]
        d0 = dist[i, j]
        a = edges[:, 0:1]
        b = edges[:, 1:2]
        i2 = np.where(i == a, b, np.where(i == b, a, i))
        j2 = np.where(j == a, b, np.where(j == b, a, j))
        delta = (d0[None, :] - dist[i2, j2]).sum(axis=1)
        scores = np.concatenate(([0.0], delta))
        scores -= scores.max()
        prior = np.exp(scores)
        prior /= prior.sum()
        return Evaluation(value, prior)

    return evaluate
