"""Monte Carlo tree search over (state, action) pairs and construction moves.

Each tree node is one (state, action-under-construction) pair; edges are moves
(SWAP insertions or COMMIT). Leaf evaluation replaces rollouts: the evaluator
scores the state reached by hypothetically committing the node's action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, depth as circuit_depth, eliminate_redundant
from .routing import (ActionSet, EMPTY_ACTION, FeatureSet, Move, QubitMapping,
                      RoutedCircuit, RoutingError, RoutingState, apply_move,
                      extract_features, initial_state, is_done, legal_move_ids,
                      move_from_id, routed_circuit, verify_routed)
from .topology import Topology


@dataclass
class SearchConfig:
    """Search hyperparameters; exposed one-to-one as CLI flags."""

    c: float = 1.2
    gamma: float = 0.95
    iterations: int = 300
    dirichlet_alpha: float = 0.2
    dirichlet_epsilon: float = 0.25
    reward_gate: float = 1.0
    reward_depth: float = 0.3
    seed: int = 0
    max_layers: int | None = None  # None -> 50 + 10 * input depth

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not 0.0 <= self.dirichlet_epsilon <= 1.0:
            raise ValueError("dirichlet_epsilon must be in [0, 1]")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must be in (0, 1]")


@dataclass
class TrainingSample:
    """One search-derived target: visit-count policy and mean-Q value."""

    features: FeatureSet
    move_ids: np.ndarray
    pi: np.ndarray
    v: float


class SearchNode:
    """Stats for one (state, action) pair: per-move visits, values, priors.

    `_eb` caches P/(1+N) and `_buf` is selection scratch, so one descent step
    costs two vector ops and an argmax.
    """

    __slots__ = ("state", "action", "move_ids", "P", "P0", "N", "Q", "R",
                 "children", "value", "features", "terminal", "total",
                 "_eb", "_buf")

    def __init__(self, state: RoutingState, action: ActionSet):
        self.state = state
        self.action = action
        self.terminal = is_done(state)
        self.total = 0
        self.features: FeatureSet | None = None
        if self.terminal:
            # nothing left to schedule: exact value, no moves
            self.move_ids = np.empty(0, dtype=np.int64)
            self.P = self.P0 = np.empty(0)
            self.N = np.empty(0)
            self.Q = self.R = np.empty(0)
            self.children: list[SearchNode | None] = []
            self.value = 0.0

    def expand(self, evaluator, topology: Topology):
        ids = np.array(legal_move_ids(self.state, self.action), dtype=np.int64)
        self.features = extract_features(self.state, self.action)
        ev = evaluator(self.features, topology)
        raw = np.asarray(ev.prior, dtype=np.float64)[ids]
        total = raw.sum()
        self.P0 = raw / total if total > 0 else np.full(len(ids), 1.0 / len(ids))
        self.P = self.P0
        self.move_ids = ids
        k = len(ids)
        self.N = np.zeros(k)
        self.Q = np.zeros(k)
        self.R = np.zeros(k)
        self.children = [None] * k
        self.value = float(ev.value)
        self._eb = self.P.copy()
        self._buf = np.empty(k)


def uct(node: SearchNode, m: Move | int, cfg: SearchConfig) -> float:
    """Selection score: Q + c * sqrt(sum N) / (1 + N) * P."""
    from .routing import move_id
    mid = m if isinstance(m, int) else move_id(m, node.state.topology)
    idx = int(np.where(node.move_ids == mid)[0][0])
    explore = cfg.c * math.sqrt(node.N.sum()) / (1.0 + node.N[idx]) * node.P[idx]
    return float(node.Q[idx] + explore)


def reward(s: RoutingState, a: ActionSet, m: Move, cfg: SearchConfig) -> float:
    """SWAPs are free; COMMIT pays per layer and earns per gate it unlocks."""
    if not m.is_commit:
        return 0.0
    after, _ = apply_move(s, a, m)
    scheduled = len(after.layers[-1])
    return cfg.reward_gate * scheduled - cfg.reward_depth


def _make_child(node: SearchNode, idx: int, evaluator, cfg: SearchConfig):
    mid = int(node.move_ids[idx])
    move = move_from_id(mid, node.state.topology)
    state, action = apply_move(node.state, node.action, move)
    if move.is_commit:
        r = cfg.reward_gate * len(state.layers[-1]) - cfg.reward_depth
    else:
        r = 0.0
    child = SearchNode(state, action)
    if not child.terminal:
        child.expand(evaluator, state.topology)
    return child, r


def backup(path, leaf_value: float, cfg: SearchConfig) -> None:
    """Discounted-return propagation leaf -> root with running-mean Q updates."""
    g = leaf_value
    gamma = cfg.gamma
    for node, idx in reversed(path):
        g = node.R[idx] + gamma * g
        n = node.N[idx] + 1.0
        node.N[idx] = n
        node.total += 1
        node.Q[idx] += (g - node.Q[idx]) / n
        node._eb[idx] = node.P[idx] / (1.0 + n)


def simulate_once(root: SearchNode, evaluator, cfg: SearchConfig) -> None:
    """One select/expand/evaluate/backup iteration."""
    node = root
    path = []
    leaf_value = 0.0
    while True:
        if node.terminal:
            break
        buf = node._buf
        np.multiply(node._eb, cfg.c * math.sqrt(node.total), out=buf)
        buf += node.Q
        idx = int(buf.argmax())  # ties resolve to the lowest move index
        path.append((node, idx))
        child = node.children[idx]
        if child is None:
            child, r = _make_child(node, idx, evaluator, cfg)
            node.children[idx] = child
            node.R[idx] = r
            leaf_value = child.value
            break
        node = child
    backup(path, leaf_value, cfg)


def apply_root_noise(root: SearchNode, rng: np.random.Generator, cfg: SearchConfig) -> None:
    """Mix Dirichlet noise into the root prior (reset from the pristine prior)."""
    if root.terminal or cfg.dirichlet_epsilon == 0.0 or len(root.move_ids) == 0:
        return
    noise = rng.dirichlet([cfg.dirichlet_alpha] * len(root.move_ids))
    root.P = (1.0 - cfg.dirichlet_epsilon) * root.P0 + cfg.dirichlet_epsilon * noise
    root._eb = root.P / (1.0 + root.N)


_Q_TIE = 1e-12


def choose_action(root: SearchNode):
    """Descend by max Q through visited moves until a COMMIT is chosen.

    Returns the committed ActionSet, one TrainingSample per traversed node,
    and the traversed (node, move-index) path for re-rooting.
    """
    samples: list[TrainingSample] = []
    path = []
    node = root
    while True:
        if node.total > 0 and node.features is not None:
            pi = node.N / node.N.sum()
            v = float((node.N * node.Q).sum() / node.N.sum())
            samples.append(TrainingSample(node.features, node.move_ids.copy(), pi, v))
        visited = node.N > 0
        if not visited.any():
            idx = 0  # unvisited interior node: COMMIT is always move id 0
        else:
            q = np.where(visited, node.Q, -np.inf)
            best = q.max()
            tie = visited & (q >= best - _Q_TIE)
            if tie.sum() > 1:
                # near-ties resolve to the most visited, then lowest move index
                n_masked = np.where(tie, node.N, -1.0)
                tie = tie & (node.N == n_masked.max())
            idx = int(np.argmax(tie))
        path.append((node, idx))
        if node.move_ids[idx] == 0:
            return node.action, samples, path
        child = node.children[idx]
        if child is None:
            return node.action, samples, path  # defensive: treat as commit point
        node = child


def reroot(path, evaluator, cfg: SearchConfig) -> SearchNode:
    """Promote the COMMIT child at the end of the chosen path to be the new root."""
    node, idx = path[-1]
    child = node.children[idx]
    if child is None:
        child, r = _make_child(node, idx, evaluator, cfg)
        node.children[idx] = child
        node.R[idx] = r
    return child


@dataclass
class RouteResult:
    routed: RoutedCircuit
    final_mapping: QubitMapping
    report: dict
    samples: list[TrainingSample]


def route(circuit: Circuit, topology: Topology, evaluator=None,
          cfg: SearchConfig | None = None, allocation: QubitMapping | None = None,
          swap_duration: int = 1, keep_redundant: bool = False,
          collect_samples: bool = False) -> RouteResult:
    """Route a circuit onto a topology with MCTS-selected SWAP layers.

    The output is verified structurally before being returned; a verification
    failure indicates an internal bug and raises RoutingError.
    """
    cfg = cfg or SearchConfig()
    if evaluator is None:
        from .evaluators import make_analytic_evaluator
        evaluator = make_analytic_evaluator(topology, gamma=cfg.gamma,
                                            gate_weight=cfg.reward_gate)
    work = circuit if keep_redundant else eliminate_redundant(circuit)
    input_depth = circuit_depth(work)
    max_layers = cfg.max_layers if cfg.max_layers is not None else 50 + 10 * input_depth
    rng = np.random.default_rng(cfg.seed)

    state = initial_state(work, topology, allocation, swap_duration)
    root = SearchNode(state, EMPTY_ACTION)
    if not root.terminal:
        root.expand(evaluator, topology)
    all_samples: list[TrainingSample] = []
    while not root.terminal:
        if root.state.timestep > max_layers:
            raise RoutingError(f"layer cap {max_layers} exceeded: non-termination bug")
        apply_root_noise(root, rng, cfg)
        for _ in range(cfg.iterations):
            simulate_once(root, evaluator, cfg)
        _, samples, path = choose_action(root)
        if collect_samples:
            all_samples.extend(samples)
        root = reroot(path, evaluator, cfg)

    routed, final_mapping = routed_circuit(root.state)
    check = verify_routed(work, routed, topology, state.initial_mapping)
    if not check:
        raise RoutingError(f"internal verification failed: {check.diagnosis} "
                           f"at layer {check.layer}")
    report = {
        "input_depth": input_depth,
        "output_depth": routed.depth,
        "swaps_added": routed.swap_count,
        "layers": [[[op[0], op[1][0], op[1][1]] for op in layer]
                   for layer in routed.layers],
        "wall_time_ms": None,
        "seed": cfg.seed,
    }
    return RouteResult(routed, final_mapping, report, all_samples)
