"""Routing state machine: mapping, locks, greedy scheduling, moves, verification.

A routing run advances one output layer (timestep) at a time. Gates that are
current (head of both qubits' queues) and local (mapped to adjacent nodes) are
scheduled greedily; SWAPs for the same layer are accumulated move-by-move in an
ActionSet and take effect on COMMIT. Per-node busy counters model operations
that span several timesteps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .circuits import Circuit, PassThrough
from .topology import Topology


class RoutingError(ValueError):
    """Raised for invalid allocations, illegal moves, or premature extraction."""


@dataclass(frozen=True)
class QubitMapping:
    """Bijection between qubits and nodes; idle qubits pad unused nodes."""

    qubit_to_node: tuple[int, ...]
    node_to_qubit: tuple[int, ...]

    @classmethod
    def identity(cls, node_count: int) -> "QubitMapping":
        ids = tuple(range(node_count))
        return cls(ids, ids)

    @classmethod
    def from_allocation(cls, allocation, node_count: int) -> "QubitMapping":
        """Extend an injective program-qubit -> node map to a full bijection."""
        alloc = [int(x) for x in allocation]
        if len(alloc) > node_count:
            raise RoutingError(f"{len(alloc)} qubits do not fit on {node_count} nodes")
        if len(set(alloc)) != len(alloc):
            raise RoutingError("allocation is not injective")
        for node in alloc:
            if not 0 <= node < node_count:
                raise RoutingError(f"allocation node {node} out of range")
        free = [n for n in range(node_count) if n not in set(alloc)]
        q2n = alloc + free  # idle qubits occupy the remaining nodes in order
        n2q = [0] * node_count
        for q, n in enumerate(q2n):
            n2q[n] = q
        return cls(tuple(q2n), tuple(n2q))

    @classmethod
    def random(cls, qubit_count: int, node_count: int, rng) -> "QubitMapping":
        nodes = list(range(node_count))
        rng.shuffle(nodes)
        return cls.from_allocation(nodes[:qubit_count], node_count)


@dataclass(frozen=True)
class Move:
    """One action-construction step: a SWAP on an edge, or COMMIT (swap=None)."""

    swap: tuple[int, int] | None = None

    @property
    def is_commit(self) -> bool:
        return self.swap is None


COMMIT = Move()


@dataclass(frozen=True)
class ActionSet:
    """Node-disjoint SWAPs accumulated for the current timestep."""

    swaps: frozenset[tuple[int, int]] = frozenset()

    def nodes(self) -> frozenset[int]:
        return frozenset(n for pair in self.swaps for n in pair)

    def with_swap(self, pair: tuple[int, int]) -> "ActionSet":
        return ActionSet(self.swaps | {pair})


EMPTY_ACTION = ActionSet()

# Canonical move-id space per topology: 0 is COMMIT, 1+i is a SWAP on edge i.


def move_count(t: Topology) -> int:
    return len(t.edges) + 1


def move_from_id(mid: int, t: Topology) -> Move:
    return COMMIT if mid == 0 else Move(swap=t.edges[mid - 1])


def move_id(m: Move, t: Topology) -> int:
    return 0 if m.is_commit else 1 + t.edge_index[m.swap]


class RoutingState:
    """Immutable snapshot of a routing run.

    `layers[t]` holds the operations started at timestep t as
    ("cx", (na, nb), gate_id) and ("swap", (na, nb)) entries; there is always
    one layer per elapsed timestep, empty layers included.
    """

    __slots__ = ("circuit", "topology", "swap_duration", "mapping", "progress",
                 "locks", "timestep", "layers", "initial_mapping")

    def __init__(self, circuit: Circuit, topology: Topology, swap_duration: int,
                 mapping: QubitMapping, progress: tuple[int, ...], locks: tuple[int, ...],
                 timestep: int, layers: tuple, initial_mapping: QubitMapping):
        self.circuit = circuit
        self.topology = topology
        self.swap_duration = swap_duration
        self.mapping = mapping
        self.progress = progress
        self.locks = locks
        self.timestep = timestep
        self.layers = layers
        self.initial_mapping = initial_mapping

    def remaining_gates(self) -> int:
        # every scheduled gate advanced both of its qubits' progress by 1
        return len(self.circuit.gates) - sum(self.progress) // 2


def is_done(s: RoutingState) -> bool:
    """True once every qubit's queue is fully scheduled."""
    queues = s.circuit.queues
    return all(s.progress[q] == len(queues[q]) for q in range(s.circuit.qubit_count))


def _greedy(circuit: Circuit, topology: Topology, q2n, progress: list, locks: list):
    """Schedule current+local+unlocked gates in gate-id order; mutates progress/locks.

    Progress advancement can expose new current gates, but their nodes were just
    locked, so they wait for a later timestep.
    """
    queues = circuit.queues
    ops = []
    while True:
        candidates = []
        for q in range(circuit.qubit_count):
            p = progress[q]
            if p >= len(queues[q]):
                continue
            gid = queues[q][p]
            g = circuit.gate(gid)
            a, b = g.qubits
            other = b if a == q else a
            if q < other:
                po = progress[other]
                if po < len(queues[other]) and queues[other][po] == gid:
                    candidates.append(gid)
        scheduled_any = False
        for gid in sorted(candidates):
            g = circuit.gate(gid)
            a, b = g.qubits
            na, nb = q2n[a], q2n[b]
            if locks[na] == 0 and locks[nb] == 0 and topology.has_edge(na, nb):
                locks[na] = g.duration
                locks[nb] = g.duration
                progress[a] += 1
                progress[b] += 1
                ops.append(("cx", (na, nb), gid))
                scheduled_any = True
        if not scheduled_any:
            return ops


def initial_state(circuit: Circuit, topology: Topology,
                  allocation: QubitMapping | None = None,
                  swap_duration: int = 1) -> RoutingState:
    """Timestep-0 state; the greedy pass for layer 0 has already run."""
    if circuit.qubit_count > topology.node_count:
        raise RoutingError(f"circuit has {circuit.qubit_count} qubits but device only "
                           f"{topology.node_count} nodes")
    if allocation is None:
        allocation = QubitMapping.identity(topology.node_count)
    if len(allocation.qubit_to_node) != topology.node_count:
        raise RoutingError("allocation must cover all nodes (use QubitMapping.from_allocation)")
    if swap_duration < 1:
        raise RoutingError("swap_duration must be positive")
    progress = [0] * circuit.qubit_count
    locks = [0] * topology.node_count
    q2n = list(allocation.qubit_to_node)
    ops = _greedy(circuit, topology, q2n, progress, locks)
    return RoutingState(circuit, topology, swap_duration, allocation,
                        tuple(progress), tuple(locks), 0, (tuple(ops),), allocation)


def greedy_schedule(s: RoutingState) -> tuple[RoutingState, list[int]]:
    """Re-run the greedy pass on the current timestep (idempotent on a fresh state)."""
    progress = list(s.progress)
    locks = list(s.locks)
    ops = _greedy(s.circuit, s.topology, s.mapping.qubit_to_node, progress, locks)
    layers = s.layers[:-1] + (s.layers[-1] + tuple(ops),)
    state = RoutingState(s.circuit, s.topology, s.swap_duration, s.mapping,
                         tuple(progress), tuple(locks), s.timestep, layers,
                         s.initial_mapping)
    return state, [op[2] for op in ops]


def legal_moves(s: RoutingState, a: ActionSet) -> list[Move]:
    """COMMIT plus every SWAP on an edge whose nodes are unlocked and unused."""
    used = a.nodes()
    moves = [COMMIT]
    locks = s.locks
    for na, nb in s.topology.edges:
        if locks[na] == 0 and locks[nb] == 0 and na not in used and nb not in used:
            moves.append(Move(swap=(na, nb)))
    return moves


def legal_move_ids(s: RoutingState, a: ActionSet) -> list[int]:
    """Same as legal_moves, as indices into the canonical move space."""
    used = a.nodes()
    locks = s.locks
    ids = [0]
    for i, (na, nb) in enumerate(s.topology.edges):
        if locks[na] == 0 and locks[nb] == 0 and na not in used and nb not in used:
            ids.append(i + 1)
    return ids


def _commit(s: RoutingState, a: ActionSet) -> tuple[RoutingState, int]:
    """Apply the action set, advance the clock, release locks, greedy-schedule."""
    q2n = list(s.mapping.qubit_to_node)
    n2q = list(s.mapping.node_to_qubit)
    locks = list(s.locks)
    cur_layer = list(s.layers[-1])
    for na, nb in sorted(a.swaps):
        qa, qb = n2q[na], n2q[nb]
        n2q[na], n2q[nb] = qb, qa
        q2n[qa], q2n[qb] = nb, na
        locks[na] = s.swap_duration
        locks[nb] = s.swap_duration
        cur_layer.append(("swap", (na, nb)))
    locks = [v - 1 if v > 0 else 0 for v in locks]
    progress = list(s.progress)
    ops = _greedy(s.circuit, s.topology, q2n, progress, locks)
    layers = s.layers[:-1] + (tuple(cur_layer), tuple(ops))
    mapping = QubitMapping(tuple(q2n), tuple(n2q))
    state = RoutingState(s.circuit, s.topology, s.swap_duration, mapping,
                         tuple(progress), tuple(locks), s.timestep + 1, layers,
                         s.initial_mapping)
    return state, len(ops)


def apply_move(s: RoutingState, a: ActionSet, m: Move) -> tuple[RoutingState, ActionSet]:
    """SWAP moves grow the action set; COMMIT applies it and opens the next layer."""
    if m.is_commit:
        state, _ = _commit(s, a)
        return state, EMPTY_ACTION
    pair = m.swap
    if pair not in s.topology.edge_index:
        raise RoutingError(f"illegal move: ({pair[0]},{pair[1]}) is not an edge")
    na, nb = pair
    if s.locks[na] > 0 or s.locks[nb] > 0:
        raise RoutingError(f"illegal move: node busy for swap ({na},{nb})")
    if na in a.nodes() or nb in a.nodes():
        raise RoutingError(f"illegal move: node already used by the action ({na},{nb})")
    return s, a.with_swap(pair)


@dataclass(frozen=True)
class FeatureSet:
    """Featurization of the hypothetical state after committing an action.

    `target_of[i]` is the node holding the partner of the next unscheduled gate
    of the qubit at node i (-1 when it has none). `locked_nodes` covers nodes
    used by the just-committed layer plus nodes still busy from longer
    operations; `locked_edges` are the edges touching them.
    """

    node_count: int
    target_of: tuple[int, ...]
    locked_nodes: frozenset[int]
    locked_edges: frozenset[tuple[int, int]]
    remaining_targets: tuple[int, ...]
    resident_remaining: tuple[int, ...]

    @property
    def node_targets(self) -> np.ndarray:
        m = np.zeros((self.node_count, self.node_count), dtype=bool)
        for i, j in enumerate(self.target_of):
            if j >= 0:
                m[i, j] = True
        return m


def _features_of_state(s: RoutingState) -> FeatureSet:
    circuit, topo = s.circuit, s.topology
    q2n = s.mapping.qubit_to_node
    n2q = s.mapping.node_to_qubit
    queues = circuit.queues
    n = topo.node_count
    target_of = [-1] * n
    remaining = []
    for q in range(circuit.qubit_count):
        p = s.progress[q]
        remaining.append(len(queues[q]) - p)
        if p < len(queues[q]):
            g = circuit.gate(queues[q][p])
            a, b = g.qubits
            target_of[q2n[q]] = q2n[b if a == q else a]
    locked = {i for i, v in enumerate(s.locks) if v > 0}
    if s.timestep >= 1:
        for op in s.layers[s.timestep - 1]:
            locked.update(op[1])
    locked_edges = frozenset(e for e in topo.edges if e[0] in locked or e[1] in locked)
    qc = circuit.qubit_count
    resident = tuple(remaining[n2q[i]] if n2q[i] < qc else 0 for i in range(n))
    return FeatureSet(n, tuple(target_of), frozenset(locked), locked_edges,
                      tuple(remaining), resident)


def extract_features(s: RoutingState, a: ActionSet) -> FeatureSet:
    """Features of the state reached by committing `a` to `s`."""
    committed, _ = _commit(s, a)
    return _features_of_state(committed)


@dataclass(frozen=True)
class RoutedCircuit:
    """Routing output: per-timestep operation layers on physical nodes."""

    node_count: int
    layers: tuple
    initial_mapping: QubitMapping
    final_mapping: QubitMapping
    swap_duration: int = 1
    gate_durations: dict = field(default_factory=dict)
    passthrough: tuple = ()  # (name, node, layer) triples
    fmt: str = "gatelist"

    @property
    def depth(self) -> int:
        d = 0
        for t, layer in enumerate(self.layers):
            for op in layer:
                dur = self.swap_duration if op[0] == "swap" else self.gate_durations.get(op[2], 1)
                d = max(d, t + dur)
        return d

    @property
    def swap_count(self) -> int:
        return sum(op[0] == "swap" for layer in self.layers for op in layer)

    def serialize(self) -> str:
        if self.fmt == "gatelist":
            if self.passthrough:
                raise RoutingError("pass-through gates require qasm output")
            chunks = [f"qubits {self.node_count}"]
            for layer in self.layers:
                chunks.append("")
                for op in layer:
                    chunks.append(f"{op[0]} {op[1][0]} {op[1][1]}")
            return "\n".join(chunks) + "\n"
        lines = ['OPENQASM 2.0;', 'include "qelib1.inc";', f"qreg q[{self.node_count}];"]
        onq = {}
        for name, node, layer in self.passthrough:
            onq.setdefault(layer, []).append((name, node))
        for t, layer in enumerate(self.layers):
            lines.append("")
            for op in layer:
                (na, nb) = op[1]
                lines.append(f"{op[0]} q[{na}],q[{nb}];")
            for name, node in onq.get(t, []):
                lines.append(f"{name} q[{node}];")
        return "\n".join(lines) + "\n"


def routed_circuit(s: RoutingState) -> tuple[RoutedCircuit, QubitMapping]:
    """Assemble the output layers and final mapping; requires a finished state."""
    if not is_done(s):
        raise RoutingError("routing is not finished")
    layers = list(s.layers)
    while layers and not layers[-1]:
        layers.pop()
    placements = _place_passthrough(s.circuit, tuple(layers), s.initial_mapping)
    routed = RoutedCircuit(
        node_count=s.topology.node_count,
        layers=tuple(layers),
        initial_mapping=s.initial_mapping,
        final_mapping=s.mapping,
        swap_duration=s.swap_duration,
        gate_durations={g.id: g.duration for g in s.circuit.gates if g.duration != 1},
        passthrough=placements,
        fmt=s.circuit.fmt if s.circuit.passthrough else "gatelist",
    )
    return routed, s.mapping


def _place_passthrough(circuit: Circuit, layers: tuple, initial: QubitMapping):
    """Pin each single-qubit annotation to its qubit's node at its queue position."""
    if not circuit.passthrough:
        return ()
    n2q = list(initial.node_to_qubit)
    q2n = list(initial.qubit_to_node)
    seen = [0] * circuit.qubit_count
    # (qubit, position) -> (node, layer) as the replay passes that point
    anchor = {(q, 0): (q2n[q], 0) for q in range(circuit.qubit_count)}
    for t, layer in enumerate(layers):
        for op in layer:
            if op[0] == "cx":
                na, nb = op[1]
                for q in (n2q[na], n2q[nb]):
                    seen[q] += 1
                    anchor[(q, seen[q])] = (q2n[q], t)
        for op in layer:
            if op[0] == "swap":
                na, nb = op[1]
                qa, qb = n2q[na], n2q[nb]
                n2q[na], n2q[nb] = qb, qa
                q2n[qa], q2n[qb] = nb, na
    out = []
    for p in circuit.passthrough:
        node, layer = anchor[(p.qubit, p.position)]
        out.append((p.name, node, layer))
    return tuple(out)


@dataclass(frozen=True)
class VerificationResult:
    ok: bool
    diagnosis: str | None = None
    layer: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_routed(original: Circuit, result, topology: Topology,
                  allocation: QubitMapping | None = None,
                  swap_duration: int | None = None) -> VerificationResult:
    """Structurally replay a routed output against the original circuit.

    Checks adjacency of every two-qubit operation, node-disjointness per layer
    including multi-timestep busy windows, and that the logical gates executed
    match each qubit's queue order exactly once each.
    """
    if isinstance(result, RoutedCircuit):
        layers = result.layers
        allocation = allocation or result.initial_mapping
        swap_duration = swap_duration or result.swap_duration
        durations = result.gate_durations
    else:
        layers = tuple(result)
        durations = {}
    if allocation is None:
        allocation = QubitMapping.identity(topology.node_count)
    swap_duration = swap_duration or 1
    n2q = list(allocation.node_to_qubit)
    q2n = list(allocation.qubit_to_node)
    progress = [0] * original.qubit_count
    busy = [0] * topology.node_count
    queues = original.queues
    for t, layer in enumerate(layers):
        used = set()
        swaps = []
        for op in layer:
            kind, (na, nb) = op[0], op[1]
            if kind not in ("cx", "swap"):
                return VerificationResult(False, f"unknown operation '{kind}'", t)
            if not topology.has_edge(na, nb):
                return VerificationResult(False, "non-adjacent gate", t)
            if na in used or nb in used:
                return VerificationResult(False, "parallelism violation", t)
            if busy[na] > 0 or busy[nb] > 0:
                return VerificationResult(False, "lock violation", t)
            used.add(na)
            used.add(nb)
            if kind == "swap":
                swaps.append((na, nb))
                dur = swap_duration
            else:
                qa, qb = n2q[na], n2q[nb]
                if qa >= original.qubit_count or qb >= original.qubit_count:
                    return VerificationResult(False, "gate order violation", t)
                pa, pb = progress[qa], progress[qb]
                if pa >= len(queues[qa]) or pb >= len(queues[qb]):
                    return VerificationResult(False, "gate order violation", t)
                gid = queues[qa][pa]
                if queues[qb][pb] != gid or frozenset(original.gate(gid).qubits) != {qa, qb}:
                    return VerificationResult(False, "gate order violation", t)
                progress[qa] += 1
                progress[qb] += 1
                dur = original.gate(gid).duration if gid not in durations else durations[gid]
            # node occupied for dur layers starting here
            pending = dur - 1
            busy[na] = max(busy[na], pending + 1)
            busy[nb] = max(busy[nb], pending + 1)
        for na, nb in swaps:
            qa, qb = n2q[na], n2q[nb]
            n2q[na], n2q[nb] = qb, qa
            q2n[qa], q2n[qb] = nb, na
        busy = [v - 1 if v > 0 else 0 for v in busy]
    if any(progress[q] != len(queues[q]) for q in range(original.qubit_count)):
        return VerificationResult(False, "unscheduled gates remain", len(layers))
    return VerificationResult(True)
