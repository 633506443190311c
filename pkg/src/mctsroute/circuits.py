"""Two-qubit circuit representation: parsing, redundancy removal, slicing, generation.

Circuits here are sequences of two-qubit gates over logical qubits. Single-qubit
gates from QASM input are kept as pass-through annotations: they never constrain
routing and do not count toward depth.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass


class CircuitError(ValueError):
    """Raised for malformed circuit text or invariant violations."""


@dataclass(frozen=True)
class GateOp:
    """A two-qubit gate: ordered qubit pair, one or more timesteps long."""

    id: int
    qubits: tuple[int, int]
    duration: int = 1


@dataclass(frozen=True)
class PassThrough:
    """Single-qubit gate annotation, excluded from routing and depth.

    `position` is the number of two-qubit gates on `qubit` that precede it,
    i.e. an index into that qubit's gate queue.
    """

    name: str
    qubit: int
    position: int


class Circuit:
    """Immutable two-qubit circuit with per-qubit gate queues.

    queues[q] lists the ids of the gates touching qubit q, in global order.
    """

    def __init__(self, qubit_count: int, gates: list[GateOp] | tuple[GateOp, ...],
                 passthrough: tuple[PassThrough, ...] = (), fmt: str = "gatelist"):
        if qubit_count < 1:
            raise CircuitError("qubit_count must be positive")
        gates = tuple(gates)
        seen_ids = set()
        queues: list[list[int]] = [[] for _ in range(qubit_count)]
        for g in gates:
            a, b = g.qubits
            if a == b:
                raise CircuitError(f"gate {g.id}: identical qubit operands")
            if not (0 <= a < qubit_count and 0 <= b < qubit_count):
                raise CircuitError(f"gate {g.id}: qubit index out of range")
            if g.id in seen_ids:
                raise CircuitError(f"duplicate gate id {g.id}")
            if g.duration < 1:
                raise CircuitError(f"gate {g.id}: duration must be positive")
            seen_ids.add(g.id)
            queues[a].append(g.id)
            queues[b].append(g.id)
        for p in passthrough:
            if not 0 <= p.qubit < qubit_count:
                raise CircuitError("pass-through qubit index out of range")
        self.qubit_count = qubit_count
        self.gates = gates
        self.queues = tuple(tuple(q) for q in queues)
        self.passthrough = tuple(passthrough)
        self.fmt = fmt
        self._by_id = {g.id: g for g in gates}
        # position of each gate inside its two queues, used by slicing and routing
        pos: dict[int, list[int]] = {}
        for q, queue in enumerate(self.queues):
            for i, gid in enumerate(queue):
                pos.setdefault(gid, []).append(i)
        self.queue_pos = {gid: tuple(v) for gid, v in pos.items()}

    def gate(self, gate_id: int) -> GateOp:
        return self._by_id[gate_id]

    def pairs(self) -> list[tuple[int, int]]:
        return [g.qubits for g in self.gates]

    def __len__(self) -> int:
        return len(self.gates)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Circuit)
                and self.qubit_count == other.qubit_count
                and self.gates == other.gates
                and self.passthrough == other.passthrough)

    def __repr__(self) -> str:
        return f"Circuit(qubits={self.qubit_count}, gates={len(self.gates)})"


def circuit_from_pairs(qubit_count: int, pairs, durations=None) -> Circuit:
    """Build a circuit from a list of qubit pairs, ids assigned in order."""
    durations = durations or [1] * len(pairs)
    gates = [GateOp(i, (int(a), int(b)), int(d))
             for i, ((a, b), d) in enumerate(zip(pairs, durations))]
    return Circuit(qubit_count, gates)


@dataclass(frozen=True)
class SliceDecomposition:
    """Greedy-earliest partition of a circuit into parallelizable slices."""

    slices: tuple[frozenset[int], ...]

    @property
    def depth(self) -> int:
        return len(self.slices)


def slice_circuit(c: Circuit) -> SliceDecomposition:
    """Place each gate in the earliest slice after both of its queue predecessors.

    The slice count is the circuit depth: this greedy assignment is optimal for
    slicings that respect per-qubit queue order.
    """
    level_of_qubit = [0] * c.qubit_count  # slices consumed so far per qubit
    slices: list[set[int]] = []
    for g in c.gates:
        a, b = g.qubits
        start = max(level_of_qubit[a], level_of_qubit[b])
        end = start + g.duration
        while len(slices) < end:
            slices.append(set())
        for t in range(start, end):
            slices[t].add(g.id)
        level_of_qubit[a] = end
        level_of_qubit[b] = end
    return SliceDecomposition(tuple(frozenset(s) for s in slices))


def depth(c: Circuit) -> int:
    """Minimum number of parallel slices, respecting queue order."""
    return slice_circuit(c).depth


def eliminate_redundant(c: Circuit) -> Circuit:
    """Drop any gate whose pair repeats its immediate predecessor in both queues.

    Applied to fixpoint: removing a duplicate exposes the gate before it, so
    runs of equal pairs collapse to a single gate.
    """
    kept: list[GateOp] = []
    last_kept: list[GateOp | None] = [None] * c.qubit_count
    for g in c.gates:
        a, b = g.qubits
        prev = last_kept[a]
        if prev is not None and prev is last_kept[b] and frozenset(prev.qubits) == frozenset(g.qubits):
            continue
        kept.append(g)
        last_kept[a] = g
        last_kept[b] = g
    gates = [GateOp(i, g.qubits, g.duration) for i, g in enumerate(kept)]
    return Circuit(c.qubit_count, gates, c.passthrough, c.fmt)


def random_circuit(qubit_count: int, gate_count: int, seed: int) -> Circuit:
    """Uniformly random two-qubit gates on distinct unordered pairs."""
    if qubit_count < 2:
        raise CircuitError("random circuits need at least 2 qubits")
    rng = random.Random(seed)
    pairs = []
    for _ in range(gate_count):
        a, b = rng.sample(range(qubit_count), 2)
        pairs.append((min(a, b), max(a, b)))
    return circuit_from_pairs(qubit_count, pairs)


def cdr(pairs) -> float:
    """Mean output/input depth ratio over a corpus of circuits."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cdr of an empty corpus is undefined")
    ratios = []
    for din, dout in pairs:
        if din <= 0:
            raise ValueError("input depth must be positive")
        ratios.append(dout / din)
    return math.fsum(ratios) / len(ratios)


# --- parsing and serialization ---------------------------------------------

_QASM_STMT = re.compile(r"^\s*(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*(?P<params>\([^)]*\))?\s*(?P<args>.*)$")
_QASM_ARG = re.compile(r"^(?P<reg>[A-Za-z_][A-Za-z0-9_]*)\[(?P<idx>\d+)\]$")


def parse_circuit(text: str, fmt: str = "gatelist") -> Circuit:
    """Parse circuit text in `gatelist` or `qasm2` format."""
    if fmt == "gatelist":
        return _parse_gatelist(text)
    if fmt in ("qasm2", "qasm2-subset", "qasm"):
        return _parse_qasm2(text)
    raise CircuitError(f"unknown circuit format: {fmt}")


def _parse_gatelist(text: str) -> Circuit:
    qubit_count = None
    pairs: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "qubits":
            if qubit_count is not None:
                raise CircuitError(f"line {lineno}: repeated qubits header")
            if len(parts) != 2 or not parts[1].isdigit():
                raise CircuitError(f"line {lineno}: expected 'qubits N'")
            qubit_count = int(parts[1])
        elif parts[0] == "cx":
            if qubit_count is None:
                raise CircuitError(f"line {lineno}: gate before qubits header")
            if len(parts) != 3:
                raise CircuitError(f"line {lineno}: expected 'cx A B'")
            try:
                a, b = int(parts[1]), int(parts[2])
            except ValueError:
                raise CircuitError(f"line {lineno}: qubit indices must be integers") from None
            if a == b:
                raise CircuitError(f"line {lineno}: identical qubit operands")
            if not (0 <= a < qubit_count and 0 <= b < qubit_count):
                raise CircuitError(f"line {lineno}: qubit index out of range")
            pairs.append((a, b))
        else:
            raise CircuitError(f"line {lineno}: unknown directive '{parts[0]}'")
    if qubit_count is None:
        raise CircuitError("missing 'qubits N' header")
    return circuit_from_pairs(qubit_count, pairs)


def _parse_qasm2(text: str) -> Circuit:
    # statement-per-';' parse of the supported subset; line numbers tracked for messages
    no_comments = []
    for raw in text.splitlines():
        no_comments.append(raw.split("//", 1)[0])
    qubit_count = None
    reg_name = None
    pairs: list[tuple[int, int]] = []
    passthrough: list[PassThrough] = []
    gates_seen_per_qubit: list[int] = []
    saw_header = False

    def qubit_of(arg: str, lineno: int) -> int:
        m = _QASM_ARG.match(arg.strip())
        if not m or m.group("reg") != reg_name:
            raise CircuitError(f"line {lineno}: expected {reg_name}[i], got '{arg.strip()}'")
        idx = int(m.group("idx"))
        if not 0 <= idx < qubit_count:
            raise CircuitError(f"line {lineno}: qubit index out of range")
        return idx

    for lineno, line in enumerate(no_comments, start=1):
        for stmt in line.split(";"):
            stmt = stmt.strip()
            if not stmt:
                continue
            m = _QASM_STMT.match(stmt)
            if not m:
                raise CircuitError(f"line {lineno}: cannot parse '{stmt}'")
            name = m.group("name")
            params = m.group("params") or ""
            args = m.group("args").strip()
            if name == "OPENQASM":
                saw_header = True
                continue
            if name == "include":
                continue
            if name in ("measure", "barrier", "creg", "if", "reset", "gate", "opaque"):
                raise CircuitError(f"line {lineno}: unsupported QASM construct '{name}'")
            if name == "qreg":
                if reg_name is not None:
                    raise CircuitError(f"line {lineno}: unsupported QASM construct "
                                       "'multiple quantum registers'")
                rm = _QASM_ARG.match(args)
                if not rm:
                    raise CircuitError(f"line {lineno}: malformed qreg declaration")
                reg_name = rm.group("reg")
                qubit_count = int(rm.group("idx"))
                if qubit_count < 1:
                    raise CircuitError(f"line {lineno}: empty quantum register")
                gates_seen_per_qubit = [0] * qubit_count
                continue
            if reg_name is None:
                raise CircuitError(f"line {lineno}: gate before qreg declaration")
            operands = [a for a in args.split(",") if a.strip()]
            if name in ("cx", "CX"):
                if len(operands) != 2:
                    raise CircuitError(f"line {lineno}: cx takes two operands")
                a, b = qubit_of(operands[0], lineno), qubit_of(operands[1], lineno)
                if a == b:
                    raise CircuitError(f"line {lineno}: identical qubit operands")
                pairs.append((a, b))
                gates_seen_per_qubit[a] += 1
                gates_seen_per_qubit[b] += 1
            elif len(operands) == 1:
                q = qubit_of(operands[0], lineno)
                passthrough.append(PassThrough(name + params, q, gates_seen_per_qubit[q]))
            else:
                raise CircuitError(f"line {lineno}: unsupported QASM construct '{name}' "
                                   "on multiple qubits")
    if not saw_header:
        raise CircuitError("missing OPENQASM header")
    if reg_name is None:
        raise CircuitError("missing qreg declaration")
    gates = [GateOp(i, p) for i, p in enumerate(pairs)]
    return Circuit(qubit_count, gates, tuple(passthrough), fmt="qasm2")


def serialize_circuit(c: Circuit, fmt: str | None = None) -> str:
    """Render a circuit back to text in its own (or the given) format."""
    fmt = fmt or c.fmt
    if fmt == "gatelist":
        lines = [f"qubits {c.qubit_count}"]
        lines += [f"cx {a} {b}" for a, b in c.pairs()]
        return "\n".join(lines) + "\n"
    if fmt in ("qasm2", "qasm2-subset", "qasm"):
        lines = ['OPENQASM 2.0;', 'include "qelib1.inc";', f"qreg q[{c.qubit_count}];"]
        # interleave pass-through gates at their recorded queue positions
        by_slot: dict[tuple[int, int], list[str]] = {}
        for p in c.passthrough:
            by_slot.setdefault((p.qubit, p.position), []).append(p.name)
        seen = [0] * c.qubit_count
        def flush(q: int):
            for name in by_slot.pop((q, seen[q]), []):
                lines.append(f"{name} q[{q}];")
        for q in range(c.qubit_count):
            flush(q)
        for g in c.gates:
            a, b = g.qubits
            lines.append(f"cx q[{a}],q[{b}];")
            seen[a] += 1
            seen[b] += 1
            flush(a)
            flush(b)
        return "\n".join(lines) + "\n"
    raise CircuitError(f"unknown circuit format: {fmt}")
