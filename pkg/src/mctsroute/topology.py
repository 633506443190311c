"""Device connectivity graphs and all-pairs hop distances."""

from __future__ import annotations

import re
from collections import deque
from importlib import resources

import numpy as np


class TopologyError(ValueError):
    """Raised for malformed or unusable connectivity graphs."""


class Topology:
    """Undirected, connected device graph over nodes 0..node_count-1.

    Edges are stored sorted, as (low, high) pairs; `edge_index` gives each
    edge's position in that canonical order.
    """

    def __init__(self, node_count: int, edges, name: str = "custom"):
        if node_count < 1:
            raise TopologyError("node_count must be positive")
        canon = set()
        for a, b in edges:
            a, b = int(a), int(b)
            if a == b:
                raise TopologyError(f"self-loop on node {a}")
            if not (0 <= a < node_count and 0 <= b < node_count):
                raise TopologyError(f"edge ({a},{b}) out of range")
            canon.add((min(a, b), max(a, b)))
        self.node_count = node_count
        self.edges: tuple[tuple[int, int], ...] = tuple(sorted(canon))
        self.name = name
        self.edge_index = {e: i for i, e in enumerate(self.edges)}
        nbrs: list[list[int]] = [[] for _ in range(node_count)]
        for a, b in self.edges:
            nbrs[a].append(b)
            nbrs[b].append(a)
        self.neighbors = tuple(tuple(sorted(n)) for n in nbrs)
        if node_count > 1 and not self._connected():
            raise TopologyError("graph is disconnected")
        self._dist: DistanceTable | None = None

    def _connected(self) -> bool:
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        return len(seen) == self.node_count

    def has_edge(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.edge_index

    def distances(self) -> "DistanceTable":
        if self._dist is None:
            self._dist = compute_distances(self)
        return self._dist

    def __repr__(self) -> str:
        return f"Topology({self.name}, nodes={self.node_count}, edges={len(self.edges)})"


class DistanceTable:
    """All-pairs hop counts for a topology."""

    def __init__(self, dist: np.ndarray):
        self.dist = dist
        self.diameter = int(dist.max())

    def __getitem__(self, pair) -> int:
        i, j = pair
        return int(self.dist[i, j])


def compute_distances(t: Topology) -> DistanceTable:
    """BFS from every node; hop-count matrix."""
    n = t.node_count
    dist = np.full((n, n), -1, dtype=np.int64)
    for src in range(n):
        dist[src, src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in t.neighbors[u]:
                if dist[src, v] < 0:
                    dist[src, v] = dist[src, u] + 1
                    queue.append(v)
    return DistanceTable(dist)


def grid(m: int, n: int) -> Topology:
    if m < 1 or n < 1 or m * n < 2:
        raise TopologyError("grid needs at least 2 nodes")
    edges = []
    for r in range(m):
        for c in range(n):
            i = r * n + c
            if c + 1 < n:
                edges.append((i, i + 1))
            if r + 1 < m:
                edges.append((i, i + n))
    return Topology(m * n, edges, name=f"grid:{m}x{n}")


def line(n: int) -> Topology:
    if n < 2:
        raise TopologyError("line needs at least 2 nodes")
    return Topology(n, [(i, i + 1) for i in range(n - 1)], name=f"line:{n}")


def ring(n: int) -> Topology:
    if n < 3:
        raise TopologyError("ring needs at least 3 nodes")
    return Topology(n, [(i, (i + 1) % n) for i in range(n)], name=f"ring:{n}")


def from_edge_list(node_count: int, pairs, name: str = "custom") -> Topology:
    return Topology(node_count, pairs, name=name)


def load_edge_file(path_or_text: str, name: str = "file") -> Topology:
    """Parse the edge-list format: 'nodes N' then 'edge A B' lines ('#' comments)."""
    text = path_or_text
    node_count = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if parts[0] == "nodes" and len(parts) == 2:
            node_count = int(parts[1])
        elif parts[0] == "edge" and len(parts) == 3:
            if node_count is None:
                raise TopologyError(f"line {lineno}: edge before nodes header")
            edges.append((int(parts[1]), int(parts[2])))
        else:
            raise TopologyError(f"line {lineno}: cannot parse '{stripped}'")
    if node_count is None:
        raise TopologyError("missing 'nodes N' header")
    return Topology(node_count, edges, name=name)


def _bundled(name: str) -> Topology:
    text = resources.files("mctsroute.data").joinpath(f"{name}.edges").read_text()
    return load_edge_file(text, name=name)


def builtin(spec: str) -> Topology:
    """Resolve a topology spec: grid:MxN | line:N | ring:N | ibmqx20 | sycamore | file:PATH."""
    spec = spec.strip()
    if spec == "ibmqx20":
        return _bundled("ibmqx20")
    if spec == "sycamore":
        return _bundled("sycamore")
    m = re.fullmatch(r"grid:(\d+)x(\d+)", spec)
    if m:
        return grid(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"line:(\d+)", spec)
    if m:
        return line(int(m.group(1)))
    m = re.fullmatch(r"ring:(\d+)", spec)
    if m:
        return ring(int(m.group(1)))
    m = re.fullmatch(r"file:(.+)", spec)
    if m:
        with open(m.group(1)) as f:
            return load_edge_file(f.read(), name=m.group(1))
    raise TopologyError(f"unknown topology spec: '{spec}'")
