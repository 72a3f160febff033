"""Communication topology: static adjacency or range-limited neighbor sets in gradient space."""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import InvalidArgument


class Mode(str, Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


class EventKind(str, Enum):
    ADDED = "Added"
    REMOVED_VIOLATION = "RemovedViolation"


@dataclass(frozen=True)
class EdgeEvent:
    time: float
    edge: tuple
    kind: EventKind

    def __post_init__(self):
        i, j = self.edge
        if not i < j:
            raise InvalidArgument(f"edge {self.edge} is not in canonical i < j order")


def canonical(i, j):
    if i == j:
        raise InvalidArgument(f"self-loop ({i}, {j})")
    return (i, j) if i < j else (j, i)


def complete_edges(n):
    return {(i, j) for i in range(n) for j in range(i + 1, n)}


@dataclass
class Topology:
    mode: Mode
    n_agents: int
    edges: set = field(default_factory=set)
    r: Optional[float] = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.n_agents < 1:
            raise InvalidArgument(f"n_agents must be positive, got {self.n_agents}")
        if self.mode is Mode.DYNAMIC and not (self.r is not None and self.r > 0):
            raise InvalidArgument("dynamic topology needs a positive range r")
        edges = set()
        for i, j in self.edges:
            if not (0 <= i < self.n_agents and 0 <= j < self.n_agents):
                raise InvalidArgument(f"edge ({i}, {j}) references an agent outside 0..{self.n_agents - 1}")
            edges.add(canonical(int(i), int(j)))
        self.edges = edges

    @classmethod
    def static(cls, n_agents, edges):
        return cls(Mode.STATIC, n_agents, set(edges))

    @classmethod
    def dynamic(cls, n_agents, r, gradients=None):
        topo = cls(Mode.DYNAMIC, n_agents, set(), float(r))
        if gradients is not None:
            topo.edges = in_range_edges(gradients, topo.r)
        return topo

    @property
    def adjacency(self):
        A = np.zeros((self.n_agents, self.n_agents), dtype=bool)
        for i, j in self.edges:
            A[i, j] = A[j, i] = True
        return A

    def sorted_edges(self):
        return sorted(self.edges)

    def degree(self, i):
        return sum(1 for e in self.edges if i in e)

    def copy(self):
        return Topology(self.mode, self.n_agents, set(self.edges), self.r)


def mu(Xi, Xj) -> float:
    """Gradient-space gap between two agents."""
    return math.hypot(Xj[0] - Xi[0], Xj[1] - Xi[1])


def pairwise_mu(gradients):
    X = np.asarray(gradients, dtype=float)
    diff = X[None, :, :] - X[:, None, :]
    return np.hypot(diff[..., 0], diff[..., 1])


def in_range_edges(gradients, r):
    M = pairwise_mu(gradients)
    n = len(M)
    return {(i, j) for i in range(n) for j in range(i + 1, n) if r - M[i, j] > 0}


def neighbor_set(i, gradients, topo: Topology):
    if not 0 <= i < topo.n_agents:
        raise InvalidArgument(f"agent {i} out of range 0..{topo.n_agents - 1}")
    if len(gradients) != topo.n_agents:
        raise InvalidArgument(f"expected {topo.n_agents} gradients, got {len(gradients)}")
    if topo.mode is Mode.STATIC:
        return {b if a == i else a for a, b in topo.edges if i in (a, b)}
    return {j for j in range(topo.n_agents) if j != i and topo.r - mu(gradients[i], gradients[j]) > 0}


def update_edges(topo: Topology, gradients, t):
    """Re-evaluate the dynamic edge set at time t, mutating ``topo``.

    Edges leaving the range are removed and reported as RemovedViolation;
    under the barrier potential with a valid lambda this should never happen.
    """
    if topo.mode is not Mode.DYNAMIC:
        raise InvalidArgument("update_edges is only defined for dynamic topologies")
    current = in_range_edges(gradients, topo.r)
    events = [EdgeEvent(t, e, EventKind.REMOVED_VIOLATION) for e in sorted(topo.edges - current)]
    events += [EdgeEvent(t, e, EventKind.ADDED) for e in sorted(current - topo.edges)]
    topo.edges = current
    return events


def is_connected(topo: Topology) -> bool:
    n = topo.n_agents
    adj = [[] for _ in range(n)]
    for i, j in topo.edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        for nb in adj[queue.popleft()]:
            if nb not in seen:
                seen.add(nb)
                queue.append(nb)
    return len(seen) == n
