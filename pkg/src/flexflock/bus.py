"""Synchronous gradient exchange along the communication graph.

The only thing an agent ever sends is its field gradient in the shared
North-East frame. All agents share that orientation, so frame conversion is
the identity; the tag is kept on each sample anyway.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .graph import Topology, neighbor_set


@dataclass(frozen=True)
class GradientSample:
    sender: int
    X: tuple
    stamp: int
    frame: str = "NE"


def publish_all(gradients, step, topo: Topology):
    """Build every agent's mailbox for one synchronous exchange.

    ``mailbox[i]`` holds exactly one sample per neighbor of i, ordered by sender.
    """
    X = np.asarray(gradients, dtype=float)
    if len(X) != topo.n_agents:
        raise InvalidArgument(f"expected {topo.n_agents} gradients, got {len(X)}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgument("gradients must be finite")
    samples = [GradientSample(j, (float(X[j, 0]), float(X[j, 1])), step) for j in range(len(X))]
    return [[samples[j] for j in sorted(neighbor_set(i, X, topo))] for i in range(topo.n_agents)]


def message_count(mailboxes):
    return sum(len(box) for box in mailboxes)
