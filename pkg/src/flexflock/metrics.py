"""Run diagnostics: spacing errors, deviation energies, Lyapunov value, safety margins."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import potential as pot
from .graph import is_connected
from .potential import PotentialKind


@dataclass(frozen=True)
class MetricsSnapshot:
    t: float
    sum_abs_e: float
    max_abs_e: float
    E_dev: float
    E_asp: float
    V_lyap: float
    connected: bool
    min_mu: float
    max_abs_v: float
    max_abs_omega: float
    n_edges: int

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]


def deviation_energy(edges, d_nom):
    """Mean-square deviation of the gaps from d_nom, normalized by (|E| + 1)."""
    edges = list(edges)
    if not edges:
        return 0.0
    return sum((e.mu - d_nom) ** 2 for e in edges) / (len(edges) + 1)


def asp_energy(edges):
    edges = list(edges)
    if not edges:
        return 0.0
    return sum(e.e**2 for e in edges) / (len(edges) + 1)


def lyapunov(edges, kind: PotentialKind, n_agents):
    """Sum of all agent potentials plus n_agents / 2.

    Each undirected edge enters the potential of both endpoints. The
    orientation part (cos^2 + sin^2) / 2 per agent is the constant 1/2.
    """
    edges = list(edges)
    if not edges:
        return n_agents / 2.0
    mu = np.array([e.mu for e in edges])
    err = np.array([e.e for e in edges])
    return float(2.0 * np.sum(pot.values(kind, mu, err))) + n_agents / 2.0


def epsilon(E_dev, d_nom):
    return math.sqrt(E_dev) / d_nom


def snapshot(state, controls, dyn, edges=None) -> MetricsSnapshot:
    edges = state.edge_states(dyn) if edges is None else edges
    vals = list(edges.values())
    abs_e = [abs(e.e) for e in vals]
    u = np.asarray(controls, dtype=float).reshape(-1, 2)
    return MetricsSnapshot(
        t=state.t,
        sum_abs_e=float(sum(abs_e)),
        max_abs_e=float(max(abs_e, default=0.0)),
        E_dev=deviation_energy(vals, dyn.spacing.d_nom),
        E_asp=asp_energy(vals),
        V_lyap=lyapunov(vals, dyn.control.potential, state.n_agents),
        connected=is_connected(state.topo),
        # only connected pairs matter for collisions
        min_mu=float(min((e.mu for e in vals), default=math.inf)),
        max_abs_v=float(np.max(np.abs(u[:, 0]), initial=0.0)),
        max_abs_omega=float(np.max(np.abs(u[:, 1]), initial=0.0)),
        n_edges=len(vals),
    )


def lyapunov_increases(trace, tol=1e-6):
    """Consecutive recorded pairs where V grew by more than ``tol``.

    Pairs straddling an edge event are skipped: admitting an edge adds a
    fresh potential term and is allowed to raise V.
    """
    event_times = sorted({ev.time for ev in trace.edge_events})
    bad = []
    ms = trace.metrics
    for a, b in zip(ms, ms[1:]):
        if any(a.t < t <= b.t for t in event_times):
            continue
        if b.V_lyap > a.V_lyap + tol:
            bad.append((a.t, b.t, b.V_lyap - a.V_lyap))
    return bad


def time_to_threshold(times, values, threshold):
    """First time after which ``values`` stays below ``threshold``; inf if never."""
    t_hit = math.inf
    for t, v in zip(times, values):
        if v < threshold:
            if t_hit == math.inf:
                t_hit = t
        else:
            t_hit = math.inf
    return t_hit
