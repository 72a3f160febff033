"""Per-edge flocking potentials and their derivatives.

Two potentials are supported:

* quadratic: ``p = e**2 / 2``
* barrier:   ``p = e**2 / 2 * (ln(c * mu)**2 + 1)`` with ``c = r - mu``,
  which blows up as mu approaches 0 (collision) or r (range loss).

An agent's potential is the sum of ``p`` over its incident edges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BarrierDomainError, DegenerateDirection
from .spacing import EdgeState


@dataclass(frozen=True)
class PotentialKind:
    name: str = "quadratic"
    r: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("quadratic", "barrier"):
            raise ValueError(f"unknown potential {self.name!r}")
        if self.name == "barrier" and not (self.r is not None and self.r > 0):
            raise ValueError("barrier potential needs a positive range r")

    @classmethod
    def quadratic(cls):
        return cls("quadratic")

    @classmethod
    def barrier(cls, r):
        return cls("barrier", float(r))

    @property
    def is_barrier(self):
        return self.name == "barrier"


@dataclass(frozen=True)
class EdgeGeometry:
    o_mu: np.ndarray
    beta: float


def edge_direction(Xi, Xj) -> EdgeGeometry:
    diff = np.asarray(Xj, dtype=float) - np.asarray(Xi, dtype=float)
    mu = math.hypot(diff[0], diff[1])
    if mu == 0.0:
        raise DegenerateDirection(f"identical gradients {tuple(Xi)}: edge direction undefined")
    return EdgeGeometry(o_mu=diff / mu, beta=math.atan2(diff[1], diff[0]))


def _check_domain(kind, mu):
    mu = np.asarray(mu)
    bad = ~((mu > 0) & (mu < kind.r))
    if np.any(bad):
        worst = float(mu[bad].flat[0]) if mu.ndim else float(mu)
        raise BarrierDomainError(f"mu = {worst:.6g} outside barrier domain (0, {kind.r:g})")


def _log_cmu(kind, mu):
    return np.log((kind.r - mu) * mu)


# Array-level forms; the simulator calls these with per-edge vectors.

def values(kind: PotentialKind, mu, e):
    if not kind.is_barrier:
        return 0.5 * e * e
    _check_domain(kind, mu)
    return 0.5 * e * e * (_log_cmu(kind, mu) ** 2 + 1.0)


def partial_e(kind: PotentialKind, mu, e):
    if not kind.is_barrier:
        return e
    _check_domain(kind, mu)
    return e * (_log_cmu(kind, mu) ** 2 + 1.0)


def total_mu(kind: PotentialKind, mu, e):
    if not kind.is_barrier:
        return e
    _check_domain(kind, mu)
    ln = _log_cmu(kind, mu)
    c = kind.r - mu
    return e * (ln * ln + 1.0) + e * e * ln * (kind.r - 2.0 * mu) / (c * mu)


# Scalar API over EdgeState.

def potential_value(kind: PotentialKind, edge: EdgeState) -> float:
    return float(values(kind, edge.mu, edge.e))


def dP_de(kind: PotentialKind, edge: EdgeState) -> float:
    """Partial derivative in e with the barrier's direct mu dependence held fixed."""
    return float(partial_e(kind, edge.mu, edge.e))


def dP_dmu_total(kind: PotentialKind, edge: EdgeState) -> float:
    """Derivative in mu at fixed scaling factor (de/dmu = 1), barrier term included."""
    return float(total_mu(kind, edge.mu, edge.e))


EDGE_FORCES = ("partial", "total")


def edge_force(kind: PotentialKind, mu, e, mode="partial"):
    """Per-edge weight fed to the controller.

    ``partial`` uses dP/de only. ``total`` also differentiates the barrier's
    direct mu dependence; that variant has spurious equilibria near
    mu * (r - mu) = 1 where admitted edges can stall with large e.
    """
    if mode == "partial":
        return partial_e(kind, mu, e)
    if mode == "total":
        return total_mu(kind, mu, e)
    raise ValueError(f"unknown edge force {mode!r}")


def grad_wrt_gradient(neighbors, kind: PotentialKind, mode="partial") -> np.ndarray:
    """dP_i/dX_i = -sum_j w_ij * o_mu_ij over ``(EdgeState, EdgeGeometry)`` pairs."""
    out = np.zeros(2)
    for edge, geom in neighbors:
        out -= float(edge_force(kind, edge.mu, edge.e, mode)) * geom.o_mu
    return out
