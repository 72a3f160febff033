"""Distributed flocking control law for unicycle agents.

    v     = -(K_f / N_i) o_i      H_i g_i
    omega =  (K_f / N_i) o_perp_i H_i g_i

with o_i = (cos th, sin th), o_perp_i = (sin th, -cos th), H_i the field
Hessian at the agent and g_i = dP_i/dX_i assembled from neighbor gradients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from . import potential as pot
from .bus import GradientSample
from .errors import CollisionState, DegenerateDirection, InvalidArgument
from .potential import PotentialKind
from .spacing import EdgeState


class AgentState(NamedTuple):
    x: float
    y: float
    theta: float


class ControlInput(NamedTuple):
    v: float
    omega: float


@dataclass(frozen=True)
class ControllerConfig:
    K_f: float = 1.0
    potential: PotentialKind = field(default_factory=PotentialKind.quadratic)
    edge_force: str = "partial"

    def __post_init__(self):
        if not self.K_f > 0:
            raise InvalidArgument(f"K_f must be positive, got {self.K_f}")
        if self.edge_force not in pot.EDGE_FORCES:
            raise InvalidArgument(f"edge_force must be one of {pot.EDGE_FORCES}, got {self.edge_force!r}")


def orientation_vectors(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([c, s]), np.array([s, -c])


def compute_control(pose: AgentState, hess, gradP, n_neighbors: int, cfg: ControllerConfig) -> ControlInput:
    hess = np.asarray(hess, dtype=float)
    gradP = np.asarray(gradP, dtype=float)
    if not (np.all(np.isfinite(hess)) and np.all(np.isfinite(gradP)) and math.isfinite(pose.theta)):
        raise InvalidArgument("controller inputs must be finite")
    if n_neighbors == 0:
        return ControlInput(0.0, 0.0)
    o, o_perp = orientation_vectors(pose.theta)
    Hg = hess @ gradP
    gain = cfg.K_f / n_neighbors
    return ControlInput(float(-gain * (o @ Hg)), float(gain * (o_perp @ Hg)))


def agent_step_inputs(
    pose: AgentState,
    own_gradient,
    own_hessian,
    inbox: Sequence[GradientSample],
    edge_states: Mapping[int, EdgeState],
    cfg: ControllerConfig,
) -> ControlInput:
    """Control for one agent from its own measurements and its mailbox.

    ``edge_states`` maps each sender to the edge's spacing memory; only its
    desired gap is used, the gap itself is recomputed from the received
    gradient.
    """
    Xi = np.asarray(own_gradient, dtype=float)
    terms = []
    for sample in inbox:
        mem = edge_states[sample.sender]
        try:
            geom = pot.edge_direction(Xi, sample.X)
        except DegenerateDirection as exc:
            raise CollisionState(f"agent collides with neighbor {sample.sender} in gradient space") from exc
        gap = float(np.hypot(*(np.asarray(sample.X) - Xi)))
        edge = EdgeState(d=mem.d, s=mem.s, D_star=mem.D_star, mu=gap, e=gap - mem.D_star)
        terms.append((edge, geom))
    gradP = pot.grad_wrt_gradient(terms, cfg.potential, cfg.edge_force)
    return compute_control(pose, own_hessian, gradP, len(inbox), cfg)


def batch_controls(theta, X, H, ei, ej, D_star, cfg: ControllerConfig):
    """Vectorized evaluation of the same law for all agents at once.

    ``ei``/``ej`` are the canonical edge endpoint arrays, ``D_star`` the
    per-edge desired gaps. Returns ``(v, omega, gradP, mu, e)``.
    """
    n = len(theta)
    diff = X[ej] - X[ei]
    mu = np.hypot(diff[:, 0], diff[:, 1])
    if np.any(mu == 0.0):
        k = int(np.flatnonzero(mu == 0.0)[0])
        raise CollisionState(f"agents {ei[k]} and {ej[k]} have identical gradients")
    o_mu = diff / mu[:, None]
    e = mu - D_star
    w = pot.edge_force(cfg.potential, mu, e, cfg.edge_force)[:, None] * o_mu
    gradP = np.zeros((n, 2))
    # agent i sees o_mu, agent j sees -o_mu
    np.add.at(gradP, ei, -w)
    np.add.at(gradP, ej, w)
    deg = np.bincount(ei, minlength=n) + np.bincount(ej, minlength=n)
    Hg = np.einsum("nab,nb->na", H, gradP)
    c, s = np.cos(theta), np.sin(theta)
    gain = np.divide(cfg.K_f, deg, out=np.zeros(n), where=deg > 0)
    v = -gain * (c * Hg[:, 0] + s * Hg[:, 1])
    omega = gain * (s * Hg[:, 0] - c * Hg[:, 1])
    return v, omega, gradP, mu, e
