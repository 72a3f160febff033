"""Adaptive spacing policy.

Each edge carries an auxiliary state ``d``. The desired gap is
``D* = d_nom * s`` with ``s = exp(lam * tanh((d - d_nom) / 2))``, and ``d``
is driven by ``tanh(e / 2)`` where ``e = mu - D*``. All rate functions are
plain numpy expressions, so they accept scalars or per-edge arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class SpacingParams:
    d_nom: float = 2.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.d_nom > 0:
            raise InvalidArgument(f"d_nom must be positive, got {self.d_nom}")
        if not self.lam > 0:
            raise InvalidArgument(f"lambda must be positive, got {self.lam}")

    @property
    def s_bounds(self):
        return math.exp(-self.lam), math.exp(self.lam)

    @property
    def gap_bounds(self):
        lo, hi = self.s_bounds
        return self.d_nom * lo, self.d_nom * hi

    def lambda_bound(self, r):
        """Largest lambda that keeps every desired gap below the range r."""
        return math.log(r / self.d_nom)


@dataclass(frozen=True)
class EdgeState:
    d: float
    s: float
    D_star: float
    mu: float
    e: float


def scaling_factor(d, params: SpacingParams):
    return np.exp(params.lam * np.tanh((d - params.d_nom) / 2.0))


def desired_gap(s, params: SpacingParams):
    lo, hi = params.s_bounds
    if np.any(np.asarray(s) <= lo) or np.any(np.asarray(s) >= hi):
        raise InvalidArgument(f"scaling factor {s} outside ({lo:.6g}, {hi:.6g})")
    return params.d_nom * s


def spacing_error(mu, D_star):
    if np.any(np.asarray(mu) < 0):
        raise InvalidArgument(f"mu must be non-negative, got {mu}")
    return mu - D_star


def d_rate(e):
    return np.tanh(e / 2.0)


def ds_dd(d, params: SpacingParams):
    """Derivative of the scaling factor with respect to d; strictly positive.

    s * 2*lam*exp(-u) / (1 + exp(-u))**2 with u = d - d_nom, written through
    sech so it stays finite for large |u|.
    """
    u = d - params.d_nom
    return scaling_factor(d, params) * params.lam * 0.5 / np.cosh(u / 2.0) ** 2


def s_rate(edge: EdgeState, params: SpacingParams):
    return ds_dd(edge.d, params) * d_rate(edge.e)


def edge_state(d, mu, params: SpacingParams) -> EdgeState:
    s = float(scaling_factor(d, params))
    D_star = float(desired_gap(s, params))
    return EdgeState(d=float(d), s=s, D_star=D_star, mu=float(mu), e=float(spacing_error(mu, D_star)))


def fixed_edge_state(mu, params: SpacingParams) -> EdgeState:
    """Edge state of the fixed-spacing baseline: s frozen at 1, D* = d_nom."""
    return EdgeState(d=params.d_nom, s=1.0, D_star=params.d_nom, mu=float(mu), e=float(mu) - params.d_nom)


def initial_d(d_init, params: SpacingParams) -> float:
    """Resolve the ``d_init`` config value ("nominal", "zero" or a number)."""
    if d_init == "nominal":
        return params.d_nom
    if d_init == "zero":
        return 0.0
    if isinstance(d_init, str):
        raise InvalidArgument(f"d_init must be 'nominal', 'zero' or a number, got {d_init!r}")
    return float(d_init)
