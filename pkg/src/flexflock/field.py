"""Polynomial scalar fields J(x, y) with exact gradients and Hessians.

Every function accepts a single point of shape (2,) or a batch of shape
(..., 2) and returns values, gradients (..., 2) or Hessians (..., 2, 2).
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import Enum

import numpy as np

from .errors import InvalidArgument

MAX_DEGREE = 6


class FieldKind(str, Enum):
    QUADRATIC_BOWL = "quadratic_bowl"  # J = -x^2 - y^2
    CUBIC_BENCH = "cubic_bench"  # J = -y^3 - 2(x^2 + y)
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class FieldModel:
    kind: FieldKind
    # (i, j, c) triples meaning c * x**i * y**j; only used by POLYNOMIAL
    terms: tuple = dc_field(default=())

    def __post_init__(self):
        object.__setattr__(self, "kind", FieldKind(self.kind))
        if self.kind is not FieldKind.POLYNOMIAL:
            if self.terms:
                raise InvalidArgument(f"{self.kind.value} takes no terms")
            return
        merged: dict[tuple[int, int], float] = {}
        for term in self.terms:
            i, j, c = term
            if int(i) != i or int(j) != j or i < 0 or j < 0:
                raise InvalidArgument(f"exponents must be non-negative integers, got ({i}, {j})")
            if i + j > MAX_DEGREE:
                raise InvalidArgument(f"term x^{i} y^{j} exceeds degree cap {MAX_DEGREE}")
            key = (int(i), int(j))
            merged[key] = merged.get(key, 0.0) + float(c)
        object.__setattr__(self, "terms", tuple((i, j, c) for (i, j), c in sorted(merged.items())))

    @classmethod
    def quadratic_bowl(cls):
        return cls(FieldKind.QUADRATIC_BOWL)

    @classmethod
    def cubic_bench(cls):
        return cls(FieldKind.CUBIC_BENCH)

    @classmethod
    def polynomial(cls, terms):
        if isinstance(terms, dict):
            terms = [(i, j, c) for (i, j), c in terms.items()]
        return cls(FieldKind.POLYNOMIAL, tuple(tuple(t) for t in terms))

    def value(self, p):
        return evaluate(self, p)

    def gradient(self, p):
        return gradient(self, p)

    def hessian(self, p):
        return hessian(self, p)


def _split(p):
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != 2:
        raise InvalidArgument(f"points must have trailing dimension 2, got shape {p.shape}")
    return p[..., 0], p[..., 1]


def _pow(base, n):
    # x**0 == 1 everywhere, including x == 0
    return np.ones_like(base) if n == 0 else base**n


def evaluate(fld: FieldModel, p):
    x, y = _split(p)
    if fld.kind is FieldKind.QUADRATIC_BOWL:
        out = -x * x - y * y
    elif fld.kind is FieldKind.CUBIC_BENCH:
        out = -(y**3) - 2.0 * (x * x + y)
    else:
        out = np.zeros_like(x)
        for i, j, c in fld.terms:
            out = out + c * _pow(x, i) * _pow(y, j)
    return float(out) if np.ndim(out) == 0 else out


def gradient(fld: FieldModel, p):
    x, y = _split(p)
    if fld.kind is FieldKind.QUADRATIC_BOWL:
        gx, gy = -2.0 * x, -2.0 * y
    elif fld.kind is FieldKind.CUBIC_BENCH:
        gx, gy = -4.0 * x, -3.0 * y * y - 2.0
    else:
        gx = np.zeros_like(x)
        gy = np.zeros_like(y)
        for i, j, c in fld.terms:
            if i:
                gx = gx + c * i * _pow(x, i - 1) * _pow(y, j)
            if j:
                gy = gy + c * j * _pow(x, i) * _pow(y, j - 1)
    gx, gy = np.broadcast_arrays(gx, gy)
    return np.stack([gx, gy], axis=-1)


def hessian(fld: FieldModel, p):
    x, y = _split(p)
    zero = np.zeros_like(x)
    if fld.kind is FieldKind.QUADRATIC_BOWL:
        hxx, hxy, hyy = zero - 2.0, zero, zero - 2.0
    elif fld.kind is FieldKind.CUBIC_BENCH:
        hxx, hxy, hyy = zero - 4.0, zero, -6.0 * y
    else:
        hxx, hxy, hyy = zero, zero, zero
        for i, j, c in fld.terms:
            if i >= 2:
                hxx = hxx + c * i * (i - 1) * _pow(x, i - 2) * _pow(y, j)
            if i and j:
                hxy = hxy + c * i * j * _pow(x, i - 1) * _pow(y, j - 1)
            if j >= 2:
                hyy = hyy + c * j * (j - 1) * _pow(x, i) * _pow(y, j - 2)
    row0 = np.stack([hxx, hxy], axis=-1)
    row1 = np.stack([hxy, hyy], axis=-1)
    return np.stack([row0, row1], axis=-2)


@dataclass
class GradientCheck:
    analytic: np.ndarray
    numeric: np.ndarray
    rel_error: float
    hessian_analytic: np.ndarray
    hessian_numeric: np.ndarray
    hessian_rel_error: float


def _rel(analytic, numeric):
    # falls back to the absolute error when the analytic quantity vanishes
    err = float(np.linalg.norm(np.asarray(analytic) - np.asarray(numeric)))
    scale = float(np.linalg.norm(analytic))
    return err / scale if scale > 0 else err


def check_gradient_fd(fld: FieldModel, p, h=1e-5):
    """Compare analytic derivatives with central differences at a single point."""
    if not h > 0:
        raise InvalidArgument(f"step h must be positive, got {h}")
    p = np.asarray(p, dtype=float)
    grad = gradient(fld, p)
    hess = hessian(fld, p)
    num_grad = np.empty(2)
    num_hess = np.empty((2, 2))
    for k in range(2):
        step = np.zeros(2)
        step[k] = h
        num_grad[k] = (evaluate(fld, p + step) - evaluate(fld, p - step)) / (2 * h)
        num_hess[:, k] = (gradient(fld, p + step) - gradient(fld, p - step)) / (2 * h)
    return GradientCheck(
        analytic=grad,
        numeric=num_grad,
        rel_error=_rel(grad, num_grad),
        hessian_analytic=hess,
        hessian_numeric=num_hess,
        hessian_rel_error=_rel(hess, num_hess),
    )
