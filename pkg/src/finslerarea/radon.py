"""Spherical Radon transform of (-m)-homogeneous functions on R^3.

For m = 2 and Z != 0,

    R[g](Z) = (2 pi |Z|)^-1 int_0^{2 pi} g(cos t f1 + sin t f2) dt,

with (f1, f2) orthonormal in Z-perp. The output is (-1)-homogeneous, and
the Cartan integrand is its reciprocal for g = F^-2.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import sampling
from .cartan import rho_k
from .errors import MetricDomainError, SingularIntegrandError
from .metric import FD_STEP_GRAD, fd_gradient


@dataclass
class HomogeneousFunction:
    """Positively homogeneous g on R^3 minus the origin.

    ``evaluator`` and the optional ``gradient`` are vectorised over the
    leading axes of their (..., 3) argument.
    """

    evaluator: Callable
    degree: float = -2.0
    gradient: Optional[Callable] = None
    smoothness: int = 2

    def __call__(self, y):
        return np.asarray(self.evaluator(np.asarray(y, dtype=float)), dtype=float)

    def grad(self, y):
        y = np.asarray(y, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(y), dtype=float)
        return fd_gradient(self, y)

    def scaled(self, c):
        grad = None if self.gradient is None else (lambda y: c * self.gradient(y))
        return HomogeneousFunction(lambda y: c * self.evaluator(y), self.degree, grad, self.smoothness)


def norm_power(degree=-2.0):
    """g(y) = |y|^degree with its exact gradient."""
    def f(y):
        return np.sum(y * y, axis=-1) ** (0.5 * degree)

    def df(y):
        r2 = np.sum(y * y, axis=-1, keepdims=True)
        return degree * r2 ** (0.5 * degree - 1.0) * y

    return HomogeneousFunction(f, degree, df)


def metric_power(metric, m=2, x=None):
    """g(y) = F(x, y)^-m with gradient -m F^(-m-1) grad F.

    Raises :class:`SingularIntegrandError` where F is not positive.
    """
    def positive(y):
        F = np.asarray(metric.value(y, x), dtype=float)
        if not np.all(F > 0):
            raise SingularIntegrandError("F is not positive on the evaluated directions")
        return F

    def f(y):
        return positive(y) ** (-m)

    def df(y):
        F = positive(y)
        return -m * (F ** (-m - 1.0))[..., None] * np.asarray(metric.gradient(y, x), dtype=float)

    return HomogeneousFunction(f, -float(m), df)


def _circle_values(fn, Z, n_nodes):
    Y = sampling.great_circle(Z, n_nodes)
    with np.errstate(all="ignore"):
        try:
            v = np.asarray(fn(Y), dtype=float)
        except MetricDomainError as exc:
            raise SingularIntegrandError(f"integrand undefined on the great circle of Z: {exc}") from exc
    if not np.all(np.isfinite(v)):
        raise SingularIntegrandError(f"non-finite integrand on the great circle of Z={np.asarray(Z).tolist()}")
    return v


def radon_transform(g, Z, n_nodes=256):
    """R[g](Z) by the periodic trapezoid rule with exactly rounded summation."""
    Z = np.asarray(Z, dtype=float)
    nz = float(np.linalg.norm(Z))
    if not nz > 0:
        raise MetricDomainError("Z must be nonzero")
    v = _circle_values(g, Z, n_nodes)
    return math.fsum(v) / (n_nodes * nz)


def radon_batch(g, Z, n_nodes=256):
    """Vectorised :func:`radon_transform` over Z of shape (T, 3)."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    nz = np.linalg.norm(Z, axis=-1)
    if np.any(~(nz > 0)):
        raise MetricDomainError("Z must be nonzero")
    f1, f2 = sampling.complement_frames(Z)
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    Y = np.cos(t)[None, :, None] * f1[:, None, :] + np.sin(t)[None, :, None] * f2[:, None, :]
    with np.errstate(all="ignore"):
        v = np.asarray(g(Y), dtype=float)
    if not np.all(np.isfinite(v)):
        raise SingularIntegrandError("non-finite integrand on a great circle")
    return v.mean(axis=-1) / nz


def cartan_via_radon(metric, x, Z, n_nodes=256, m=2):
    """A^F(x, Z) = 1 / R[F(x, .)^-m](Z)."""
    return 1.0 / radon_transform(metric_power(metric, m, x), Z, n_nodes)


def diff_rule_sides(g, Z, tau, sigma, n_nodes=256):
    """Both sides of Z_tau d/dZ_sigma R[g](Z) = -R[d/dy_tau (y_sigma g)](Z).

    Indices are 0-based. The left side is a central difference of the
    quadrature (step cbrt(eps)|Z|); the right side integrates the
    differentiated integrand delta_{tau sigma} g + y_sigma d_tau g.
    """
    Z = np.asarray(Z, dtype=float)
    h = FD_STEP_GRAD * float(np.linalg.norm(Z))
    e = np.zeros(3)
    e[sigma] = h
    dR = (radon_transform(g, Z + e, n_nodes) - radon_transform(g, Z - e, n_nodes)) / (2.0 * h)
    lhs = Z[tau] * dR

    def integrand(y):
        return (tau == sigma) * g(y) + y[..., sigma] * g.grad(y)[..., tau]

    rhs = -radon_transform(integrand, Z, n_nodes)
    return lhs, rhs


def verify_diff_rule(g, Z, tau, sigma, n_nodes=256):
    """|LHS - RHS| of the first-order differentiation rule (0-based indices)."""
    lhs, rhs = diff_rule_sides(g, Z, tau, sigma, n_nodes)
    return abs(lhs - rhs)


def seminorm_bound_probe(g, k, sample_count=500, n_nodes=256, seed=0):
    """(rho_k(R[g]), rho_k(g), ratio); no bound on the ratio is asserted."""
    rg = rho_k(lambda Y: radon_batch(g, Y, n_nodes), k, sample_count, seed=seed)
    r0 = rho_k(g, k, sample_count, seed=seed)
    return rg, r0, (rg / r0 if r0 > 0 else float("inf"))


def random_sl3(rng, spread=0.3):
    """A random 3x3 matrix with determinant 1 near the identity."""
    while True:
        L = np.eye(3) + spread * rng.standard_normal((3, 3))
        d = np.linalg.det(L)
        if d > 0.1:
            return L / np.cbrt(d)


def sl_invariance_probe(g, sample_count=20, n_nodes=256, seed=0):
    """max relative gap between R[g](L Z) and R[g o L^-T](Z) for random L in SL(3)."""
    rng = np.random.default_rng(seed)
    L = random_sl3(rng)
    LiT = np.linalg.inv(L).T
    gL = HomogeneousFunction(lambda y: g(y @ LiT.T), g.degree)
    Z = rng.standard_normal((sample_count, 3))
    a = radon_batch(g, Z @ L.T, n_nodes)
    b = radon_batch(gL, Z, n_nodes)
    return float(np.max(np.abs(a - b) / np.abs(a)))
