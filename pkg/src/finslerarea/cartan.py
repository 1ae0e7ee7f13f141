"""Busemann-Hausdorff Cartan integrand A^F(x, Z) and scans built on it.

For m = 2 the integrand is evaluated on the great circle orthogonal to Z,

    A^F(x, Z) = |Z| * 2 pi / int_0^{2 pi} F(x, cos t f1 + sin t f2)^-2 dt,

with the periodic trapezoid rule (spectrally accurate for smooth F).
Minkowski and drift-type metrics go through the compiled kernel; other
metrics use a vectorised numpy path with identical arithmetic.
"""
from dataclasses import dataclass, field, asdict
from typing import Optional

import numpy as np

from . import kernels, sampling
from .errors import (ConfigurationError, MetricDomainError, NotFinslerError,
                     SingularIntegrandError)
from .metric import (FD_STEP_GRAD, fd_gradient, fd_hessian,
                     probe_directions, symmetrize_m_harmonic)

BLOCK = 512


class CartanIntegrand:
    """Finsler area integrand of ``metric`` with an N-node circle quadrature.

    Parameters
    ----------
    metric : MetricSpec
        Finsler structure on R^3.
    m : int
        Surface dimension; only m = 2 is implemented.
    n_nodes : int
        Trapezoid nodes on the great circle, at least 16.
    backend : {"python", "cython"}, optional
        Force a kernel implementation; defaults to the active one.
    """

    def __init__(self, metric, m=2, n_nodes=256, backend=None):
        if m != 2:
            raise ConfigurationError("only m = 2 (surfaces in R^3) is implemented")
        if metric.dim != m + 1:
            raise ConfigurationError(f"metric dimension {metric.dim} != m + 1 = {m + 1}")
        if int(n_nodes) < 16:
            raise ConfigurationError("n_nodes must be >= 16")
        self.metric = metric
        self.m = m
        self.n_nodes = int(n_nodes)
        self._kernel = kernels.get_backend(backend)
        self._kargs = metric.kernel_args()

    def __repr__(self):
        return f"CartanIntegrand({self.metric.family!r}, m={self.m}, N={self.n_nodes})"

    # -- evaluation ---------------------------------------------------------

    def batch(self, Z, x=None, with_grad=False):
        """Integrand (and Z-gradient) for normals ``Z`` of shape (T, 3).

        ``x`` is ``None`` or an array of points of shape (T, 3) or (3,).
        Raises :class:`SingularIntegrandError` naming the first bad row.
        """
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        nz = np.linalg.norm(Z, axis=-1)
        if np.any(~(nz > 0)):
            raise MetricDomainError(f"Z must be nonzero (row {int(np.argmin(nz > 0))})")
        if x is not None:
            x = np.broadcast_to(np.asarray(x, dtype=float), Z.shape)
        if self._kargs is not None:
            kind, params = self._kargs
            if x is None:
                drift = np.broadcast_to(self.metric.reference_drift(), Z.shape)
            else:
                drift = self.metric.drift_at(x)
            A, G, bad = self._kernel(Z, drift, kind, np.asarray(params, float),
                                     self.n_nodes, with_grad)
        else:
            A, G, bad = self._generic(Z, x, with_grad)
        if bad >= 0:
            raise SingularIntegrandError(
                f"{self.metric.family}: metric non-positive or non-finite on the "
                f"great circle of Z[{bad}] = {Z[bad].tolist()}")
        return (A, G) if with_grad else A

    def _generic(self, Z, x, with_grad):
        T = len(Z)
        A = np.empty(T)
        G = np.empty((T, 3)) if with_grad else None
        t = 2.0 * np.pi * np.arange(self.n_nodes) / self.n_nodes
        c, s = np.cos(t), np.sin(t)
        bad = -1
        for lo in range(0, T, BLOCK):
            hi = min(T, lo + BLOCK)
            Zb = Z[lo:hi]
            nz = np.linalg.norm(Zb, axis=-1)
            f1, f2 = sampling.complement_frames(Zb)
            Y = c[None, :, None] * f1[:, None, :] + s[None, :, None] * f2[:, None, :]
            xb = None if x is None else x[lo:hi, None, :]
            with np.errstate(all="ignore"):
                try:
                    F = np.asarray(self.metric.value(Y, xb), dtype=float)
                except MetricDomainError:
                    return A, G, lo
                ok = np.all(np.isfinite(F) & (F > 0), axis=-1)
                if not np.all(ok):
                    return A, G, lo + int(np.argmin(ok))
                inv2 = F ** -2.0
                I0 = inv2.mean(axis=-1)
                A[lo:hi] = nz / I0
                if with_grad:
                    dF = np.asarray(self.metric.gradient(Y, xb), dtype=float)
                    w = inv2 / F * np.einsum("tkj,tj->tk", dF, Zb)
                    corr = np.einsum("tk,tkj->tj", w, Y) / self.n_nodes
                    G[lo:hi] = (Zb * I0[:, None] - 2.0 * corr) / (nz * I0 * I0)[:, None]
        return A, G, bad

    def __call__(self, Z, x=None):
        return float(self.batch(np.asarray(Z, dtype=float)[None, :],
                                None if x is None else np.asarray(x, float)[None, :])[0])

    def gradient(self, Z, x=None):
        Z = np.asarray(Z, dtype=float)[None, :]
        xx = None if x is None else np.asarray(x, float)[None, :]
        return self.batch(Z, xx, with_grad=True)[1][0]


def area_integrand(ci, x, Z):
    """A^F(x, Z); positively 1-homogeneous in Z and |Z| for the euclidean metric."""
    return ci(Z, x)


def area_integrand_derivs(ci, x, Z, method="analytic"):
    """Gradient and Hessian of A^F(x, .) at Z.

    ``method="analytic"`` takes the gradient from the differentiated
    quadrature and the Hessian by central differences of that gradient
    (step cbrt(eps)|Z|). ``method="fd"`` differentiates values only,
    with steps cbrt(eps)|Z| and eps^(1/4)|Z|.
    """
    Z = np.asarray(Z, dtype=float)
    nz = np.linalg.norm(Z)
    if not nz > 0:
        raise MetricDomainError("Z must be nonzero")
    xx = None if x is None else np.broadcast_to(np.asarray(x, float), (7, 3))
    if method == "analytic":
        h = FD_STEP_GRAD * nz
        pts = np.vstack([Z, Z + h * np.eye(3), Z - h * np.eye(3)])
        _, G = ci.batch(pts, xx, with_grad=True)
        H = (G[1:4] - G[4:7]).T / (2.0 * h)
        grad = G[0]
    elif method == "fd":
        def f(v):
            return ci.batch(v, None if x is None else np.broadcast_to(np.asarray(x, float), v.shape))
        grad = fd_gradient(f, Z[None, :] / nz)[0]
        H = fd_hessian(f, Z[None, :] / nz)[0] / nz
    else:
        raise ValueError(f"unknown method {method!r}")
    return grad, 0.5 * (H + H.T)


# ---------------------------------------------------------------------------
# growth bounds and the symmetrization identity


@dataclass
class GrowthBounds:
    c1: float
    c2: float
    m1: float
    m2: float
    sandwich_ok: bool = True
    sample_count: int = 0

    @property
    def m_F(self):
        """inf of F on the unit sphere (so m1 = m_F^m)."""
        return self.c1

    @property
    def M_F(self):
        """sup of F on the unit sphere (so m2 = M_F^m)."""
        return self.c2

    def to_dict(self):
        return asdict(self)


def growth_bounds(ci, sample_count=2000, x_grid=None, seed=0, probe_count=200):
    """Pointwise bounds c1 <= F <= c2 on the sphere and m_i = c_i^m.

    The area sandwich m1|Z| <= A^F(x, Z) <= m2|Z| is checked on
    ``probe_count`` normals and recorded in ``sandwich_ok``.
    """
    if sample_count < 500:
        raise ValueError("sample_count must be >= 500")
    metric = ci.metric
    Y = probe_directions(metric, sample_count, seed)
    xs = [None] if x_grid is None else list(np.atleast_2d(x_grid))
    vals = np.concatenate([np.asarray(metric.value(Y, x), dtype=float) for x in xs])
    c1, c2 = float(np.min(vals)), float(np.max(vals))
    if not c1 > 0:
        raise NotFinslerError(f"{metric.family}: min F = {c1:.6g} <= 0 on the sphere")
    m1, c2m = c1 ** ci.m, c2 ** ci.m
    Zp = sampling.sphere_samples(3, probe_count, seed + 1)
    ok = True
    for x in xs:
        A = ci.batch(Zp, None if x is None else np.broadcast_to(x, Zp.shape))
        ok &= bool(np.all(A >= m1 * (1 - 1e-12)) and np.all(A <= c2m * (1 + 1e-12)))
    return GrowthBounds(c1, c2, m1, c2m, ok, len(vals))


def check_symmetrization_identity(ci, sample_count=200, seed=0, x=None):
    """max |A^F - A^{F_sym}| / A^F over random normals."""
    sym = CartanIntegrand(symmetrize_m_harmonic(ci.metric, ci.m), ci.m, ci.n_nodes)
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((sample_count, 3))
    xx = None if x is None else np.broadcast_to(np.asarray(x, float), Z.shape)
    A = ci.batch(Z, xx)
    As = sym.batch(Z, xx)
    return float(np.max(np.abs(A - As) / A))


# ---------------------------------------------------------------------------
# ellipticity


@dataclass
class EllipticityReport:
    lambda_min: float
    argmin_x: Optional[list]
    argmin_Z: list
    z_sample_count: int
    x_sample_count: int
    convex: bool
    tolerance: float = 1e-6

    def to_dict(self):
        return asdict(self)


def tangential_eigenvalues(ci, Z, x=None):
    """Eigenvalues (ascending, shape (T, 2)) of |Z| A_ZZ restricted to Z-perp."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    T = len(Z)
    nz = np.linalg.norm(Z, axis=-1)
    h = (FD_STEP_GRAD * nz)[:, None]
    E = np.eye(3)
    pts = np.concatenate([Z + h * E[i] for i in range(3)] + [Z - h * E[i] for i in range(3)])
    xx = None if x is None else np.tile(np.broadcast_to(np.asarray(x, float), Z.shape), (6, 1))
    _, G = ci.batch(pts, xx, with_grad=True)
    G = G.reshape(6, T, 3)
    H = np.stack([(G[i] - G[i + 3]) / (2.0 * h) for i in range(3)], axis=1)
    H = 0.5 * (H + np.swapaxes(H, 1, 2))
    f1, f2 = sampling.complement_frames(Z)
    P = np.stack([f1, f2], axis=-1)
    Ht = np.einsum("tia,tij,tjb->tab", P, H, P)
    return np.linalg.eigvalsh(Ht) * nz[:, None]


def ellipticity_scan(ci, Z_samples=None, x_samples=None, tol=1e-6, sample_count=2000, seed=0):
    """Smallest tangential eigenvalue of |Z| A_ZZ over sampled (x, Z).

    The minimum over finitely many samples is an estimate of the
    ellipticity constant, not a bound. Ties keep the first index.
    """
    if Z_samples is None:
        Z_samples = np.concatenate((sampling.sphere_samples(3, sample_count, seed),
                                    sampling.drift_directions(ci.metric.reference_drift())))
    Z = np.atleast_2d(np.asarray(Z_samples, dtype=float))
    xs = [None] if x_samples is None else list(np.atleast_2d(x_samples))
    best, arg = np.inf, (None, None)
    for x in xs:
        lam = tangential_eigenvalues(ci, Z, x)[:, 0]
        k = int(np.argmin(lam))
        if lam[k] < best:
            best = float(lam[k])
            arg = (None if x is None else np.asarray(x).tolist(), Z[k].tolist())
    return EllipticityReport(best, arg[0], arg[1], len(Z), len(xs), bool(best >= -tol), tol)


# ---------------------------------------------------------------------------
# seminorms and dominance


def rho_k(fn, k, sample_count=2000, gradient=None, seed=0):
    """rho_k(g) = max |D^alpha g| over sphere samples and |alpha| <= k.

    ``fn`` maps (T, 3) to (T,). Derivatives are central differences; if
    ``gradient`` (T, 3) -> (T, 3) is given it supplies first derivatives
    and second derivatives come from differencing it.
    """
    if k not in (0, 1, 2):
        raise ConfigurationError("rho_k supports k in {0, 1, 2} only")
    Y = np.concatenate((sampling.sphere_samples(3, sample_count, seed), np.eye(3), -np.eye(3)))
    out = float(np.max(np.abs(fn(Y))))
    if k == 0:
        return out
    g = gradient(Y) if gradient is not None else fd_gradient(fn, Y)
    out = max(out, float(np.max(np.abs(g))))
    if k == 2:
        if gradient is not None:
            h = FD_STEP_GRAD
            H = np.stack([(gradient(Y + h * e) - gradient(Y - h * e)) / (2 * h) for e in np.eye(3)], axis=1)
        else:
            H = fd_hessian(fn, Y)
        out = max(out, float(np.max(np.abs(H))))
    return out


@dataclass
class DominanceReport:
    delta: float
    pass_corollary: bool
    k0: float
    delta0: float
    rho2_metric: float
    delta0_pass: bool
    shifted: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def dominance_feasibility(ci, x_grid=None, delta0=0.1, r_factor=1.01, sample_count=1000, seed=0):
    """Checkable dominance predicates for A^F.

    ``delta`` is sup_x rho_2(A^F(x, .) - |.|); the criterion passes when it
    is below 1/5. ``k0`` = 2 [m2* - min(lam*, m1*/2)] is evaluated for the
    shifted integrand C* = R A^F - |Z| with R = r_factor / (1 - delta),
    whose growth constants are R m_i - 1 and ellipticity R lam - 1.
    ``delta0_pass`` compares sup_x rho_2(F(x, .) - |.|) with ``delta0``.
    """
    metric = ci.metric
    xs = [None] if x_grid is None else list(np.atleast_2d(x_grid))

    def _x(x, Y):
        return None if x is None else np.broadcast_to(np.asarray(x, float), Y.shape)

    delta = rhoF = 0.0
    lam = np.inf
    for x in xs:
        fA = lambda Y, x=x: ci.batch(Y, _x(x, Y)) - np.linalg.norm(Y, axis=-1)
        gA = lambda Y, x=x: ci.batch(Y, _x(x, Y), with_grad=True)[1] - Y / np.linalg.norm(Y, axis=-1, keepdims=True)
        delta = max(delta, rho_k(fA, 2, sample_count, gA, seed))
        fF = lambda Y, x=x: metric.value(Y, _x(x, Y)) - np.linalg.norm(Y, axis=-1)
        gF = lambda Y, x=x: metric.gradient(Y, _x(x, Y)) - Y / np.linalg.norm(Y, axis=-1, keepdims=True)
        rhoF = max(rhoF, rho_k(fF, 2, sample_count, gF, seed))
        lam = min(lam, ellipticity_scan(ci, x_samples=None if x is None else [x],
                                        sample_count=sample_count, seed=seed).lambda_min)
    gb = growth_bounds(ci, max(500, sample_count), x_grid, seed)
    shifted = {"R": float("nan"), "m1": float("nan"), "m2": float("nan"), "lambda": float("nan")}
    k0 = float("nan")
    if delta < 1.0:
        R = r_factor / (1.0 - delta)
        m1s, m2s, lams = R * gb.m1 - 1.0, R * gb.m2 - 1.0, R * lam - 1.0
        k0 = 2.0 * (m2s - min(lams, m1s / 2.0))
        shifted = {"R": R, "m1": m1s, "m2": m2s, "lambda": lams}
    return DominanceReport(delta, bool(delta < 0.2), k0, delta0, rhoF, bool(rhoF < delta0), shifted)


# ---------------------------------------------------------------------------
# convexity tables


def convexity_table(factory, b_values, sample_count=2000, n_nodes=256, seed=0, tol=1e-6):
    """Rows (b, lambda_min, delta, convex, pass_corollary) for metrics ``factory(b)``."""
    rows = []
    for b in b_values:
        ci = CartanIntegrand(factory(b), n_nodes=n_nodes)
        rep = ellipticity_scan(ci, sample_count=sample_count, seed=seed, tol=tol)
        fA = lambda Y: ci.batch(Y) - np.linalg.norm(Y, axis=-1)
        gA = lambda Y: ci.batch(Y, with_grad=True)[1] - Y / np.linalg.norm(Y, axis=-1, keepdims=True)
        delta = rho_k(fA, 2, 500, gA, seed)
        rows.append({"b": float(b), "lambda_min": rep.lambda_min, "delta": delta,
                     "convex": rep.convex, "pass_corollary": bool(delta < 0.2)})
    return rows


def lambda_sign_change(rows):
    """Bracket (b_lo, b_hi) around the first sign change of lambda_min, or None."""
    for a, b in zip(rows, rows[1:]):
        if (a["lambda_min"] > 0) != (b["lambda_min"] > 0):
            return a["b"], b["b"]
    return None
