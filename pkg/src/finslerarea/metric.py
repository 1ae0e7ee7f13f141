"""Finsler structures F(x, y) on R^n with y-derivatives and symmetrizations.

All evaluators are vectorised over the direction argument: ``y`` has shape
``(..., n)`` and ``x`` is either ``None`` (Minkowski metrics), a single
point of shape ``(n,)`` or an array broadcastable against ``y``.

Values vanish at ``y = 0``; gradients and Hessians refuse it.
"""
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional

import numpy as np

from .errors import MetricDomainError
from . import sampling

EPS = np.finfo(float).eps
FD_STEP_GRAD = EPS ** (1.0 / 3.0)
FD_STEP_HESS = EPS ** 0.25
_TINY = 1e-150


def _as_array(y):
    return np.asarray(y, dtype=float)


def _outer(a, b):
    return a[..., :, None] * b[..., None, :]


def _norm(y):
    return np.sqrt(np.sum(y * y, axis=-1))


def _require_nonzero(y):
    if np.any(_norm(y) <= _TINY):
        raise MetricDomainError("derivatives are undefined at y = 0")


# ---------------------------------------------------------------------------
# the scalar profile phi of (alpha, beta)-metrics


@dataclass(frozen=True)
class Phi:
    """Profile function phi(s) of an (alpha, beta)-metric alpha*phi(beta/alpha).

    ``pole`` marks a singular s-value; evaluation within 1e-12 of it
    raises :class:`MetricDomainError`.
    """

    name: str
    f: Callable
    df: Callable
    d2f: Callable
    pole: Optional[float] = None
    even: bool = False
    kernel: Optional[tuple] = None

    def _check(self, s):
        if self.pole is not None:
            bad = np.abs(s - self.pole) < 1e-12
            if np.any(bad):
                s_bad = float(np.asarray(s)[bad].flat[0]) if np.ndim(s) else float(s)
                raise MetricDomainError(
                    f"{self.name}: phi is singular at beta/alpha = {s_bad:.12g}")

    def __call__(self, s):
        self._check(s)
        return self.f(s)

    def derivative(self, s, order=1):
        self._check(s)
        return self.df(s) if order == 1 else self.d2f(s)

    @classmethod
    def polynomial(cls, coeffs, name=None):
        """phi(s) = sum_k coeffs[k] s^k."""
        c = np.asarray(coeffs, dtype=float)
        P = np.polynomial.Polynomial(c)
        dP, d2P = P.deriv(1), P.deriv(2)
        even = bool(np.all(c[1::2] == 0))
        return cls(name or f"poly{tuple(c)}", P, dP, d2P, even=even,
                   kernel=(0, tuple(c)))

    @classmethod
    def matsumoto(cls):
        return cls(
            "matsumoto",
            lambda s: 1.0 / (1.0 - s),
            lambda s: 1.0 / (1.0 - s) ** 2,
            lambda s: 2.0 / (1.0 - s) ** 3,
            pole=1.0,
            kernel=(1, ()),
        )

    @classmethod
    def cui_shen(cls, h_coeffs, m=2):
        """phi(s) = (1 + h(s))^(-1/m) with odd polynomial h.

        ``h_coeffs[k]`` multiplies s^(2k+1).
        """
        c = np.zeros(2 * len(h_coeffs))
        c[1::2] = h_coeffs
        h = np.polynomial.Polynomial(c)
        dh, d2h = h.deriv(1), h.deriv(2)
        p = 1.0 / m

        def f(s):
            return (1.0 + h(s)) ** (-p)

        def df(s):
            return -p * (1.0 + h(s)) ** (-p - 1.0) * dh(s)

        def d2f(s):
            u = 1.0 + h(s)
            return p * (p + 1.0) * u ** (-p - 2.0) * dh(s) ** 2 - p * u ** (-p - 1.0) * d2h(s)

        return cls(f"cui-shen{tuple(h_coeffs)}", f, df, d2f)


RANDERS_PHI = Phi.polynomial([1.0, 1.0], "randers")
TWO_ORDER_PHI = Phi.polynomial([1.0, 2.0, 1.0], "two-order")
EUCLIDEAN_PHI = Phi.polynomial([1.0], "euclidean")


# ---------------------------------------------------------------------------
# metric evaluators


class MetricSpec:
    """A Finsler structure F(x, y) on R^dim.

    Subclasses implement ``value``, ``gradient`` and ``hessian``.
    """

    family = "abstract"
    dim = 3
    reversible = False
    x_dependent = False

    def value(self, y, x=None):
        raise NotImplementedError

    def gradient(self, y, x=None):
        raise NotImplementedError

    def hessian(self, y, x=None):
        raise NotImplementedError

    def __call__(self, y, x=None):
        return self.value(y, x)

    def kernel_args(self):
        """(kind, params) for the compiled Cartan kernel, or None."""
        return None

    def drift_at(self, x):
        """Drift vectors at points x of shape (T, dim); zeros if driftless."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.zeros_like(x)

    def reference_drift(self):
        """A representative drift vector used to place probing directions."""
        return np.zeros(self.dim)

    def describe(self):
        return {"family": self.family, "dim": self.dim,
                "reversible": self.reversible, "x_dependent": self.x_dependent}

    def __repr__(self):
        return f"<{type(self).__name__} {self.describe()}>"


def _drift_callable(b, dim):
    """Normalise a drift argument into (callable, constant-or-None)."""
    if callable(b):
        return b, None
    if b is None:
        b = np.zeros(dim)
    b = np.asarray(b, dtype=float)
    if b.shape != (dim,):
        raise ValueError(f"drift must have shape ({dim},), got {b.shape}")
    return (lambda x, _b=b: _b), b


class AlphaBetaMetric(MetricSpec):
    """F(x, y) = |y| phi(b(x).y / |y|)."""

    def __init__(self, phi, b=None, dim=3, family=None):
        self.phi = phi
        self.dim = dim
        self._b, self.b = _drift_callable(b, dim)
        self.x_dependent = self.b is None
        self.family = family or f"alpha-beta:{phi.name}"
        self.reversible = (self.b is not None and not np.any(self.b)) or phi.even

    def _parts(self, y, x):
        y = _as_array(y)
        a = _norm(y)
        b = np.asarray(self._b(x), dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(a > 0, np.sum(b * y, axis=-1) / np.where(a > 0, a, 1.0), 0.0)
        return y, a, b, s

    def value(self, y, x=None):
        y, a, b, s = self._parts(y, x)
        return a * self.phi(s)

    def gradient(self, y, x=None):
        y, a, b, s = self._parts(y, x)
        _require_nonzero(y)
        yh = y / a[..., None]
        ph, dph = self.phi(s), self.phi.derivative(s)
        return ph[..., None] * yh + dph[..., None] * (b - s[..., None] * yh)

    def hessian(self, y, x=None):
        y, a, b, s = self._parts(y, x)
        _require_nonzero(y)
        yh = y / a[..., None]
        ph = self.phi(s)
        dph = self.phi.derivative(s)
        d2ph = self.phi.derivative(s, 2)
        w = b - s[..., None] * yh
        proj = np.eye(self.dim) - _outer(yh, yh)
        H = (ph - s * dph)[..., None, None] * proj + d2ph[..., None, None] * _outer(w, w)
        return H / a[..., None, None]

    def kernel_args(self):
        return self.phi.kernel

    def drift_at(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(self._b(x), dtype=float), x.shape).copy()

    def reference_drift(self):
        if self.b is not None:
            return self.b
        return np.asarray(self._b(np.zeros(self.dim)), dtype=float)

    def describe(self):
        d = super().describe()
        d["phi"] = self.phi.name
        if self.b is not None:
            d["b"] = self.b.tolist()
        return d


class QuarticMetric(MetricSpec):
    """Perturbed quartic metric sqrt(sqrt(sum y_i^4) + eps |y|^2) plus a linear drift."""

    def __init__(self, epsilon, b=None, dim=3):
        if not epsilon > 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = float(epsilon)
        self.dim = dim
        self._b, self.b = _drift_callable(b, dim)
        self.x_dependent = self.b is None
        self.reversible = self.b is not None and not np.any(self.b)
        self.family = "perturbed-quartic"

    def _q(self, y):
        P = np.sum(y ** 4, axis=-1)
        sP = np.sqrt(P)
        return P, sP, sP + self.epsilon * np.sum(y * y, axis=-1)

    def value(self, y, x=None):
        y = _as_array(y)
        _, _, Q = self._q(y)
        b = np.asarray(self._b(x), dtype=float)
        return np.sqrt(Q) + np.sum(b * y, axis=-1)

    def gradient(self, y, x=None):
        y = _as_array(y)
        _require_nonzero(y)
        _, sP, Q = self._q(y)
        F = np.sqrt(Q)
        dQ = 2.0 * y ** 3 / sP[..., None] + 2.0 * self.epsilon * y
        return dQ / (2.0 * F[..., None]) + np.asarray(self._b(x), dtype=float)

    def hessian(self, y, x=None):
        y = _as_array(y)
        _require_nonzero(y)
        P, sP, Q = self._q(y)
        F = np.sqrt(Q)
        c = 2.0 * y ** 3
        dQ = c / sP[..., None] + 2.0 * self.epsilon * y
        HQ = (np.einsum("...i,ij->...ij", 6.0 * y ** 2 / sP[..., None], np.eye(self.dim))
              - _outer(c, c) / (P * sP)[..., None, None]
              + 2.0 * self.epsilon * np.eye(self.dim))
        return HQ / (2.0 * F[..., None, None]) - _outer(dQ, dQ) / (4.0 * F ** 3)[..., None, None]

    def kernel_args(self):
        return (2, (self.epsilon,)) if self.dim == 3 else None

    def drift_at(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(self._b(x), dtype=float), x.shape).copy()

    def reference_drift(self):
        if self.b is not None:
            return self.b
        return np.asarray(self._b(np.zeros(self.dim)), dtype=float)

    def describe(self):
        d = super().describe()
        d["epsilon"] = self.epsilon
        if self.b is not None:
            d["b"] = self.b.tolist()
        return d


def fd_gradient(fun, y):
    """Central-difference gradient of a vectorised scalar function of y."""
    y = _as_array(y)
    n = y.shape[-1]
    h = FD_STEP_GRAD * np.maximum(1.0, _norm(y))[..., None]
    g = np.empty_like(y)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        g[..., i] = (fun(y + h * e) - fun(y - h * e)) / (2.0 * h[..., 0])
    return g


def fd_hessian(fun, y):
    """Central second differences of a vectorised scalar function of y."""
    y = _as_array(y)
    n = y.shape[-1]
    h = (FD_STEP_HESS * np.maximum(1.0, _norm(y)))[..., None]
    H = np.empty(y.shape + (n,))
    f0 = fun(y)
    E = np.eye(n)
    for i in range(n):
        ei = h * E[i]
        H[..., i, i] = (fun(y + ei) - 2.0 * f0 + fun(y - ei)) / h[..., 0] ** 2
        for j in range(i + 1, n):
            ej = h * E[j]
            v = (fun(y + ei + ej) - fun(y + ei - ej) - fun(y - ei + ej) + fun(y - ei - ej)) / (4.0 * h[..., 0] ** 2)
            H[..., i, j] = H[..., j, i] = v
    return H


class CompositeMetric(MetricSpec):
    """F(x, y) = F_r(x, y) + b(x).y with a reversible base F_r.

    A :class:`MetricSpec` base keeps analytic derivatives; a bare callable
    ``base(y, x)`` falls back to central finite differences.
    """

    family = "composite"

    def __init__(self, base, drift, dim=3):
        self.base = base
        self.dim = dim
        self._b, self.b = _drift_callable(drift, dim)
        self.x_dependent = self.b is None or getattr(base, "x_dependent", True)
        self.reversible = self.b is not None and not np.any(self.b)
        self._analytic = isinstance(base, MetricSpec)

    def _base_value(self, y, x):
        return self.base.value(y, x) if self._analytic else np.asarray(self.base(y, x), dtype=float)

    def value(self, y, x=None):
        y = _as_array(y)
        return self._base_value(y, x) + np.sum(np.asarray(self._b(x), dtype=float) * y, axis=-1)

    def gradient(self, y, x=None):
        y = _as_array(y)
        _require_nonzero(y)
        if self._analytic:
            g = self.base.gradient(y, x)
        else:
            g = fd_gradient(lambda v: self._base_value(v, x), y)
        return g + np.asarray(self._b(x), dtype=float)

    def hessian(self, y, x=None):
        y = _as_array(y)
        _require_nonzero(y)
        if self._analytic:
            return self.base.hessian(y, x)
        H = fd_hessian(lambda v: self._base_value(v, x), y)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def kernel_args(self):
        if not self._analytic or self.base.x_dependent:
            return None
        if isinstance(self.base, AlphaBetaMetric) and self.base.phi.kernel == (0, (1.0,)):
            return (0, (1.0, 1.0))
        if isinstance(self.base, QuarticMetric) and not np.any(self.base.b):
            return self.base.kernel_args()
        return None

    def drift_at(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(self._b(x), dtype=float), x.shape).copy()

    def reference_drift(self):
        if self.b is not None:
            return self.b
        return np.asarray(self._b(np.zeros(self.dim)), dtype=float)


class _Derived(MetricSpec):
    """Evaluator built from a parent metric at y and -y."""

    def __init__(self, parent):
        self.parent = parent
        self.dim = parent.dim
        self.x_dependent = parent.x_dependent

    def _pm(self, y, x):
        y = _as_array(y)
        p = self.parent
        return y, p.value(y, x), p.value(-y, x)

    def reference_drift(self):
        return self.parent.reference_drift()


class MHarmonicSymmetrization(_Derived):
    """F_sym = [2 / (F(x,y)^-m + F(x,-y)^-m)]^(1/m)."""

    reversible = True

    def __init__(self, parent, m=2):
        if m < 1:
            raise ValueError("m must be >= 1")
        super().__init__(parent)
        self.m = m
        self.family = f"sym{m}({parent.family})"

    def value(self, y, x=None):
        y, Fp, Fm = self._pm(y, x)
        m = self.m
        with np.errstate(divide="ignore"):
            u = Fp ** (-m) + Fm ** (-m)
            out = (2.0 / u) ** (1.0 / m)
        return np.where(_norm(y) > 0, out, 0.0)

    def _derivs(self, y, x, want_hess):
        y = _as_array(y)
        _require_nonzero(y)
        m = self.m
        p = self.parent
        Fp, Fm = p.value(y, x), p.value(-y, x)
        gp, gm = p.gradient(y, x), p.gradient(-y, x)
        u = Fp ** (-m) + Fm ** (-m)
        S = (2.0 / u) ** (1.0 / m)
        du = -m * Fp[..., None] ** (-m - 1) * gp + m * Fm[..., None] ** (-m - 1) * gm
        grad = -(S / (m * u))[..., None] * du
        if not want_hess:
            return grad, None
        Hp, Hm = p.hessian(y, x), p.hessian(-y, x)
        Hu = (m * (m + 1) * Fp[..., None, None] ** (-m - 2) * _outer(gp, gp)
              - m * Fp[..., None, None] ** (-m - 1) * Hp
              + m * (m + 1) * Fm[..., None, None] ** (-m - 2) * _outer(gm, gm)
              - m * Fm[..., None, None] ** (-m - 1) * Hm)
        k = 1.0 / m
        H = S[..., None, None] * (k * (k + 1.0) * _outer(du, du) / (u ** 2)[..., None, None]
                                  - Hu / (m * u)[..., None, None])
        return grad, H

    def gradient(self, y, x=None):
        return self._derivs(y, x, False)[0]

    def hessian(self, y, x=None):
        return self._derivs(y, x, True)[1]


class ArithmeticSymmetrization(_Derived):
    """F_s = (F(x,y) + F(x,-y)) / 2."""

    reversible = True

    def __init__(self, parent):
        super().__init__(parent)
        self.family = f"arith({parent.family})"

    def value(self, y, x=None):
        _, Fp, Fm = self._pm(y, x)
        return 0.5 * (Fp + Fm)

    def gradient(self, y, x=None):
        y = _as_array(y)
        return 0.5 * (self.parent.gradient(y, x) - self.parent.gradient(-y, x))

    def hessian(self, y, x=None):
        y = _as_array(y)
        return 0.5 * (self.parent.hessian(y, x) + self.parent.hessian(-y, x))


class AntisymmetricPart(_Derived):
    """F_a = (F(x,y) - F(x,-y)) / 2. Not a metric; kept for its derivatives."""

    def __init__(self, parent):
        super().__init__(parent)
        self.family = f"antisym({parent.family})"

    def value(self, y, x=None):
        _, Fp, Fm = self._pm(y, x)
        return 0.5 * (Fp - Fm)

    def gradient(self, y, x=None):
        y = _as_array(y)
        return 0.5 * (self.parent.gradient(y, x) + self.parent.gradient(-y, x))

    def hessian(self, y, x=None):
        y = _as_array(y)
        return 0.5 * (self.parent.hessian(y, x) - self.parent.hessian(-y, x))


# ---------------------------------------------------------------------------
# factories


def euclidean(dim=3):
    return AlphaBetaMetric(EUCLIDEAN_PHI, np.zeros(dim), dim, family="euclidean")


def randers(b, dim=3):
    return AlphaBetaMetric(RANDERS_PHI, b, dim, family="randers")


def two_order(b, dim=3):
    return AlphaBetaMetric(TWO_ORDER_PHI, b, dim, family="two-order")


def matsumoto(b, dim=3):
    return AlphaBetaMetric(Phi.matsumoto(), b, dim, family="matsumoto")


def alpha_beta(phi_coeffs, b, dim=3):
    phi = phi_coeffs if isinstance(phi_coeffs, Phi) else Phi.polynomial(phi_coeffs)
    return AlphaBetaMetric(phi, b, dim, family="alpha-beta")


def cui_shen(h_coeffs, b, m=2, dim=3):
    return AlphaBetaMetric(Phi.cui_shen(h_coeffs, m), b, dim, family="cui-shen")


def perturbed_quartic(epsilon, b=None, dim=3):
    return QuarticMetric(epsilon, b, dim)


def composite(base, drift, dim=3):
    return CompositeMetric(base, drift, dim)


FAMILIES = {
    "euclidean": lambda b: euclidean(len(b)),
    "randers": randers,
    "two-order": two_order,
    "matsumoto": matsumoto,
}

FAMILY_PHI = {
    "randers": RANDERS_PHI,
    "two-order": TWO_ORDER_PHI,
    "matsumoto": Phi.matsumoto(),
}


# ---------------------------------------------------------------------------
# operations


@dataclass
class FundamentalTensor:
    x: Optional[np.ndarray]
    y: np.ndarray
    g: np.ndarray


@dataclass
class SymmetrizationPair:
    F_s: MetricSpec
    F_a: MetricSpec
    F_sym: MetricSpec


@dataclass
class FinslerReport:
    min_value: float
    max_homogeneity_residual: float
    min_eigenvalue: float
    sample_count: int
    verdict: bool
    tolerance: float = 1e-9
    witness: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def eval_metric(spec, x, y):
    """F(x, y) for a single direction; 0 at y = 0."""
    y = _as_array(y)
    v = float(spec.value(y, x))
    if not np.isfinite(v):
        raise MetricDomainError(f"{spec.family}: non-finite value at y={y.tolist()}")
    return v


def grad_hess_y(spec, x, y):
    """(gradient, Hessian) of F(x, .) at a single nonzero y."""
    y = _as_array(y)
    _require_nonzero(y)
    g = np.asarray(spec.gradient(y, x), dtype=float)
    H = np.asarray(spec.hessian(y, x), dtype=float)
    return g, 0.5 * (H + H.T)


def fundamental_tensor_array(spec, y, x=None):
    """g_ij = F_i F_j + F F_ij, vectorised over y."""
    F = np.asarray(spec.value(y, x))
    g = np.asarray(spec.gradient(y, x))
    H = np.asarray(spec.hessian(y, x))
    G = _outer(g, g) + F[..., None, None] * H
    return 0.5 * (G + np.swapaxes(G, -1, -2))


def fundamental_tensor(spec, x, y):
    y = _as_array(y)
    _require_nonzero(y)
    return FundamentalTensor(None if x is None else _as_array(x), y,
                             fundamental_tensor_array(spec, y, x))


def probe_directions(spec, sample_count, seed=0):
    """Quasi-uniform sphere samples plus drift-adapted directions, antipodally closed."""
    base = sampling.sphere_samples(spec.dim, sample_count, seed)
    extra = sampling.drift_directions(spec.reference_drift())
    return sampling.symmetric(np.concatenate((base, extra)))


def check_finsler(spec, x=None, sample_count=2000, seed=0, tol=1e-9):
    """Positivity, homogeneity and (F2) at sampled directions.

    Never raises on a failing metric; the report carries the verdict and
    the first failing direction.
    """
    if sample_count < 100:
        raise ValueError("sample_count must be >= 100")
    Y = probe_directions(spec, sample_count, seed)
    F = np.asarray(spec.value(Y, x))
    witness = {}
    resid = 0.0
    for t in (0.5, 2.0, 10.0):
        r = np.abs(spec.value(t * Y, x) - t * F) / np.maximum(t * np.abs(F), _TINY)
        resid = max(resid, float(np.max(r)))
    min_F = float(np.min(F))
    if min_F <= tol:
        witness = {"check": "positivity", "y": Y[int(np.argmin(F))].tolist(), "value": min_F}
        min_eig = float("nan")
    else:
        eig = np.linalg.eigvalsh(fundamental_tensor_array(spec, Y, x))[..., 0]
        k = int(np.argmin(eig))
        min_eig = float(eig[k])
        if min_eig <= tol:
            witness = {"check": "fundamental tensor", "y": Y[k].tolist(), "value": min_eig}
    verdict = min_F > tol and resid <= tol and min_eig > tol
    if resid > tol and not witness:
        witness = {"check": "homogeneity", "value": resid}
    return FinslerReport(min_F, resid, min_eig, len(Y), bool(verdict), tol, witness)


def alphabeta_condition(phi, b_norm, s):
    """phi(s) - s phi'(s) + (b^2 - s^2) phi''(s)."""
    return phi(s) - s * phi.derivative(s) + (b_norm ** 2 - s ** 2) * phi.derivative(s, 2)


def check_alphabeta_finsler(phi, b_norm, s_grid=None, margin=1e-10):
    """Whether alpha*phi(beta/alpha) is Finsler for drift length ``b_norm``.

    Tests phi > 0 and phi - s phi' + (b^2 - s^2) phi'' > 0 on |s| <= b_norm.
    """
    b_norm = abs(float(b_norm))
    if s_grid is None:
        s_grid = np.linspace(-b_norm, b_norm, 2001)
    s_grid = np.asarray(s_grid, dtype=float)
    if np.any(np.abs(s_grid) > b_norm + 1e-15):
        raise ValueError("s_grid must lie in [-|b|, |b|]")
    if phi.pole is not None and abs(phi.pole) <= b_norm:
        raise MetricDomainError(f"{phi.name}: pole s={phi.pole} lies inside [-|b|, |b|]")
    with np.errstate(all="ignore"):
        p = phi(s_grid)
        c = alphabeta_condition(phi, b_norm, s_grid)
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(c))):
        raise MetricDomainError(f"{phi.name}: non-finite profile on the s-grid")
    return bool(np.all(p > margin) and np.all(c > margin))


def symmetrize_m_harmonic(spec, m=2):
    return MHarmonicSymmetrization(spec, m)


def split_sym_asym(spec, m=2):
    return SymmetrizationPair(ArithmeticSymmetrization(spec), AntisymmetricPart(spec),
                              MHarmonicSymmetrization(spec, m))
