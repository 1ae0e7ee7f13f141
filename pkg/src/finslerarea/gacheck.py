"""Checks of assumption (GA): the m-harmonic symmetrization is Finsler.

``ga_direct`` tests positive definiteness of the fundamental tensor of
F_sym. ``sufficient_condition`` tests the pointwise criterion in terms of
F_s and F_a,

    (grad F_a . w)^2 < g_{F_s}(w, w) / (m + 1)   for all w,
    F_a Hess F_a  negative semi-definite,

by eigen-analysis rather than sampling w.
"""
from dataclasses import dataclass, field, asdict
from fractions import Fraction
from math import comb
from typing import Optional, Union

import numpy as np

from . import metric as M
from .errors import MetricDomainError, ScanInconsistentError

MARGIN = 1e-10


@dataclass
class GAReport:
    direct_ga: bool
    sufficient_cond: bool
    metric_finsler: bool
    fs_finsler: bool
    margins: dict = field(default_factory=dict)
    witness: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


@dataclass
class ThresholdResult:
    family: str
    critical_b: float
    bracket: tuple
    bracket_width: float
    table: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["bracket"] = list(self.bracket)
        return d


def ga_direct(metric, m=2, sample_count=2000, x=None, seed=0, margin=MARGIN):
    """Whether F_sym has a positive definite fundamental tensor on samples.

    Returns ``(ok, min_eigenvalue, witness)``. A metric that is not
    positive on the sphere yields ``ok = False`` with the minimum of F as
    the margin.
    """
    Y = M.probe_directions(metric, sample_count, seed)
    with np.errstate(all="ignore"):
        F = np.asarray(metric.value(Y, x), dtype=float)
    if not np.all(np.isfinite(F) & (F > 0)):
        k = int(np.argmin(np.where(np.isfinite(F), F, -np.inf)))
        return False, float(F[k]), {"check": "positivity of F", "y": Y[k].tolist()}
    rep = M.check_finsler(M.symmetrize_m_harmonic(metric, m), x, sample_count, seed, tol=margin)
    return rep.verdict, rep.min_eigenvalue, rep.witness


def sufficient_condition(metric, x_samples=None, y_samples=None, w_samples=None, m=2,
                         sample_count=2000, seed=0, tol=MARGIN):
    """Evaluate the sufficient (GA) criterion and the direct check on one sample set.

    Condition 1 is positive definiteness of g_{F_s}/(m+1) - grad F_a grad F_a^T,
    condition 2 is max eig(F_a Hess F_a) <= tol. Both require F and F_s to
    be Finsler on the samples; ``w_samples`` are only used to report the
    worst quadratic-form value for a witness.
    """
    pair = M.split_sym_asym(metric, m)
    xs = [None] if x_samples is None else list(np.atleast_2d(x_samples))
    Y = M.probe_directions(metric, sample_count, seed) if y_samples is None else np.atleast_2d(y_samples)
    margins = {"cond1_min_eig": np.inf, "cond2_max_eig": -np.inf, "ga_min_eig": np.inf}
    witness = {}
    f_ok = fs_ok = direct = True
    for x in xs:
        with np.errstate(all="ignore"):
            F = np.asarray(metric.value(Y, x), dtype=float)
        if not np.all(np.isfinite(F) & (F > 0)):
            f_ok = False
            k = int(np.argmin(np.where(np.isfinite(F), F, -np.inf)))
            witness = witness or {"check": "positivity of F", "x": _lst(x), "y": Y[k].tolist()}
            continue
        gF = np.linalg.eigvalsh(M.fundamental_tensor_array(metric, Y, x))[:, 0]
        f_ok &= bool(np.min(gF) > tol)
        gs = M.fundamental_tensor_array(pair.F_s, Y, x)
        fs_ok &= bool(np.all(pair.F_s.value(Y, x) > tol) and np.min(np.linalg.eigvalsh(gs)[:, 0]) > tol)
        da = np.asarray(pair.F_a.gradient(Y, x))
        D = gs / (m + 1) - da[:, :, None] * da[:, None, :]
        ev, evec = np.linalg.eigh(D)
        k = int(np.argmin(ev[:, 0]))
        if ev[k, 0] < margins["cond1_min_eig"]:
            margins["cond1_min_eig"] = float(ev[k, 0])
            w = evec[k, :, 0]
            if w_samples is not None:
                W = np.atleast_2d(w_samples)
                q = np.einsum("ki,ij,kj->k", W, D[k], W)
                w = W[int(np.argmin(q))]
            if ev[k, 0] <= tol:
                witness = {"check": "condition 1", "x": _lst(x), "y": Y[k].tolist(), "w": w.tolist()}
        Fa = np.asarray(pair.F_a.value(Y, x))
        Ha = np.asarray(pair.F_a.hessian(Y, x))
        top = np.linalg.eigvalsh(Fa[:, None, None] * 0.5 * (Ha + np.swapaxes(Ha, 1, 2)))[:, -1]
        j = int(np.argmax(top))
        margins["cond2_max_eig"] = max(margins["cond2_max_eig"], float(top[j]))
        if top[j] > tol and not witness:
            witness = {"check": "condition 2", "x": _lst(x), "y": Y[j].tolist()}
        ok, lam, wit = ga_direct(metric, m, sample_count, x, seed)
        direct &= ok
        margins["ga_min_eig"] = min(margins["ga_min_eig"], float(lam))
    suff = (f_ok and fs_ok and margins["cond1_min_eig"] > tol and margins["cond2_max_eig"] <= tol)
    return GAReport(bool(direct), bool(suff), bool(f_ok), bool(fs_ok), margins, witness)


def _lst(x):
    return None if x is None else np.asarray(x).tolist()


# ---------------------------------------------------------------------------
# threshold scans


def family_factory(family, direction=(1.0, 0.0, 0.0)):
    """Map a family name to ``(factory(|b|) -> MetricSpec, phi or None)``."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    if isinstance(family, M.Phi):
        return (lambda b: M.AlphaBetaMetric(family, b * d, 3)), family
    if family in M.FAMILY_PHI:
        phi = M.FAMILY_PHI[family]
        return (lambda b: M.AlphaBetaMetric(phi, b * d, 3, family=family)), phi
    raise ValueError(f"no threshold factory for family {family!r}")


def threshold_verdict(factory, phi, b, m=2, sample_count=2000, seed=0):
    """(F Finsler) and ga_direct for drift length ``b``."""
    if phi is not None:
        try:
            finsler = M.check_alphabeta_finsler(phi, b)
        except MetricDomainError:
            finsler = False
    else:
        finsler = M.check_finsler(factory(b), sample_count=sample_count, seed=seed).verdict
    ga, lam, _ = ga_direct(factory(b), m, sample_count, seed=seed)
    return finsler, ga, lam


def threshold_scan(family, b_low, b_high, tol=0.005, m=2, coarse=13, sample_count=2000,
                   seed=0, with_sufficient=True):
    """Critical drift length where (F Finsler) and (GA) stop holding.

    A coarse grid on [b_low, b_high] must show a single true-to-false
    switch (else :class:`ScanInconsistentError` with the table); the
    bracket is then bisected to width <= ``tol`` and its midpoint returned.
    """
    if not 0 <= b_low < b_high:
        raise ValueError("need 0 <= b_low < b_high")
    if isinstance(family, (str, M.Phi)):
        factory, phi = family_factory(family)
    else:
        factory, phi = family, None
    name = family if isinstance(family, str) else getattr(family, "name", "custom")
    table = []

    def verdict(b):
        fin, ga, lam = threshold_verdict(factory, phi, b, m, sample_count, seed)
        row = {"family": name, "b": float(b), "finsler": fin, "ga_direct": ga,
               "ga_min_eig": lam}
        if with_sufficient:
            rep = sufficient_condition(factory(b), m=m, sample_count=sample_count, seed=seed)
            row["sufficient"] = rep.sufficient_cond
            row["cond1_min_eig"] = rep.margins["cond1_min_eig"]
        table.append(row)
        return fin and ga

    grid = np.linspace(b_low, b_high, coarse)
    v = [verdict(b) for b in grid]
    switches = sum(a != b for a, b in zip(v, v[1:]))
    if not v[0] or v[-1] or switches != 1:
        raise ScanInconsistentError(
            f"{name}: verdicts on [{b_low}, {b_high}] are not a single true-to-false switch", table)
    k = v.index(False)
    lo, hi = float(grid[k - 1]), float(grid[k])
    with_sufficient = False
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if verdict(mid):
            lo = mid
        else:
            hi = mid
    table.sort(key=lambda r: r["b"])
    return ThresholdResult(name, 0.5 * (lo + hi), (lo, hi), hi - lo, table)


# ---------------------------------------------------------------------------
# polynomial inequality


def lemma41_admissible(a, m):
    """Whether ``a`` lies in the admissible interval for ``m``."""
    if m % 2 == 1 or m == 2:
        return 0 < a < 1
    if isinstance(a, Fraction):
        return a > 0 and a * a * (m - 1) < 1
    return 0 < a < 1.0 / np.sqrt(m - 1)


def lemma41_f(a: Union[float, Fraction], m: int, exact: Optional[bool] = None):
    """f(a, m) = sum_k [C(m, 2k+1) - C(m, 2k)] a^(2k).

    Non-negative for a in (0, 1) when m is odd or m = 2, and for
    a in (0, 1/sqrt(m-1)) otherwise; other arguments raise
    :class:`MetricDomainError`. With ``exact`` (default when ``a`` is a
    Fraction or int) the sum is computed in rational arithmetic.
    """
    if int(m) != m or m < 1:
        raise MetricDomainError("m must be a positive integer")
    m = int(m)
    if exact is None:
        exact = isinstance(a, (Fraction, int))
    if exact:
        a = Fraction(a)
    if not lemma41_admissible(a, m):
        raise MetricDomainError(f"a={a} outside the admissible range for m={m}")
    a2 = a * a
    total = Fraction(0) if exact else 0.0
    p = Fraction(1) if exact else 1.0
    for k in range(m // 2 + 1):
        total += (comb(m, 2 * k + 1) - comb(m, 2 * k)) * p
        p *= a2
    return total
