"""Pure-numpy Cartan kernel; reference twin of ``_kernels.pyx``.

Both implement the same contract::

    cartan_batch(Z, drift, kind, params, n_nodes, with_grad) -> (A, G, bad)

``Z`` (T, 3) normals, ``drift`` (T, 3) per-normal drift vectors.
``A[t]`` is the Busemann-Hausdorff Cartan integrand for m = 2,
``|Z| / mean_k F(y_k)^-2`` over the great circle of Z, and ``G[t]`` its
Z-gradient from the Radon differentiation rule::

    grad A = (Z I0 - 2 mean_k[y_k F_k^-3 (Z . grad F_k)]) / (|Z| I0^2)

with ``I0 = mean_k F_k^-2``. ``bad`` is the first index whose metric was
non-positive or non-finite on the circle (-1 when none).

Metric kinds (evaluated on unit y with s = b.y):
    0  phi(s) polynomial, coefficients ``params``
    1  Matsumoto phi(s) = 1 / (1 - s)
    2  perturbed quartic with eps = params[0], plus b.y
"""
import numpy as np

BLOCK = 1024


def _frames(Zh):
    k = np.argmin(np.abs(Zh), axis=-1)
    e = np.zeros_like(Zh)
    idx = np.arange(len(Zh))
    e[idx, k] = 1.0
    f1 = e - Zh[idx, k][:, None] * Zh
    f1 /= np.linalg.norm(f1, axis=-1, keepdims=True)
    return f1, np.cross(Zh, f1)


def _metric(Y, b, kind, params):
    s = np.einsum("tkj,tj->tk", Y, b)
    if kind == 0:
        c = params
        phi = np.zeros_like(s)
        dphi = np.zeros_like(s)
        for coef in c[::-1]:
            dphi = dphi * s + phi
            phi = phi * s + coef
        F = phi
        dF = phi[..., None] * Y + dphi[..., None] * (b[:, None, :] - s[..., None] * Y)
    elif kind == 1:
        with np.errstate(divide="ignore"):
            d = 1.0 / (1.0 - s)
        F = d
        dF = d[..., None] * Y + (d * d)[..., None] * (b[:, None, :] - s[..., None] * Y)
        F = np.where(1.0 - s > 0, F, -1.0)
    elif kind == 2:
        eps = params[0]
        Y2 = Y * Y
        sP = np.sqrt(np.sum(Y2 * Y2, axis=-1))
        Fr = np.sqrt(sP + eps)
        dQ = 2.0 * Y2 * Y / sP[..., None] + 2.0 * eps * Y
        F = Fr + s
        dF = dQ / (2.0 * Fr[..., None]) + b[:, None, :]
    else:
        raise ValueError(f"unknown kernel kind {kind}")
    return F, dF


def cartan_batch(Z, drift, kind, params, n_nodes, with_grad=True):
    Z = np.ascontiguousarray(Z, dtype=float)
    drift = np.ascontiguousarray(drift, dtype=float)
    params = np.asarray(params, dtype=float)
    T = len(Z)
    A = np.empty(T)
    G = np.empty((T, 3)) if with_grad else None
    th = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    c, s = np.cos(th), np.sin(th)
    bad = -1
    for lo in range(0, T, BLOCK):
        hi = min(T, lo + BLOCK)
        Zb = Z[lo:hi]
        nz = np.linalg.norm(Zb, axis=-1)
        f1, f2 = _frames(Zb / nz[:, None])
        Y = c[None, :, None] * f1[:, None, :] + s[None, :, None] * f2[:, None, :]
        F, dF = _metric(Y, drift[lo:hi], kind, params)
        ok = np.all(np.isfinite(F) & (F > 0), axis=-1)
        if not np.all(ok) and bad < 0:
            bad = lo + int(np.argmin(ok))
        with np.errstate(all="ignore"):
            inv2 = F ** -2.0
            I0 = inv2.mean(axis=-1)
            A[lo:hi] = nz / I0
            if with_grad:
                zdf = np.einsum("tkj,tj->tk", dF, Zb)
                w = inv2 / F * zdf
                corr = np.einsum("tk,tkj->tj", w, Y) / n_nodes
                G[lo:hi] = (Zb * I0[:, None] - 2.0 * corr) / (nz * I0 * I0)[:, None]
    return A, G, bad
