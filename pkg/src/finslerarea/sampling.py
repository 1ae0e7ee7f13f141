"""Deterministic direction sets on spheres and great-circle quadrature nodes."""
import numpy as np

from .errors import MetricDomainError

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))


def fibonacci_sphere(n, offset=0.0):
    """Quasi-uniform points on S^2 from the Fibonacci lattice.

    Parameters
    ----------
    n : int
        Number of points.
    offset : float
        Azimuthal shift in radians; lets callers draw distinct but
        reproducible lattices.

    Returns
    -------
    (n, 3) ndarray of unit vectors.
    """
    if n < 1:
        raise ValueError("need at least one point")
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = GOLDEN_ANGLE * i + offset
    return np.column_stack((r * np.cos(phi), r * np.sin(phi), z))


def circle_points(n, offset=0.0):
    t = 2.0 * np.pi * np.arange(n) / n + offset
    return np.column_stack((np.cos(t), np.sin(t)))


def sphere_samples(dim, n, seed=None):
    """Quasi-uniform unit vectors in R^dim.

    Fibonacci lattice for dim=3, uniform grid for dim=2, normalised
    Gaussians (seeded) otherwise. A nonzero ``seed`` rotates the
    deterministic sets so repeated draws stay reproducible.
    """
    if dim == 3:
        offset = 0.0 if not seed else np.random.default_rng(seed).uniform(0, 2 * np.pi)
        return fibonacci_sphere(n, offset)
    if dim == 2:
        offset = 0.0 if not seed else np.random.default_rng(seed).uniform(0, 2 * np.pi)
        return circle_points(n, offset)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def symmetric(directions):
    """Stack ``directions`` with their antipodes."""
    return np.concatenate((directions, -directions))


def drift_directions(b, n_meridian=401):
    """Directions that expose the extremes of metrics built from a drift b.

    Includes +-b/|b|, the great circle orthogonal to b, and a meridian
    from b to -b (the whole range of s = b.y/|y| for (alpha, beta)
    metrics), plus coordinate axes and cube diagonals.
    """
    b = np.asarray(b, dtype=float)
    dim = b.shape[-1]
    out = [np.eye(dim), -np.eye(dim)]
    if dim == 3:
        diag = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], float)
        out.append(diag / np.sqrt(3.0))
    nb = np.linalg.norm(b)
    if nb > 0 and dim >= 2:
        bh = b / nb
        f1 = _complement_basis(bh)[0]
        phi = np.linspace(0.0, np.pi, n_meridian)
        out.append(np.cos(phi)[:, None] * bh + np.sin(phi)[:, None] * f1)
        if dim == 3:
            f1, f2 = _complement_basis(bh)
            th = np.linspace(0.0, 2 * np.pi, 256, endpoint=False)
            out.append(np.cos(th)[:, None] * f1 + np.sin(th)[:, None] * f2)
    return np.concatenate(out)


def _complement_basis(z):
    """Orthonormal basis of z-perp for a unit vector z in R^n (Gram-Schmidt)."""
    n = z.shape[0]
    basis = []
    for k in np.argsort(np.abs(z), kind="stable"):
        e = np.zeros(n)
        e[k] = 1.0
        v = e - (e @ z) * z
        for f in basis:
            v -= (v @ f) * f
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
        if len(basis) == n - 1:
            break
    return basis


def complement_frame(Z):
    """Orthonormal frame (f1, f2) of Z-perp in R^3 with f1 x f2 parallel to Z.

    The seed axis is the coordinate axis least aligned with Z (first
    index wins ties); Gram-Schmidt gives f1 and f2 = Zhat x f1.
    """
    Z = np.asarray(Z, dtype=float)
    nz = np.linalg.norm(Z)
    if not nz > 0:
        raise MetricDomainError("Z must be nonzero")
    zh = Z / nz
    k = int(np.argmin(np.abs(zh)))
    e = np.zeros(3)
    e[k] = 1.0
    f1 = e - zh[k] * zh
    f1 /= np.linalg.norm(f1)
    f2 = np.cross(zh, f1)
    return f1, f2


def complement_frames(Z):
    """Vectorised :func:`complement_frame` for Z of shape (T, 3)."""
    Z = np.asarray(Z, dtype=float)
    nz = np.linalg.norm(Z, axis=-1)
    if np.any(~(nz > 0)):
        raise MetricDomainError("Z must be nonzero")
    zh = Z / nz[:, None]
    k = np.argmin(np.abs(zh), axis=-1)
    e = np.zeros_like(zh)
    e[np.arange(len(zh)), k] = 1.0
    f1 = e - zh[np.arange(len(zh)), k][:, None] * zh
    f1 /= np.linalg.norm(f1, axis=-1, keepdims=True)
    f2 = np.cross(zh, f1)
    return f1, f2


def great_circle(Z, n_nodes):
    """Unit vectors cos(t) f1 + sin(t) f2 at the periodic trapezoid nodes."""
    f1, f2 = complement_frame(Z)
    t = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    return np.cos(t)[:, None] * f1 + np.sin(t)[:, None] * f2
