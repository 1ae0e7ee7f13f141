"""Discrete Plateau problem for Busemann-Hausdorff area on a disk mesh.

The surface is a piecewise linear map X of a ring triangulation of the
unit disk. Boundary vertices slide along the curve through monotone
parameters t_i, three of which are pinned. The solver minimises

    E_eps(X) = sum_T A^F(x_T, E1 x E2) / 2 + eps * D(X)

for a decreasing schedule of eps, where D is the cotangent Dirichlet
energy over the parametric disk. Descent directions are preconditioned by
the parametric stiffness matrix (an H^1 gradient), and steps are chosen by
Armijo backtracking.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .cartan import growth_bounds
from .curves import finsler_length
from .errors import ConfigurationError, MeshDegenerationError, SingularIntegrandError

log = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-12


# ---------------------------------------------------------------------------
# mesh


@dataclass
class DiskMesh:
    """Ring triangulation of the unit disk with a spatial vertex map.

    Attributes
    ----------
    u : (V, 2) parametric vertices in the closed unit disk
    X : (V, 3) spatial vertices
    triangles : (T, 3) counter-clockwise in the parameter plane
    boundary : (nb,) ordered boundary loop (counter-clockwise)
    rings : number of rings
    t : (nb,) curve parameters of the boundary vertices, if placed
    """

    u: np.ndarray
    X: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    rings: int
    t: Optional[np.ndarray] = None

    @property
    def n_vertices(self):
        return len(self.u)

    def edges(self):
        T = self.triangles
        e = np.sort(np.concatenate((T[:, [0, 1]], T[:, [1, 2]], T[:, [2, 0]])), axis=1)
        return np.unique(e, axis=0)

    def euler_characteristic(self):
        return self.n_vertices - len(self.edges()) + len(self.triangles)

    def interior(self):
        mask = np.ones(self.n_vertices, bool)
        mask[self.boundary] = False
        return np.flatnonzero(mask)

    def with_X(self, X, t=None):
        return DiskMesh(self.u, np.asarray(X, float), self.triangles, self.boundary, self.rings,
                        self.t if t is None else t)


def _strip(inner, outer):
    """Triangulate the annulus between two rings by advancing in angle."""
    ni, no = len(inner), len(outer)
    tris = []
    i = j = 0
    while i < ni or j < no:
        ai = (i + 1) / ni
        ao = (j + 1) / no
        if j < no and (ao <= ai or i >= ni):
            tris.append((inner[i % ni], outer[j], outer[(j + 1) % no]))
            j += 1
        else:
            tris.append((inner[i % ni], outer[j % no], inner[(i + 1) % ni]))
            i += 1
    return tris


def generate_disk_mesh(rings):
    """Concentric-ring triangulation: ring r has 6r vertices, 6 rings^2 triangles."""
    rings = int(rings)
    if rings < 1:
        raise ConfigurationError("rings must be >= 1")
    pts = [np.zeros(2)]
    ring_idx = [np.array([0])]
    n = 1
    for r in range(1, rings + 1):
        k = 6 * r
        th = 2.0 * np.pi * np.arange(k) / k
        pts.append(np.column_stack((np.cos(th), np.sin(th))) * (r / rings))
        ring_idx.append(np.arange(n, n + k))
        n += k
    u = np.vstack(pts)
    tris = []
    for r in range(1, rings + 1):
        inner, outer = ring_idx[r - 1], ring_idx[r]
        if r == 1:
            tris += [(0, outer[j], outer[(j + 1) % 6]) for j in range(6)]
        else:
            tris += _strip(inner, outer)
    X = np.column_stack((u, np.zeros(len(u))))
    return DiskMesh(u, X, np.array(tris, dtype=np.int64), ring_idx[-1].copy(), rings)


# ---------------------------------------------------------------------------
# energies


def _param_geometry(mesh):
    u = mesh.u[mesh.triangles]
    e1, e2 = u[:, 1] - u[:, 0], u[:, 2] - u[:, 0]
    area = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    return u, area


def stiffness_matrix(mesh):
    """Cotangent stiffness matrix K of the parametric mesh (D(X) = tr(X^T K X) / 2)."""
    u, area = _param_geometry(mesh)
    if np.any(area < DEGENERATE_AREA):
        raise MeshDegenerationError("degenerate parametric triangle", int(np.argmin(area)))
    T = mesh.triangles
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, o = T[:, (k + 1) % 3], T[:, (k + 2) % 3], T[:, k]
        a = mesh.u[i] - mesh.u[o]
        b = mesh.u[j] - mesh.u[o]
        cot = np.sum(a * b, axis=1) / (2.0 * area)
        w = 0.5 * cot
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    n = mesh.n_vertices
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def discrete_dirichlet(mesh, X=None, K=None):
    """Cotangent Dirichlet energy 1/2 int |grad X|^2 over the parametric disk."""
    X = mesh.X if X is None else X
    K = stiffness_matrix(mesh) if K is None else K
    return 0.5 * float(np.sum(X * (K @ X)))


def triangle_normals(mesh, X=None):
    X = mesh.X if X is None else X
    P = X[mesh.triangles]
    return np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), P


def euclidean_area(mesh, X=None):
    N, _ = triangle_normals(mesh, X)
    return 0.5 * float(np.sum(np.linalg.norm(N, axis=1)))


def _area_terms(ci, mesh, X, with_grad):
    N, P = triangle_normals(mesh, X)
    nn = np.linalg.norm(N, axis=1)
    live = np.flatnonzero(nn > 1e-14)
    xc = P.mean(axis=1)[live] if ci.metric.x_dependent else None
    try:
        out = ci.batch(N[live], xc, with_grad=with_grad)
    except SingularIntegrandError as exc:
        raise SingularIntegrandError(f"triangle-level failure: {exc}") from exc
    A, G = out if with_grad else (out, None)
    return N, P, live, A, G, xc


def discrete_finsler_area(ci, mesh, X=None):
    """sum_T A^F(centroid_T, E1 x E2) / 2; triangles with |E1 x E2| <= 1e-14 add 0."""
    X = mesh.X if X is None else X
    _, _, _, A, _, _ = _area_terms(ci, mesh, X, False)
    return 0.5 * float(np.sum(A))


def finsler_area_gradient(ci, mesh, X=None):
    """(area, dArea/dX of shape (V, 3))."""
    X = mesh.X if X is None else X
    N, P, live, A, G, xc = _area_terms(ci, mesh, X, True)
    T = mesh.triangles[live]
    P = P[live]
    grad = np.zeros_like(X)
    g = 0.5 * G
    np.add.at(grad, T[:, 0], np.cross(g, P[:, 2] - P[:, 1]))
    np.add.at(grad, T[:, 1], np.cross(g, P[:, 0] - P[:, 2]))
    np.add.at(grad, T[:, 2], np.cross(g, P[:, 1] - P[:, 0]))
    if xc is not None:
        h = 1e-6
        dx = np.zeros_like(xc)
        for k in range(3):
            e = np.zeros(3)
            e[k] = h
            dx[:, k] = (ci.batch(N[live], xc + e) - ci.batch(N[live], xc - e)) / (2 * h)
        for c in range(3):
            np.add.at(grad, T[:, c], dx / 6.0)
    return 0.5 * float(np.sum(A)), grad


# ---------------------------------------------------------------------------
# diagnostics


def _jacobians(mesh, X=None):
    X = mesh.X if X is None else X
    u, area = _param_geometry(mesh)
    Eu = np.stack((u[:, 1] - u[:, 0], u[:, 2] - u[:, 0]), axis=-1)
    P = X[mesh.triangles]
    Ex = np.stack((P[:, 1] - P[:, 0], P[:, 2] - P[:, 0]), axis=-1)
    J = Ex @ np.linalg.inv(Eu)
    return J, area


def conformality_defect(mesh, X=None):
    """Area-weighted mean of ((|X_1|^2-|X_2|^2)^2 + 4 (X_1.X_2)^2) / (|X_1|^2+|X_2|^2)^2."""
    J, area = _jacobians(mesh, X)
    a, b = J[:, :, 0], J[:, :, 1]
    aa, bb, ab = np.sum(a * a, 1), np.sum(b * b, 1), np.sum(a * b, 1)
    den = (aa + bb) ** 2
    d = np.where(den > 0, ((aa - bb) ** 2 + 4 * ab ** 2) / np.where(den > 0, den, 1.0), 0.0)
    return float(np.sum(area * d) / np.sum(area))


def isoperimetric_bound(area, length, bounds):
    """Right-hand side M_F^2 / (4 pi m_F^2) L^2 and the verdict area <= bound."""
    rhs = bounds.M_F ** 2 / (4.0 * np.pi * bounds.m_F ** 2) * length ** 2
    return rhs, bool(area <= rhs * (1 + 1e-12))


def isoperimetric_check(result, bounds):
    """Verdict of the isoperimetric inequality for a solve result."""
    return isoperimetric_bound(result.finsler_area, result.finsler_boundary_length, bounds)[1]


# ---------------------------------------------------------------------------
# boundary placement


def anchor_indices(mesh, anchors=3):
    nb = len(mesh.boundary)
    return np.array([k * nb // anchors for k in range(anchors)])


def boundary_parameters(mesh, curve):
    """Monotone t on the boundary loop with the anchors at equally spaced vertices."""
    nb = len(mesh.boundary)
    if nb < 3 * len(curve.anchors):
        raise ConfigurationError(f"boundary has {nb} vertices; need >= {3 * len(curve.anchors)}")
    idx = anchor_indices(mesh, len(curve.anchors))
    knots_i = np.append(idx, nb)
    knots_t = np.append(np.asarray(curve.anchors), curve.anchors[0] + 1.0)
    if np.any(np.diff(knots_t) <= 0) or knots_t[-1] - knots_t[0] != 1.0:
        raise ConfigurationError("anchor parameters collide")
    return np.interp(np.arange(nb), knots_i, knots_t)


def initial_surface(curve, mesh):
    """Boundary on the curve, interior by the discrete harmonic extension.

    The extension solves K_II X_I = -K_IB X_B exactly (the fixed point
    of neighbour-averaging sweeps with cotangent weights).
    """
    t = boundary_parameters(mesh, curve)
    X = np.zeros((mesh.n_vertices, 3))
    X[mesh.boundary] = curve(t)
    K = stiffness_matrix(mesh).tocsc()
    I = mesh.interior()
    if len(I):
        KII = K[I][:, I]
        KIB = K[I][:, mesh.boundary]
        X[I] = splu(KII.tocsc()).solve(-(KIB @ X[mesh.boundary]))
    return mesh.with_X(X, t)


def project_parameters(t, anchor_idx, anchors):
    """Sorted clamp: within each anchor arc, sort and clip into the open arc."""
    t = t.copy()
    nb = len(t)
    knots = list(anchor_idx) + [nb]
    ends = list(anchors) + [anchors[0] + 1.0]
    for k in range(len(anchor_idx)):
        lo, hi = knots[k], knots[k + 1]
        t[lo] = ends[k]
        seg = slice(lo + 1, hi)
        if hi - lo > 1:
            gap = 1e-9 * (ends[k + 1] - ends[k])
            t[seg] = np.clip(np.sort(t[seg]), ends[k] + gap, ends[k + 1] - gap)
    return t


# ---------------------------------------------------------------------------
# solver


@dataclass
class SolveConfig:
    eps_schedule: tuple = (1e-1, 1e-2, 1e-3, 1e-4)
    tol: float = 1e-6
    max_iter: int = 300
    armijo_c: float = 1e-4
    max_halvings: int = 40
    initial_step: float = 1.0
    length_nodes: int = 256
    bound_samples: int = 2000


@dataclass
class SolveResult:
    mesh: DiskMesh
    finsler_area: float
    dirichlet_energy: float
    conformality_defect: float
    finsler_boundary_length: float
    isoperimetric_ok: bool
    isoperimetric_rhs: float
    euclidean_area: float
    sandwich: tuple
    converged: bool
    eps_trace: list = field(default_factory=list)
    iterations: int = 0
    min_normal: float = 0.0
    message: str = ""

    def to_dict(self):
        return {
            "finsler_area": self.finsler_area,
            "dirichlet_energy": self.dirichlet_energy,
            "conformality_defect": self.conformality_defect,
            "finsler_boundary_length": self.finsler_boundary_length,
            "isoperimetric_ok": self.isoperimetric_ok,
            "isoperimetric_rhs": self.isoperimetric_rhs,
            "euclidean_area": self.euclidean_area,
            "sandwich": list(self.sandwich),
            "converged": self.converged,
            "eps_trace": self.eps_trace,
            "iterations": self.iterations,
            "min_normal": self.min_normal,
            "message": self.message,
            "vertices": int(self.mesh.n_vertices),
            "triangles": int(len(self.mesh.triangles)),
        }


class _Problem:
    """Energies of the free variables: interior X and non-anchor boundary t."""

    def __init__(self, ci, curve, mesh):
        self.ci = ci
        self.curve = curve
        self.mesh = mesh
        self.K = stiffness_matrix(mesh)
        self.I = mesh.interior()
        self.B = mesh.boundary
        self.aidx = anchor_indices(mesh, len(curve.anchors))
        free = np.ones(len(self.B), bool)
        free[self.aidx] = False
        self.tfree = np.flatnonzero(free)
        self.KII = splu(self.K[self.I][:, self.I].tocsc()) if len(self.I) else None
        self.KII_mat = self.K[self.I][:, self.I].tocsr()
        self.KIB = self.K[self.I][:, self.B].tocsr()
        S = self.K[self.B][:, self.B].toarray()
        if self.KII is not None:
            S -= self.KIB.T @ self.KII.solve(self.KIB.toarray())
        self.S = 0.5 * (S + S.T)

    def assemble(self, XI, t):
        X = np.empty((self.mesh.n_vertices, 3))
        X[self.I] = XI
        X[self.B] = self.curve(t)
        return X

    def degenerate(self, X):
        N, _ = triangle_normals(self.mesh, X)
        a = 0.5 * np.linalg.norm(N, axis=1)
        k = int(np.argmin(a))
        return k if a[k] < DEGENERATE_AREA else -1

    def dirichlet(self, X):
        return discrete_dirichlet(self.mesh, X, self.K)

    def energy(self, X, eps):
        return discrete_finsler_area(self.ci, self.mesh, X) + eps * self.dirichlet(X)

    def interior_gradient(self, X, eps):
        _, gA = finsler_area_gradient(self.ci, self.mesh, X)
        return (gA + eps * (self.K @ X))[self.I]

    def harmonic_response(self, dXB):
        """Interior displacement -K_II^-1 K_IB dX_B that keeps the boundary change harmonic."""
        if self.KII is None:
            return np.zeros((0, 3))
        return -self.KII.solve(self.KIB @ dXB)

    def boundary_gradient(self, X, t):
        """d/dt of D when the interior follows the boundary by its harmonic response."""
        KX = self.K @ X
        gB = KX[self.B]
        if self.KII is not None:
            gB = gB - self.KIB.T @ self.KII.solve(KX[self.I])
        return np.sum(gB * self.curve.derivative(t), axis=1)[self.tfree]

    def vertex_normals(self, X):
        N, _ = triangle_normals(self.mesh, X)
        vn = np.zeros_like(X)
        for c in range(3):
            np.add.at(vn, self.mesh.triangles[:, c], N)
        nrm = np.linalg.norm(vn, axis=1, keepdims=True)
        return vn / np.where(nrm > 0, nrm, 1.0)

    def interior_direction(self, g, X=None, eps=None):
        """H^1 step; with ``X`` and ``eps`` the tangential part is scaled by 1/eps.

        Area is invariant under tangential motion, so E_eps is stiff only
        as eps K along the surface; splitting the stiffness along vertex
        normals keeps reparametrisation modes from stalling at small eps.
        """
        if X is None or eps is None or eps >= 1.0:
            return -self.KII.solve(g)
        n = self.vertex_normals(X)[self.I]
        m = len(self.I)
        rows = np.repeat(np.arange(3 * m), 3)
        cols = (3 * np.arange(m)[:, None, None] + np.arange(3)[None, None, :]).repeat(3, axis=1).ravel()
        Pn = np.einsum("ia,ib->iab", n, n)
        W = (Pn + np.sqrt(eps) * (np.eye(3) - Pn)).ravel()
        Wm = sp.csr_matrix((W, (rows, cols)), shape=(3 * m, 3 * m))
        R = sp.kron(self.KII_mat, sp.identity(3), format="csr")
        M = Wm @ R @ Wm + 1e-12 * sp.identity(3 * m)
        d = splu(M.tocsc()).solve(-(g.ravel()))
        return d.reshape(m, 3)

    def boundary_direction(self, g, t):
        """Gauss-Newton step for D in t using the boundary Schur complement."""
        T = self.curve.derivative(t[self.tfree])
        f = self.tfree
        H = self.S[np.ix_(f, f)] * (T @ T.T)
        H += 1e-12 * np.trace(H) / len(f) * np.eye(len(f))
        return -np.linalg.solve(H, g)


def _armijo(f0, slope, trial, alpha, cfg):
    """Backtrack from ``alpha`` by halving; ``trial(a)`` returns (value, state) or None."""
    for _ in range(cfg.max_halvings):
        out = trial(alpha)
        if out is not None and out[0] <= f0 + cfg.armijo_c * alpha * slope:
            return alpha, out
        alpha *= 0.5
    return None, None


def solve(ci, curve, config=None, rings=16, mesh=None, initial=None, callback=None):
    """Minimise discrete Finsler area spanning ``curve`` by eps-continuation.

    Each iteration takes an interior step on E_eps = area + eps * D and a
    boundary step on D alone, in which the interior follows the boundary by
    its discrete harmonic response. Along the boundary the discrete area mostly
    measures how well the inscribed polygon fills the curve (largest for
    even spacing), so letting it drive t would crowd vertices at the
    anchors; the Dirichlet energy instead picks the conformal
    reparametrisation, as in the Douglas-Courant approach.

    The start is the harmonic extension of the boundary on ``mesh`` (or a
    fresh ``rings`` mesh), unless ``initial`` supplies a placed mesh with
    boundary parameters ``t``.

    ``callback(X, t, eps)`` is called after every accepted step.

    Returns a :class:`SolveResult`; ``converged`` is False when a stage hit
    ``max_iter`` or the line search failed (the best iterate is kept).
    Raises :class:`MeshDegenerationError` if the starting surface is
    degenerate.
    """
    cfg = config or SolveConfig()
    if cfg.tol <= 0:
        raise ConfigurationError("tol must be positive")
    if initial is not None:
        if initial.t is None:
            raise ConfigurationError("initial mesh needs boundary parameters t")
        mesh = initial
    else:
        mesh = initial_surface(curve, mesh if mesh is not None else generate_disk_mesh(rings))
    pb = _Problem(ci, curve, mesh)
    X = mesh.X.copy()
    t = mesh.t.copy()
    bad = pb.degenerate(X)
    if bad >= 0:
        raise MeshDegenerationError(f"initial surface has a collapsed triangle {bad}", bad)
    converged = True
    total = 0
    trace = []
    message = ""
    step_x = step_t = cfg.initial_step
    t0 = time.perf_counter()

    def trial_x(alpha, dI, eps):
        Xn = X.copy()
        Xn[pb.I] += alpha * dI
        if pb.degenerate(Xn) >= 0:
            return None
        try:
            return pb.energy(Xn, eps), Xn
        except SingularIntegrandError:
            return None

    def trial_t(alpha, dt):
        tn = t.copy()
        tn[pb.tfree] += alpha * dt
        tn = project_parameters(tn, pb.aidx, curve.anchors)
        XB = curve(tn)
        Xn = pb.assemble(X[pb.I] + pb.harmonic_response(XB - X[pb.B]), tn)
        if pb.degenerate(Xn) >= 0:
            return None
        return pb.dirichlet(Xn), (Xn, tn)

    for eps in cfg.eps_schedule:
        E = pb.energy(X, eps)
        steps = []
        stage_ok = False
        it = 0
        for it in range(1, cfg.max_iter + 1):
            gI = pb.interior_gradient(X, eps)
            gt = pb.boundary_gradient(X, t)
            gnorm = max(np.max(np.abs(gI), initial=0.0), np.max(np.abs(gt), initial=0.0))
            if gnorm < cfg.tol:
                stage_ok = True
                break
            moved = False
            if len(pb.I) and np.max(np.abs(gI)) >= cfg.tol:
                dI = pb.interior_direction(gI, X, eps)
                slope = float(np.sum(gI * dI))
                a, out = _armijo(E, slope, lambda a: trial_x(a, dI, eps),
                                 min(2.0 * step_x, cfg.initial_step), cfg)
                if a is not None:
                    steps.append((E, out[0]))
                    E, X = out
                    step_x = a
                    moved = True
                    if callback is not None:
                        callback(X, t, eps)
            if len(pb.tfree) and np.max(np.abs(gt)) >= cfg.tol:
                dt = pb.boundary_direction(gt, t)
                a, out = _armijo(pb.dirichlet(X), float(np.sum(gt * dt)), lambda a: trial_t(a, dt),
                                 min(2.0 * step_t, cfg.initial_step), cfg)
                if a is not None:
                    X, t = out[1]
                    step_t = a
                    E = pb.energy(X, eps)
                    moved = True
                    if callback is not None:
                        callback(X, t, eps)
            if not moved:
                message = f"line search failed at eps={eps:g}, iteration {it}"
                break
        total += it
        area = discrete_finsler_area(ci, mesh, X)
        trace.append({"eps": eps, "finsler_area": area, "objective": E, "iterations": it,
                      "converged": stage_ok, "interior_steps": steps})
        converged &= stage_ok
        log.info("eps=%g area=%.10g iters=%d ok=%s (%.1fs)", eps, area, it, stage_ok,
                 time.perf_counter() - t0)
        if message:
            break
    final = mesh.with_X(X, t)
    area = discrete_finsler_area(ci, final)
    euc = euclidean_area(final)
    gb = growth_bounds(ci, cfg.bound_samples)
    L = finsler_length(ci.metric, curve, cfg.length_nodes)
    rhs, iso = isoperimetric_bound(area, L, gb)
    N, _ = triangle_normals(final)
    if not converged and not message:
        message = "iteration limit reached"
    return SolveResult(final, area, discrete_dirichlet(final), conformality_defect(final), L, iso, rhs,
                       euc, (gb.m1 * euc, gb.m2 * euc), bool(converged), trace, total,
                       float(np.min(np.linalg.norm(N, axis=1))), message)


def write_obj(mesh, path):
    """Write vertices and faces as ASCII Wavefront OBJ."""
    with open(path, "w") as fh:
        fh.write(f"# {mesh.n_vertices} vertices, {len(mesh.triangles)} faces\n")
        for v in mesh.X:
            fh.write(f"v {v[0]:.12g} {v[1]:.12g} {v[2]:.12g}\n")
        for f in mesh.triangles + 1:
            fh.write(f"f {f[0]} {f[1]} {f[2]}\n")
