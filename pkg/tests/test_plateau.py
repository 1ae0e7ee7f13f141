import numpy as np
import pytest
from numpy.testing import assert_allclose

from finslerarea import metric as M
from finslerarea.cartan import CartanIntegrand, growth_bounds
from finslerarea.curves import circle, ellipse, helical_arc_closure, planar_polygon_smoothed
from finslerarea.errors import ConfigurationError, MeshDegenerationError
from finslerarea.plateau import (SolveConfig, anchor_indices, boundary_parameters, conformality_defect,
                                 discrete_dirichlet, discrete_finsler_area, euclidean_area,
                                 finsler_area_gradient, generate_disk_mesh, initial_surface,
                                 isoperimetric_bound, isoperimetric_check, project_parameters, solve,
                                 stiffness_matrix, write_obj)

FLAT_RANDERS = np.pi * 0.91 ** 1.5


def flat(rings=16):
    return initial_surface(circle(), generate_disk_mesh(rings))


class TestMesh:
    def test_counts(self):
        m2 = generate_disk_mesh(2)
        assert m2.n_vertices == 19
        m1 = generate_disk_mesh(1)
        assert m1.n_vertices == 7 and len(m1.triangles) == 6

    @pytest.mark.parametrize("rings", [1, 2, 4, 9])
    def test_disk_topology(self, rings):
        m = generate_disk_mesh(rings)
        assert m.euler_characteristic() == 1
        assert len(m.triangles) == 6 * rings ** 2
        assert len(m.boundary) == 6 * rings

    def test_counter_clockwise(self):
        m = generate_disk_mesh(5)
        u = m.u[m.triangles]
        e1, e2 = u[:, 1] - u[:, 0], u[:, 2] - u[:, 0]
        assert np.all(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] > 0)

    def test_rings_validated(self):
        with pytest.raises(ConfigurationError):
            generate_disk_mesh(0)


class TestInitialSurface:
    def test_circle_is_flat_identity(self):
        m = flat(8)
        assert_allclose(m.X[:, :2], m.u, atol=1e-9)
        assert np.max(np.abs(m.X[:, 2])) <= 1e-12

    def test_ellipse_planar(self):
        m = initial_surface(ellipse(), generate_disk_mesh(6))
        assert np.max(np.abs(m.X[:, 2])) <= 1e-12

    def test_circle_conformal(self):
        assert conformality_defect(flat(8)) <= 1e-6

    def test_anchors(self):
        m = generate_disk_mesh(4)
        t = boundary_parameters(m, circle())
        idx = anchor_indices(m)
        assert_allclose(t[idx], [0.0, 1 / 3, 2 / 3], atol=1e-15)
        assert np.all(np.diff(t) > 0)

    def test_too_few_boundary_vertices(self):
        with pytest.raises(ConfigurationError):
            initial_surface(circle(), generate_disk_mesh(1))

    def test_project_parameters(self):
        m = generate_disk_mesh(3)
        idx = anchor_indices(m)
        t = boundary_parameters(m, circle())
        rng = np.random.default_rng(0)
        t2 = project_parameters(t + rng.normal(0, 0.05, len(t)), idx, (0.0, 1 / 3, 2 / 3))
        assert_allclose(t2[idx], [0.0, 1 / 3, 2 / 3])
        assert np.all(np.diff(t2) > 0) and t2[-1] < 1.0


class TestEnergies:
    def test_flat_disk_areas(self):
        m = flat()
        assert euclidean_area(m) == pytest.approx(np.pi, rel=5e-3)
        assert discrete_finsler_area(CartanIntegrand(M.euclidean()), m) == pytest.approx(np.pi, rel=5e-3)
        ci = CartanIntegrand(M.randers([0.0, 0.0, 0.3]))
        assert discrete_finsler_area(ci, m) == pytest.approx(np.pi, rel=5e-3)
        ci = CartanIntegrand(M.randers([0.3, 0.0, 0.0]))
        assert discrete_finsler_area(ci, m) == pytest.approx(FLAT_RANDERS, rel=5e-3)
        assert discrete_finsler_area(ci, m) / euclidean_area(m) == pytest.approx(0.91 ** 1.5, rel=1e-13)

    def test_dirichlet_identity(self):
        m = flat()
        assert discrete_dirichlet(m) == pytest.approx(np.pi, rel=1e-2)
        assert discrete_dirichlet(m) == pytest.approx(euclidean_area(m), rel=1e-12)

    def test_dirichlet_stretched(self):
        m = flat()
        X = m.X * np.array([2.0, 1.0, 1.0])
        assert discrete_dirichlet(m, X) == pytest.approx(2.5 * euclidean_area(m), rel=1e-12)
        assert discrete_dirichlet(m, X) == pytest.approx(2.5 * np.pi, rel=1e-2)

    def test_dirichlet_dominates_area(self):
        rng = np.random.default_rng(1)
        m = generate_disk_mesh(4)
        K = stiffness_matrix(m)
        for _ in range(100):
            X = rng.standard_normal((m.n_vertices, 3))
            assert discrete_dirichlet(m, X, K) >= euclidean_area(m, X) * (1 - 1e-12)

    def test_conformality_examples(self):
        m = flat()
        assert conformality_defect(m) <= 1e-12
        assert conformality_defect(m, m.X * np.array([2.0, 1.0, 1.0])) == pytest.approx(0.36, abs=1e-12)
        R = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        assert conformality_defect(m, m.X @ R.T) <= 1e-12

    def test_isoperimetric_examples(self):
        gb_e = growth_bounds(CartanIntegrand(M.euclidean()))
        rhs, ok = isoperimetric_bound(np.pi, 2 * np.pi, gb_e)
        assert rhs == pytest.approx(np.pi) and ok
        gb = growth_bounds(CartanIntegrand(M.randers([0.3, 0.0, 0.0])))
        rhs, ok = isoperimetric_bound(2.72766, 2 * np.pi, gb)
        assert rhs == pytest.approx(1.69 / 0.49 * np.pi, rel=1e-12) and ok
        assert rhs == pytest.approx(10.84, abs=5e-3)
        assert not isoperimetric_bound(20.0, 2 * np.pi, gb)[1]

    def test_degenerate_parametric_mesh(self):
        m = generate_disk_mesh(2)
        bad = m.with_X(m.X)
        bad.u = m.u.copy()
        bad.u[1] = bad.u[0]
        with pytest.raises(MeshDegenerationError):
            stiffness_matrix(bad)


@pytest.mark.property
class TestPlateauProperties:
    @pytest.mark.parametrize("metric", [M.randers([0.2, -0.1, 0.3]), M.perturbed_quartic(0.2, [0.1, 0, 0]),
                                        M.composite(M.euclidean(), lambda x: 0.2 * np.sin(x))],
                             ids=["randers", "quartic", "composite"])
    def test_gradient_vs_difference_quotients(self, metric):
        rng = np.random.default_rng(3)
        ci = CartanIntegrand(metric)
        m = generate_disk_mesh(3)
        X = m.X + 0.1 * rng.standard_normal(m.X.shape)
        _, G = finsler_area_gradient(ci, m, X)
        for _ in range(5):
            V = rng.standard_normal(X.shape)
            h = 1e-6
            dq = (discrete_finsler_area(ci, m, X + h * V) - discrete_finsler_area(ci, m, X - h * V)) / (2 * h)
            assert np.sum(G * V) == pytest.approx(dq, abs=1e-5 * max(1.0, abs(dq)))

    def test_parametrization_invariance(self):
        rng = np.random.default_rng(4)
        ci = CartanIntegrand(M.randers([0.2, 0.1, 0.0]))
        m = generate_disk_mesh(4)
        X = m.X + 0.05 * rng.standard_normal(m.X.shape)
        a = discrete_finsler_area(ci, m, X)
        perm = rng.permutation(m.n_vertices)
        inv = np.argsort(perm)
        relabeled = m.with_X(X[perm])
        relabeled.triangles = inv[m.triangles]
        assert discrete_finsler_area(ci, relabeled) == pytest.approx(a, abs=1e-12)
        rolled = m.with_X(X)
        rolled.triangles = np.roll(m.triangles, 1, axis=1)
        assert discrete_finsler_area(ci, rolled) == pytest.approx(a, abs=1e-12)
        rotated = m.with_X(X)
        c, s = np.cos(0.7), np.sin(0.7)
        rotated.u = m.u @ np.array([[c, -s], [s, c]]).T
        assert discrete_finsler_area(ci, rotated) == pytest.approx(a, abs=1e-12)

    def test_sandwich_on_random_surfaces(self):
        rng = np.random.default_rng(5)
        ci = CartanIntegrand(M.matsumoto([0.3, 0.1, 0.0]))
        gb = growth_bounds(ci)
        m = generate_disk_mesh(3)
        for _ in range(20):
            X = rng.standard_normal(m.X.shape)
            a, e = discrete_finsler_area(ci, m, X), euclidean_area(m, X)
            assert gb.m1 * e * (1 - 1e-12) <= a <= gb.m2 * e * (1 + 1e-12)

    def test_sandwich_and_descent_along_solve(self):
        ci = CartanIntegrand(M.randers([0.2, 0.1, 0.1]))
        gb = growth_bounds(ci)
        m = initial_surface(ellipse(), generate_disk_mesh(6))
        rng = np.random.default_rng(6)
        X = m.X.copy()
        X[m.interior()] += 0.05 * rng.standard_normal((len(m.interior()), 3))
        seen = []

        def check(Xk, t, eps):
            a, e = discrete_finsler_area(ci, m, Xk), euclidean_area(m, Xk)
            seen.append(gb.m1 * e * (1 - 1e-12) <= a <= gb.m2 * e * (1 + 1e-12))

        res = solve(ci, ellipse(), SolveConfig(eps_schedule=(1e-1, 1e-2), max_iter=40),
                    initial=m.with_X(X), callback=check)
        assert seen and all(seen)
        steps = [s for r in res.eps_trace for s in r["interior_steps"]]
        assert steps and all(after <= before for before, after in steps)

    def test_refinement_convergence(self):
        ci = CartanIntegrand(M.euclidean())
        e8 = abs(solve(ci, circle(), rings=8).finsler_area - np.pi)
        e16 = abs(solve(ci, circle(), rings=16).finsler_area - np.pi)
        assert e16 <= 0.5 * e8


class TestSolve:
    def test_euclidean_circle(self):
        res = solve(CartanIntegrand(M.euclidean()), circle(), rings=16)
        assert res.converged
        assert res.finsler_area == pytest.approx(np.pi, rel=1e-2)
        assert res.conformality_defect <= 1e-3
        assert res.isoperimetric_ok
        assert res.finsler_boundary_length == pytest.approx(2 * np.pi, abs=1e-6)

    def test_randers_circle(self):
        ci = CartanIntegrand(M.randers([0.3, 0.0, 0.0]))
        res = solve(ci, circle(), rings=16)
        assert res.converged and res.isoperimetric_ok
        assert abs(res.finsler_area / FLAT_RANDERS - 1) <= 0.015
        assert res.finsler_area >= res.sandwich[0]
        assert isoperimetric_check(res, growth_bounds(ci))

    def test_perturbed_start_recovers_flat_disk(self):
        ci = CartanIntegrand(M.euclidean())
        m = flat(8)
        rng = np.random.default_rng(2)
        X = m.X.copy()
        X[m.interior()] += 0.1 * rng.standard_normal((len(m.interior()), 3))
        res = solve(ci, circle(), initial=m.with_X(X))
        assert res.converged
        assert np.max(np.abs(res.mesh.X[:, 2])) <= 1e-5
        assert res.finsler_area == pytest.approx(euclidean_area(m), rel=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("curve", [ellipse(), planar_polygon_smoothed()], ids=["ellipse", "polygon"])
    def test_planar_curves(self, curve):
        ci = CartanIntegrand(M.euclidean())
        res = solve(ci, curve, rings=8)
        assert res.converged
        assert np.max(np.abs(res.mesh.X[:, 2])) <= 1e-9
        assert res.finsler_area == pytest.approx(res.euclidean_area, rel=1e-12)

    def test_non_convergence_flagged(self):
        res = solve(CartanIntegrand(M.euclidean()), helical_arc_closure(), SolveConfig(max_iter=3), rings=6)
        assert not res.converged and res.message
        assert res.finsler_area < euclidean_area(initial_surface(helical_arc_closure(), generate_disk_mesh(6)))

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            solve(CartanIntegrand(M.euclidean()), circle(), SolveConfig(tol=0.0), rings=4)
        with pytest.raises(ConfigurationError):
            solve(CartanIntegrand(M.euclidean()), circle(), initial=generate_disk_mesh(4))

    def test_degenerate_start(self):
        m = flat(4)
        X = m.X.copy()
        X[0] = X[1]
        with pytest.raises(MeshDegenerationError):
            solve(CartanIntegrand(M.euclidean()), circle(), initial=m.with_X(X))

    def test_result_dict_and_obj(self, tmp_path):
        res = solve(CartanIntegrand(M.euclidean()), circle(), rings=4)
        d = res.to_dict()
        assert d["vertices"] == 61 and d["triangles"] == 96
        write_obj(res.mesh, tmp_path / "s.obj")
        lines = (tmp_path / "s.obj").read_text().splitlines()
        assert sum(l.startswith("v ") for l in lines) == 61
        assert sum(l.startswith("f ") for l in lines) == 96
