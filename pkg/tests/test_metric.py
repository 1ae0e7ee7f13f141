import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from finslerarea import metric as M
from finslerarea.errors import MetricDomainError
from finslerarea.specfile import sinusoidal_drift

B03 = np.array([0.3, 0.0, 0.0])

unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).map(np.array).filter(lambda v: np.linalg.norm(v) > 0.1)


def all_specs():
    return [
        M.euclidean(),
        M.randers(B03),
        M.randers([0.1, -0.4, 0.2]),
        M.two_order([0.0, 0.2, 0.1]),
        M.matsumoto([0.1, 0.2, -0.2]),
        M.alpha_beta([1.0, 0.5, 0.3], [0.2, 0.1, 0.0]),
        M.cui_shen([0.4], [0.0, 0.3, 0.3]),
        M.perturbed_quartic(0.2, [0.05, 0.0, 0.1]),
        M.composite(M.euclidean(), sinusoidal_drift([0.2, 0.0, 0.1], [0.0, 1.0, 1.0])),
        M.composite(M.perturbed_quartic(0.3), [0.1, 0.1, 0.0]),
    ]


SPECS = all_specs()
SPEC_IDS = [s.family for s in SPECS]


class TestEvaluation:
    def test_euclidean_value(self):
        assert M.eval_metric(M.euclidean(), None, [3.0, 4.0, 0.0]) == pytest.approx(5.0, abs=1e-15)

    def test_randers_value(self):
        assert M.eval_metric(M.randers(B03), None, [1.0, 0.0, 0.0]) == pytest.approx(1.3, abs=1e-15)

    def test_matsumoto_value(self):
        assert M.eval_metric(M.matsumoto(B03), None, [1.0, 0.0, 0.0]) == pytest.approx(1 / 0.7, abs=1e-12)
        assert M.eval_metric(M.matsumoto(B03), None, [1.0, 0.0, 0.0]) == pytest.approx(1.428571, abs=1e-6)

    def test_zero_vector_gives_zero(self):
        for spec in SPECS:
            assert M.eval_metric(spec, np.zeros(3), np.zeros(3)) == 0.0

    def test_derivatives_refused_at_zero(self):
        with pytest.raises(MetricDomainError):
            M.grad_hess_y(M.randers(B03), None, np.zeros(3))

    def test_matsumoto_pole_raises(self):
        with pytest.raises(MetricDomainError):
            M.matsumoto([1.0, 0.0, 0.0]).value(np.array([1.0, 0.0, 0.0]))

    def test_quartic_requires_positive_epsilon(self):
        with pytest.raises(ValueError):
            M.perturbed_quartic(0.0)


class TestDerivatives:
    def test_euclidean_gradient(self):
        g, _ = M.grad_hess_y(M.euclidean(), None, [0.0, 0.0, 2.0])
        assert_allclose(g, [0.0, 0.0, 1.0], atol=1e-15)

    def test_randers_gradient(self):
        g, _ = M.grad_hess_y(M.randers(B03), None, [0.0, 1.0, 0.0])
        assert_allclose(g, [0.3, 1.0, 0.0], atol=1e-15)

    def test_euclidean_hessian(self):
        _, H = M.grad_hess_y(M.euclidean(), None, [1.0, 0.0, 0.0])
        assert_allclose(np.diag(H), [0.0, 1.0, 1.0], atol=1e-15)

    def test_fundamental_tensor_euclidean_identity(self, rng):
        Y = rng.standard_normal((20, 3))
        Y /= np.linalg.norm(Y, axis=1, keepdims=True)
        assert_allclose(M.fundamental_tensor_array(M.euclidean(), Y), np.broadcast_to(np.eye(3), (20, 3, 3)),
                        atol=1e-14)

    def test_fundamental_tensor_randers_euler(self):
        ft = M.fundamental_tensor(M.randers(B03), None, [1.0, 0.0, 0.0])
        assert_allclose(ft.g @ ft.y, [1.69, 0.0, 0.0], atol=1e-14)

    def test_fundamental_tensor_randers_zero_drift(self, rng):
        y = rng.standard_normal(3)
        assert_allclose(M.fundamental_tensor(M.randers(np.zeros(3)), None, y).g, np.eye(3), atol=1e-14)


@pytest.mark.property
class TestMetricProperties:
    @pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
    def test_homogeneity(self, spec, rng):
        Y = rng.standard_normal((200, 3))
        X = rng.uniform(-1, 1, (200, 3))
        F = spec.value(Y, X)
        for t in (0.1, 0.5, 2.0, 10.0):
            assert np.all(np.abs(spec.value(t * Y, X) - t * F) <= 1e-10 * t * np.abs(F))

    @pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
    def test_euler_identities(self, spec, rng):
        Y = rng.standard_normal((200, 3))
        X = rng.uniform(-1, 1, (200, 3))
        F = spec.value(Y, X)
        g = spec.gradient(Y, X)
        H = spec.hessian(Y, X)
        assert_allclose(np.einsum("ti,ti->t", g, Y), F, rtol=1e-10, atol=1e-12)
        scale = np.linalg.norm(H, axis=(1, 2)) * np.linalg.norm(Y, axis=1)
        assert np.all(np.linalg.norm(np.einsum("tij,tj->ti", H, Y), axis=1) <= 1e-10 * scale + 1e-12)

    @pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
    def test_gradient_matches_fd(self, spec, rng):
        Y = rng.standard_normal((200, 3))
        X = rng.uniform(-1, 1, (200, 3))
        g = spec.gradient(Y, X)
        fd = M.fd_gradient(lambda v: spec.value(v, X), Y)
        assert np.max(np.linalg.norm(g - fd, axis=1) / np.linalg.norm(g, axis=1)) <= 1e-6

    @pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
    def test_hessian_matches_fd_of_gradient(self, spec, rng):
        Y = rng.standard_normal((50, 3))
        X = rng.uniform(-1, 1, (50, 3))
        H = spec.hessian(Y, X)
        fd = M.fd_hessian(lambda v: spec.value(v, X), Y)
        assert np.max(np.abs(H - fd)) <= 1e-4 * max(1.0, np.max(np.abs(H)))

    @pytest.mark.parametrize("spec", SPECS, ids=SPEC_IDS)
    def test_sym_even_and_between(self, spec, rng):
        Y = rng.standard_normal((300, 3))
        X = rng.uniform(-1, 1, (300, 3))
        S = M.symmetrize_m_harmonic(spec, 2)
        Fs = S.value(Y, X)
        assert np.max(np.abs(Fs - S.value(-Y, X))) <= 1e-12 * np.max(Fs)
        Fp, Fm = spec.value(Y, X), spec.value(-Y, X)
        assert np.all(Fs <= np.maximum(Fp, Fm) * (1 + 1e-14))
        assert np.all(Fs >= np.minimum(Fp, Fm) * (1 - 1e-14))

    @pytest.mark.parametrize("spec", SPECS[:8], ids=SPEC_IDS[:8])
    def test_sym_keeps_pointwise_bounds(self, spec):
        Y = M.probe_directions(spec, 2000)
        F = spec.value(Y)
        Fs = M.symmetrize_m_harmonic(spec).value(Y)
        assert F.min() * (1 - 1e-14) <= Fs.min() and Fs.max() <= F.max() * (1 + 1e-14)

    @given(y=unit_vectors, t=st.floats(0.01, 100.0))
    @settings(max_examples=200, deadline=None)
    def test_randers_homogeneity_hypothesis(self, y, t):
        F = M.randers([0.2, -0.3, 0.4])
        assert abs(F.value(t * y) - t * F.value(y)) <= 1e-10 * t * F.value(y)

    @given(y=unit_vectors)
    @settings(max_examples=200, deadline=None)
    def test_matsumoto_sym_derivatives_hypothesis(self, y):
        S = M.symmetrize_m_harmonic(M.matsumoto([0.3, 0.1, 0.0]), 2)
        fd = M.fd_gradient(S.value, y[None, :])[0]
        assert_allclose(S.gradient(y), fd, rtol=1e-6, atol=1e-8)


class TestFinslerChecks:
    def test_randers_05_is_finsler(self):
        assert M.check_finsler(M.randers([0.5, 0.0, 0.0])).verdict

    def test_randers_12_not_finsler(self):
        rep = M.check_finsler(M.randers([1.2, 0.0, 0.0]))
        assert not rep.verdict
        assert rep.witness["check"] == "positivity"
        assert_allclose(rep.witness["y"], [-1.0, 0.0, 0.0], atol=1e-12)
        assert rep.min_value == pytest.approx(-0.2, abs=1e-12)

    def test_euclidean_min_eigenvalue_one(self):
        rep = M.check_finsler(M.euclidean())
        assert rep.verdict and rep.min_eigenvalue == pytest.approx(1.0, abs=1e-12)

    def test_sample_count_floor(self):
        with pytest.raises(ValueError):
            M.check_finsler(M.euclidean(), sample_count=10)

    def test_alphabeta_condition_examples(self):
        assert M.check_alphabeta_finsler(M.RANDERS_PHI, 0.9)
        assert M.check_alphabeta_finsler(M.Phi.matsumoto(), 0.49)
        assert not M.check_alphabeta_finsler(M.Phi.matsumoto(), 0.51)
        assert M.check_alphabeta_finsler(M.TWO_ORDER_PHI, 0.0)

    def test_alphabeta_pole_inside_interval(self):
        with pytest.raises(MetricDomainError):
            M.check_alphabeta_finsler(M.Phi.matsumoto(), 1.2)

    def test_alphabeta_grid_outside_interval(self):
        with pytest.raises(ValueError):
            M.check_alphabeta_finsler(M.RANDERS_PHI, 0.2, s_grid=[0.5])


class TestSymmetrization:
    def test_randers_sym_value(self):
        v = M.symmetrize_m_harmonic(M.randers(B03), 2).value(np.array([1.0, 0.0, 0.0]))
        assert v == pytest.approx(0.91 / np.sqrt(1.09), abs=1e-15)
        assert v == pytest.approx(0.871621, abs=1e-6)

    @pytest.mark.parametrize("spec", [M.euclidean(), M.two_order(np.zeros(3)), M.perturbed_quartic(0.1),
                                      M.alpha_beta([1.0, 0.0, 0.5], [0.3, 0.0, 0.0])])
    def test_reversible_fixed(self, spec, rng):
        Y = rng.standard_normal((100, 3))
        assert_allclose(M.symmetrize_m_harmonic(spec).value(Y), spec.value(Y), rtol=1e-14)

    @pytest.mark.parametrize("h", [[0.5], [0.3, -0.2]])
    def test_cui_shen_sym_is_euclidean(self, h, rng):
        Y = rng.standard_normal((100, 3))
        S = M.symmetrize_m_harmonic(M.cui_shen(h, [0.2, 0.3, 0.1]), 2)
        assert_allclose(S.value(Y), np.linalg.norm(Y, axis=1), rtol=1e-13)

    def test_split_randers(self, rng):
        b = rng.uniform(-0.3, 0.3, 3)
        pair = M.split_sym_asym(M.randers(b))
        Y = rng.standard_normal((50, 3))
        assert_allclose(pair.F_s.value(Y), np.linalg.norm(Y, axis=1), rtol=1e-14)
        assert_allclose(pair.F_a.value(Y), Y @ b, atol=1e-14)

    def test_split_example(self):
        pair = M.split_sym_asym(M.randers(B03))
        y = np.array([1.0, 0.0, 0.0])
        assert (float(pair.F_s.value(y)), float(pair.F_a.value(y))) == pytest.approx((1.0, 0.3), abs=1e-15)

    def test_reversible_antisymmetric_part_zero(self, rng):
        pair = M.split_sym_asym(M.perturbed_quartic(0.2))
        assert np.max(np.abs(pair.F_a.value(rng.standard_normal((50, 3))))) <= 1e-15
