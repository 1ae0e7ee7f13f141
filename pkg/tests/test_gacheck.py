from fractions import Fraction

import numpy as np
import pytest

from finslerarea import metric as M
from finslerarea.errors import MetricDomainError, ScanInconsistentError
from finslerarea.gacheck import (family_factory, ga_direct, lemma41_admissible, lemma41_f,
                                 sufficient_condition, threshold_scan, threshold_verdict)


def randers(b):
    return M.randers([b, 0.0, 0.0])


class TestSufficientCondition:
    def test_randers_05_holds(self):
        assert sufficient_condition(randers(0.5)).sufficient_cond

    def test_randers_06_fails(self):
        rep = sufficient_condition(randers(0.6))
        assert not rep.sufficient_cond
        assert rep.witness["check"] == "condition 1"

    def test_reversible_trivial(self):
        rep = sufficient_condition(M.perturbed_quartic(0.2))
        assert rep.sufficient_cond and rep.margins["cond2_max_eig"] <= 1e-10

    def test_matsumoto_045_direct_only(self):
        rep = sufficient_condition(M.matsumoto([0.45, 0.0, 0.0]))
        assert rep.metric_finsler and rep.fs_finsler and rep.direct_ga

    def test_not_finsler_metric(self):
        rep = sufficient_condition(randers(1.2))
        assert not rep.metric_finsler and not rep.sufficient_cond
        assert rep.witness["check"] == "positivity of F"

    def test_w_samples_pick_witness(self):
        W = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        rep = sufficient_condition(randers(0.7), w_samples=W)
        assert rep.witness["w"] == [1.0, 0.0, 0.0]

    def test_x_dependent(self):
        from finslerarea.specfile import sinusoidal_drift
        metric = M.composite(M.euclidean(), sinusoidal_drift([0.3, 0.0, 0.0], [0.0, 0.0, 1.0]))
        rep = sufficient_condition(metric, x_samples=np.random.default_rng(0).uniform(-2, 2, (4, 3)),
                                   sample_count=300)
        assert rep.sufficient_cond and rep.direct_ga


class TestGADirect:
    def test_randers_05(self):
        assert ga_direct(randers(0.5))[0]

    def test_randers_07(self):
        ok, lam, wit = ga_direct(randers(0.7))
        assert not ok and lam < 0 and "y" in wit

    def test_matsumoto_045(self):
        assert ga_direct(M.matsumoto([0.45, 0.0, 0.0]))[0]

    def test_nonpositive(self):
        ok, lam, wit = ga_direct(randers(1.3))
        assert not ok and lam < 0 and wit["check"] == "positivity of F"


@pytest.mark.property
class TestGAProperties:
    def test_randers_reduction(self):
        """For F_s = |y|, F_a = b.y condition 1 has min eigenvalue 1/3 - |b|^2."""
        for b in (0.1, 0.3, 0.5, 0.6):
            rep = sufficient_condition(randers(b), sample_count=500)
            assert rep.margins["cond1_min_eig"] == pytest.approx(1.0 / 3.0 - b * b, abs=1e-12)

    @pytest.mark.parametrize("family", ["randers", "two-order", "matsumoto"])
    def test_even_in_b(self, family):
        for b in (0.2, 0.45, 0.7):
            f = M.FAMILIES[family]
            vp = sufficient_condition(f(np.array([b, 0.1, 0.0])), sample_count=400)
            vm = sufficient_condition(f(np.array([-b, -0.1, 0.0])), sample_count=400)
            assert (vp.direct_ga, vp.sufficient_cond, vp.metric_finsler) == \
                   (vm.direct_ga, vm.sufficient_cond, vm.metric_finsler)

    def test_implication_sample(self):
        rng = np.random.default_rng(7)
        for _ in range(60):
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            metric = [M.randers, M.two_order, M.matsumoto][rng.integers(3)](rng.uniform(0, 0.8) * d)
            try:
                rep = sufficient_condition(metric, sample_count=300)
            except MetricDomainError:
                continue
            assert not rep.sufficient_cond or rep.direct_ga

    def test_lemma41_nonnegative(self):
        for m in range(1, 13):
            hi = 1.0 if (m % 2 == 1 or m == 2) else 1.0 / np.sqrt(m - 1)
            for a in np.linspace(hi / 201, hi * 200 / 201, 200):
                assert lemma41_f(float(a), m) >= -1e-12


class TestLemma41:
    def test_exact_values(self):
        assert lemma41_f(Fraction(1, 2), 2) == Fraction(3, 4)
        assert lemma41_f(Fraction(1, 2), 3) == Fraction(3, 2)

    def test_float_values(self):
        assert lemma41_f(0.5, 2) == 0.75 and lemma41_f(0.5, 3) == 1.5

    def test_m1_zero(self):
        for a in (0.1, 0.5, 0.9):
            assert lemma41_f(a, 1) == 0.0

    def test_domain(self):
        with pytest.raises(MetricDomainError):
            lemma41_f(0.7, 4)
        with pytest.raises(MetricDomainError):
            lemma41_f(0.5, 0)
        assert lemma41_admissible(Fraction(1, 2), 4) and not lemma41_admissible(Fraction(3, 5), 4)


@pytest.mark.slow
class TestThresholds:
    @pytest.mark.parametrize("family,expected", [("randers", 1 / np.sqrt(3)), ("two-order", 1 / np.sqrt(10)),
                                                 ("matsumoto", 0.5)])
    def test_critical(self, family, expected):
        res = threshold_scan(family, 0.05, 0.95, tol=0.005)
        assert abs(res.critical_b - expected) <= 0.005
        assert res.bracket_width <= 0.005
        assert res.bracket[0] <= res.critical_b <= res.bracket[1]

    def test_inconsistent_range(self):
        with pytest.raises(ScanInconsistentError) as exc:
            threshold_scan("randers", 0.7, 0.9, coarse=5, with_sufficient=False)
        assert len(exc.value.table) == 5

    def test_bad_range(self):
        with pytest.raises(ValueError):
            threshold_scan("randers", 0.5, 0.4)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            family_factory("kropina")

    def test_verdict_matsumoto_binding(self):
        factory, phi = family_factory("matsumoto")
        fin, ga, _ = threshold_verdict(factory, phi, 0.55)
        assert not fin and ga
