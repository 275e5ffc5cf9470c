import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mi_accountant.gaussian_tv import (
    GaussianMixture,
    TvaQuery,
    check_subsampling_lemma,
    tv_gaussian_exact,
    tva_gaussian_closed,
    tva_monotonicity_violation,
    tva_quadrature,
)

# Oracle values computed with mpmath at 30 digits.
ERF_1_OVER_2SQRT2 = 0.382924922548026
ERF_1_OVER_SQRT2 = 0.682689492137086
TVA_R1_S1_A05 = 0.345305057618379


class TestExactTv:
    def test_values(self):
        assert tv_gaussian_exact(0.0, 1.0) == 0.0
        assert tv_gaussian_exact(1.0, 1.0) == pytest.approx(ERF_1_OVER_2SQRT2, abs=1e-12)
        assert tv_gaussian_exact(2.0, 1.0) == pytest.approx(ERF_1_OVER_SQRT2, abs=1e-12)

    def test_quadrature_agrees(self):
        got = tva_quadrature(GaussianMixture.gaussian(1.0, 1.0), GaussianMixture.gaussian(0.0, 1.0))
        assert got.value == pytest.approx(ERF_1_OVER_2SQRT2, abs=1e-9)
        assert got.abserr < 1e-9

    @pytest.mark.parametrize("bad", [(-1.0, 1.0), (1.0, 0.0)])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            tv_gaussian_exact(*bad)


class TestClosedForm:
    def test_a_one_is_tv(self):
        assert tva_gaussian_closed(TvaQuery(1.0, 1.0, 1.0)) == pytest.approx(ERF_1_OVER_2SQRT2, abs=1e-12)

    def test_half_weight(self):
        assert tva_gaussian_closed(TvaQuery(1.0, 1.0, 0.5)) == pytest.approx(TVA_R1_S1_A05, abs=1e-12)
        quad = tva_quadrature(GaussianMixture.gaussian(0.0, 1.0), GaussianMixture.gaussian(1.0, 1.0), 0.5)
        assert quad.value == pytest.approx(TVA_R1_S1_A05, abs=1e-9)

    def test_r_to_zero_limit(self):
        assert tva_gaussian_closed(TvaQuery(0.0, 1.0, 0.5)) == 0.25
        assert tva_gaussian_closed(TvaQuery(1e-9, 1.0, 0.5)) == pytest.approx(0.25, abs=1e-8)

    @pytest.mark.parametrize("a", [1.5, 2.0, 5.0])
    def test_reflection_above_one(self, a):
        closed = tva_gaussian_closed(TvaQuery(1.0, 1.0, a))
        quad = tva_quadrature(GaussianMixture.gaussian(0.0, 1.0), GaussianMixture.gaussian(1.0, 1.0), a)
        assert closed == pytest.approx(quad.value, abs=1e-8)

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    def test_matches_quadrature_on_grid(self, sigma):
        worst = 0.0
        for a in np.linspace(0.1, 1.0, 10):
            for r in np.linspace(0.0, 4.0, 17):
                closed = tva_gaussian_closed(TvaQuery(r, sigma, a))
                quad = tva_quadrature(GaussianMixture.gaussian(0.0, sigma), GaussianMixture.gaussian(r, sigma), a)
                worst = max(worst, abs(closed - quad.value))
        assert worst <= 1e-8

    def test_wrong_constant_is_detected(self):
        # negative control: doubling the constant must break agreement
        q = TvaQuery(1.0, 1.0, 0.5)
        quad = tva_quadrature(GaussianMixture.gaussian(0.0, 1.0), GaussianMixture.gaussian(1.0, 1.0), 0.5)
        assert abs(tva_gaussian_closed(q, constant=1.0) - quad.value) > 0.1

    @given(st.floats(0.0, 10.0), st.floats(0.05, 10.0), st.floats(0.01, 1.0))
    def test_range(self, r, sigma, a):
        v = tva_gaussian_closed(TvaQuery(r, sigma, a))
        assert 0.0 <= v <= 1.0 + 1e-15
        assert v >= 0.5 * (1.0 - a) - 1e-15

    @given(st.floats(0.0, 5.0), st.floats(0.0, 5.0), st.floats(0.1, 4.0), st.floats(0.05, 1.0))
    def test_monotone_in_r(self, r1, r2, sigma, a):
        lo, hi = sorted((r1, r2))
        assert tva_gaussian_closed(TvaQuery(lo, sigma, a)) <= tva_gaussian_closed(TvaQuery(hi, sigma, a)) + 1e-15

    @given(st.floats(0.01, 5.0), st.floats(0.1, 4.0), st.floats(0.05, 1.0), st.sampled_from([0.5, 2.0, 4.0]))
    def test_scale_invariance(self, r, sigma, a, c):
        # powers of two scale exactly in binary floating point
        assert tva_gaussian_closed(TvaQuery(c * r, c * sigma, a)) == tva_gaussian_closed(TvaQuery(r, sigma, a))

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("a", [0.1, 0.5, 0.95, 1.0])
    def test_monotonicity_helper(self, sigma, a):
        assert tva_monotonicity_violation(sigma, a, np.linspace(0.1, 5.0, 50)) == 0.0

    def test_query_validation(self):
        with pytest.raises(ValueError):
            TvaQuery(-1.0, 1.0)
        with pytest.raises(ValueError):
            TvaQuery(1.0, 0.0)
        with pytest.raises(ValueError):
            TvaQuery(1.0, 1.0, 0.0)


class TestMixtureQuadrature:
    def test_identical_is_zero(self):
        assert tva_quadrature(GaussianMixture.gaussian(0, 1), GaussianMixture.gaussian(0, 1)).value == 0.0

    def test_subsampled_one_dim(self):
        # TV((1-q)N(0,1) + qN(1,1), N(0,1)) = q * TV(N(1,1), N(0,1))
        got = tva_quadrature(GaussianMixture.subsampled(1.0, 1.0, 0.1), GaussianMixture.gaussian(0.0, 1.0))
        assert got.value == pytest.approx(0.1 * ERF_1_OVER_2SQRT2, abs=1e-10)

    def test_nonpositive_weight(self):
        # a <= 0 means no cancellation: result is (1 - a) / 2 for normalized p, q
        got = tva_quadrature(GaussianMixture.gaussian(0, 1), GaussianMixture.gaussian(1, 1), -0.5)
        assert got.value == pytest.approx(0.75, abs=1e-10)

    def test_mixture_validation(self):
        with pytest.raises(ValueError):
            GaussianMixture((), (), ())
        with pytest.raises(ValueError):
            GaussianMixture((0.5, 0.6), (0.0, 1.0), (1.0, 1.0))
        with pytest.raises(ValueError):
            GaussianMixture((1.5, -0.5), (0.0, 1.0), (1.0, 1.0))
        with pytest.raises(ValueError):
            GaussianMixture((1.0,), (0.0,), (0.0,))

    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(0.0, 1.0),
        st.floats(-3.0, 3.0),
        st.floats(0.3, 3.0),
        st.floats(-3.0, 3.0),
        st.floats(0.3, 3.0),
    )
    def test_symmetry(self, w, m1, s1, m2, s2):
        p = GaussianMixture((w, 1.0 - w), (0.0, m1), (1.0, s1))
        q = GaussianMixture.gaussian(m2, s2)
        assert tva_quadrature(p, q).value == pytest.approx(tva_quadrature(q, p).value, abs=1e-10)


class TestSubsamplingLemma:
    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    @pytest.mark.parametrize("q", [0.1, 0.5, 1.0])
    def test_identity(self, r, sigma, q):
        for a in (0.25, 0.5, 0.95, 1.0):
            assert check_subsampling_lemma(r, sigma, q, a) <= 1e-8

    def test_rejects(self):
        with pytest.raises(ValueError):
            check_subsampling_lemma(1.0, 1.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            check_subsampling_lemma(1.0, 1.0, 0.5, 0.0)


def test_pdf_normalized():
    m = GaussianMixture.subsampled(2.0, 0.7, 0.3)
    xs = np.linspace(-10, 12, 200001)
    assert np.trapezoid(m.pdf(xs), xs) == pytest.approx(1.0, abs=1e-9)
    assert m.tail_mass_outside(-10, 12) < 1e-20
