import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cases import CASES, NAMES, case, derivative_errors, samples
from feature_curves import curves as C
from feature_curves.errors import (DomainError, LayoutMismatch, RatioOutOfRange, TooFewPoints,
                                   UnsupportedFamily)
from feature_curves.hough import curve_locus

SHARP_PETAL = (lambda: C.make_petal(50, True), [121.5, 0.44])


class TestElementaryFamilies:
    def test_line(self):
        fam = C.make_line()
        assert fam.residual((1, 1), (1, 0)) == 0
        np.testing.assert_array_equal(fam.grad((3.0, 5.0), (1, 0)), [-3, -1])
        np.testing.assert_array_equal(fam.hess((3.0, 5.0), (1, 0)), np.zeros((2, 2)))

    def test_circle(self):
        fam = C.make_circle()
        assert fam.residual((1, 0), (0, 0, 1)) == 0
        x, y, A, B, R = 0.3, -1.2, 0.5, 0.25, 2.0
        np.testing.assert_allclose(fam.grad((x, y), (A, B, R)),
                                   [-2 * (x - A), -2 * (y - B), -2 * R])

    def test_ellipse(self):
        fam = C.make_ellipse()
        assert fam.residual((1.5, 0), (1.5, 0.7)) == 0
        rng = np.random.default_rng(0)
        for p in rng.normal(size=(20, 2)):
            a = 1.7
            assert fam.residual(p, (a, a)) == pytest.approx(
                C.make_circle().residual(p, (0, 0, a)) / a**2)

    def test_lamet(self):
        fam = C.make_lamet(4)
        assert fam.residual((2.0, 0.0), (2.0, 1.0)) == 0
        assert fam.fixed == {"m": 4} and fam.label == "lamet:m=4"
        with pytest.raises(ValueError):
            C.make_lamet(3)

    def test_citrus_cusp(self):
        for fam, lam in ((C.make_citrus(), [2.0]), (C.make_citrus(True), [2.0, 1.3])):
            assert fam.residual((1.0, 0.0), lam) == 0
            assert fam.residual((-1.0, 0.0), lam) == 0

    def test_spiral_cessation_point(self):
        fam = C.make_spiral(True)
        lam = (0.35, 0.1, 0.0032)
        assert fam.residual(fam.native([0.35, 0.0]), lam) == 0
        np.testing.assert_allclose(fam.grad((1.0, 0.7), lam), [-1, -0.7, -0.49])
        assert fam.form == C.POLAR

    def test_m_convexities(self):
        m = 5
        fam = C.make_m_convexities(m)
        th = math.pi / (2 * m)
        assert fam.residual((1.3, th), (1.3, 0.4)) == pytest.approx(0, abs=1e-15)
        np.testing.assert_allclose(fam.grad((2.0, 0.3), (1.0, 0.2)), [-1, 2 * math.cos(1.5)])
        with pytest.raises(ValueError):
            C.make_m_convexities(1)

    def test_petal_tip(self):
        for n in (1, 3, 50):
            fam = C.make_petal(n, True)
            assert fam.residual((0.0, 2.0), (4.0, 0.7)) == pytest.approx(0, abs=1e-12)
        with pytest.raises(ValueError):
            C.make_petal(0)

    def test_wrong_parameter_count(self):
        with pytest.raises(LayoutMismatch):
            C.make_circle().residual((0, 0), (1, 2))

    def test_broadcast_evaluation(self):
        fam = C.make_circle()
        pts = np.random.default_rng(1).normal(size=(7, 2))
        F, G, H = fam.evaluate(pts, (0.0, 0.0, 1.0))
        assert F.shape == (7,) and G.shape == (3, 7) and H.shape == (3, 3, 7)


class TestDerivatives:
    @pytest.mark.parametrize("name", NAMES)
    def test_matches_finite_differences(self, name):
        fam, lam, _ = case(name)
        g, h = derivative_errors(fam, lam, np.random.default_rng(11), 100)
        assert g < 1e-5 and h < 1e-4

    def test_sharp_stretched_petal(self):
        ctor, lam = SHARP_PETAL
        g, h = derivative_errors(ctor(), np.array(lam), np.random.default_rng(12), 100)
        assert g < 1e-5 and h < 1e-4

    def test_independent_product(self):
        fam = C.make_independent_product(C.make_circle(), C.make_ellipse())
        assert fam.param_names == ("A1", "B1", "R1", "a2", "b2")
        lam = np.array([0.1, 0.2, 1.0, 1.5, 0.8])
        g, h = derivative_errors(fam, lam, np.random.default_rng(13), 50)
        assert g < 1e-5 and h < 1e-4


class TestZeroSets:
    @staticmethod
    def _abs_residual(fam, xy, lam):
        nat = fam.native(xy)
        if not fam.name.startswith("spiral"):
            return np.abs(fam.residual(nat, lam[:, None]))
        # spirals: the best of the unwrapped branches theta + 2 pi k
        return np.min([np.abs(fam.residual(nat + [0, 2 * np.pi * k], lam[:, None]))
                       for k in range(4)], axis=0)

    @pytest.mark.parametrize("name", NAMES)
    def test_locus_vertices_on_curve(self, name):
        fam, lam, _ = case(name)
        xy = samples(name, 200)
        F = self._abs_residual(fam, xy, lam)
        # local scale: how much F moves over a thousandth of the curve size
        h = 1e-3 * np.ptp(xy, axis=0).max()
        shift = self._abs_residual(fam, xy + h, lam)
        assert np.all(F <= 1e-9 * (shift / 1e-3 + shift.max() * 1e-3))

    @pytest.mark.parametrize("name", ["ellipse", "lamet", "citrus", "citrus_stretched",
                                      "petal", "petal_stretched", "citrus_circle"])
    def test_symmetry(self, name):
        fam, lam, _ = case(name)
        assert fam.symmetric
        p = np.random.default_rng(2).normal(size=(100, 2))
        F = fam.residual(p, lam[:, None])
        for sx, sy in ((-1, 1), (1, -1)):
            np.testing.assert_allclose(fam.residual(p * [sx, sy], lam[:, None]), F,
                                       rtol=1e-12, atol=1e-300)


class TestCompounds:
    def test_citrus_circle_loci(self):
        fam = C.make_citrus_circle()
        a = 2.0
        th = np.linspace(0, 2 * np.pi, 50)
        ring = np.c_[a / 8 * np.cos(th), a / 8 * np.sin(th)]
        np.testing.assert_allclose(fam.residual(ring, [a]), 0, atol=1e-15)
        cit = curve_locus(C.make_citrus(), [a])[0]
        np.testing.assert_allclose(fam.residual(cit, [a]), 0, atol=1e-12)
        assert fam.residual((0.0, a / 2), [a]) != 0

    def test_citrus_line_axis(self):
        fam = C.make_citrus_line()
        xs = np.linspace(-5, 5, 101)
        assert np.all(fam.residual(np.c_[xs, 0 * xs], [2.0]) == 0)
        # odd in y, so it is not listed as symmetric
        assert not fam.symmetric

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31))
    def test_zero_iff_factor_zero(self, seed):
        rng = np.random.default_rng(seed)
        fam = C.make_three_ellipses()
        lam = np.array([2.0, 1.0])
        on = np.vstack([curve_locus(f, lam, 100)[0] for f in fam.factors])
        off = rng.uniform(-3, 3, size=(20, 2))
        prod = fam.residual(off, lam)
        each = np.array([f.residual(off, lam) for f in fam.factors])
        np.testing.assert_allclose(prod, each.prod(0), rtol=1e-12)
        assert np.all((prod == 0) == np.any(each == 0, axis=0))
        scale = np.abs(fam.residual(off, lam)).max()
        assert np.abs(fam.residual(on, lam)).max() <= 1e-9 * scale

    def test_layout_mismatch(self):
        with pytest.raises(LayoutMismatch):
            C.make_compound([C.make_circle(), C.make_ellipse()])
        with pytest.raises(LayoutMismatch):
            C.make_compound([C.make_spiral(), C.make_ellipse()])
        with pytest.raises(LayoutMismatch):
            C.make_independent_product(C.make_spiral(), C.make_ellipse())
        with pytest.raises(LayoutMismatch):
            C.make_compound([])

    def test_product_rule_matches_direct_product(self):
        fam = C.make_compound([C.make_ellipse(), C.make_lamet(4)])
        p = np.random.default_rng(3).normal(size=(30, 2))
        lam = (1.5, 0.9)
        F = C.make_ellipse().residual(p, lam) * C.make_lamet(4).residual(p, lam)
        np.testing.assert_allclose(fam.residual(p, lam), F, rtol=1e-13)
        assert fam.fixed == {"m": 4}


class TestBoundingBoxes:
    def _dense(self, fam, lam, **kw):
        return np.vstack(curve_locus(fam, lam, 2000, **kw))

    def test_lamet(self):
        fam, lam = C.make_lamet(4), [2.0, 1.0]
        assert C.bounding_box(fam, lam) == C.Box(-2, 2, -1, 1)
        assert C.Box(-2, 2, -1, 1).contains(self._dense(fam, lam), 1e-6).all()

    def test_citrus(self):
        fam = C.make_citrus()
        assert C.bounding_box(fam, [2.0]) == C.Box(-1, 1, -0.25, 0.25)
        pts = self._dense(fam, [2.0])
        assert C.Box(-1, 1, -0.25, 0.25).contains(pts, 1e-6).all()

    def test_petal_height(self):
        fam = C.make_petal(50)
        pts = self._dense(fam, [4.0])
        assert np.abs(pts[:, 1]).max() == pytest.approx(2.0, abs=1e-6)
        assert C.bounding_box(fam, [4.0]).contains(pts, 1e-6).all()

    def test_petal_width_formula(self):
        for n in (1, 2, 7):
            for c in (1.0, 0.44):
                fam = C.make_petal(n, True)
                pts = self._dense(fam, [9.0, c])
                k = (2 * n / (2 * n + 1)) * (1 / (2 * n + 1)) ** (1 / (2 * n))
                assert np.abs(pts[:, 0]).max() == pytest.approx(k * 3 / math.sqrt(c), rel=1e-4)

    def test_spiral_turnings(self):
        fam = C.make_spiral()
        a, b = 0.35, 0.1
        assert C.bounding_box(fam, [a, b]) == C.Annulus(a, a + 2 * math.pi * b)
        ann = C.bounding_box(fam, [a, b], turn=3)
        assert ann.r_inner == pytest.approx(a + 4 * math.pi * b)
        assert ann.r_outer == pytest.approx(a + 6 * math.pi * b)
        pts = np.vstack(curve_locus(fam, [a, b], 2000, turns=1))
        r = np.hypot(*pts.T)
        assert r.min() >= a - 1e-9 and r.max() <= a + 2 * math.pi * b + 1e-9

    def test_m_convexities_annulus(self):
        fam = C.make_m_convexities(5)
        ann = C.bounding_box(fam, [1.0, 0.2])
        assert (ann.r_inner, ann.r_outer) == pytest.approx((1 / 1.2, 1 / 0.8))
        r = np.hypot(*np.vstack(curve_locus(fam, [1.0, 0.2], 4000)).T)
        assert r.min() == pytest.approx(ann.r_inner, abs=1e-6)
        assert r.max() == pytest.approx(ann.r_outer, abs=1e-6)
        with pytest.raises(DomainError):
            C.bounding_box(fam, [1.0, 1.5])

    @pytest.mark.parametrize("name", [n for n in NAMES if n not in ("line", "citrus_line")])
    def test_dense_samples_inside(self, name):
        fam, lam, kw = case(name)
        b = C.bounding_box(fam, lam)
        pts = np.vstack(curve_locus(fam, lam, 1000, **kw))
        if isinstance(b, C.Annulus):
            r = np.hypot(*pts.T)
            assert r.min() >= b.r_inner - 1e-6 and r.max() <= b.r_outer + 1e-6
        else:
            assert b.contains(pts, 1e-6).all()

    def test_unsupported(self):
        with pytest.raises(UnsupportedFamily):
            C.bounding_box(C.make_line(), [1, 0])
        with pytest.raises(UnsupportedFamily):
            C.bounding_box(C.make_citrus_line(), [2.0])
        with pytest.raises(LayoutMismatch):
            C.bounding_box(C.make_circle(), [1, 0])


class TestPetalExponent:
    def test_n_one(self):
        assert C.estimate_petal_exponent(1.0, (2 / 3) * math.sqrt(2 / 3)) == 1

    def test_n_fifty(self):
        r = float(C.petal_ratio(50))
        assert C.estimate_petal_exponent(1.0, r) == 50
        assert C.estimate_petal_exponent(10.0, 10 * r) == 50

    def test_ratio_formula(self):
        n = 50
        lhs = (2 * n / (2 * n + 1)) * (1 - (1 / (2 * n + 1)) ** (1 / n)) ** 0.5
        assert float(C.petal_ratio(n)) == pytest.approx(lhs, rel=1e-15)

    def test_unattainable_ratio_warns(self):
        with pytest.warns(RuntimeWarning):
            n = C.estimate_petal_exponent(1.0, 0.99)
        assert n == int(np.argmax(C.petal_ratio(np.arange(1, 201)))) + 1

    def test_cap_warns(self):
        with pytest.warns(RuntimeWarning):
            assert C.estimate_petal_exponent(1.0, float(C.petal_ratio(500)), n_max=200) == 200

    @pytest.mark.parametrize("yA,yB", [(1.0, 1.0), (1.0, 2.0), (0.0, 0.5), (1.0, 0.0),
                                       (-1.0, 0.5)])
    def test_out_of_range(self, yA, yB):
        with pytest.raises(RatioOutOfRange):
            C.estimate_petal_exponent(yA, yB)

    @pytest.mark.parametrize("n", [3, 10, 50])
    def test_from_points(self, n):
        fam = C.make_petal(n)
        pts = np.vstack(curve_locus(fam, [4.0], 3000))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert C.petal_exponent_from_points(pts) == n


class TestCatalogue:
    def test_names(self):
        assert set(C.catalogue()) == set(NAMES)

    def test_spec_strings(self):
        fam = C.family_from_spec("petal_stretched:n=50")
        assert fam.fixed == {"n": 50} and fam.t == 2
        assert C.family_from_spec("lamet:m=6").fixed == {"m": 6}
        with pytest.raises(ValueError):
            C.family_from_spec("hyperbola")
        with pytest.raises(ValueError):
            C.family_from_spec("circle:n=2")

    def test_describe(self):
        rows = {r["name"]: r for r in C.describe_catalogue()}
        assert rows["circle"]["equation"] == "(x - A)^2 + (y - B)^2 - R^2 = 0"
        assert rows["spiral_generalized"]["t"] == 3
        assert rows["m_convexities"]["fixed"] == {"m": 5}

    def test_equation_substitution(self):
        eq = C.make_circle().equation([0.1, -0.2, 0.7])
        assert eq == "(x - 0.1)^2 + (y + 0.2)^2 - 0.7^2 = 0"


class TestParameterRegion:
    def test_validation(self):
        with pytest.raises(ValueError):
            C.ParameterRegion([1.0], [0.0], [0.1])
        with pytest.raises(ValueError):
            C.ParameterRegion([0.0], [1.0], [0.0])
        with pytest.raises(ValueError):
            C.ParameterRegion([0.0], [np.inf], [0.1])
        with pytest.raises(ValueError):
            C.ParameterRegion([0.0, 0.0], [1.0], [0.1])

    def test_step_may_exceed_width(self):
        r = C.ParameterRegion([0.0032], [0.0048], [0.004])
        assert r.t == 1 and r.contains([0.004])

    def test_with_fraction(self):
        r = C.ParameterRegion.with_fraction([0, 1], [2, 5])
        np.testing.assert_allclose(r.step, [0.1, 0.2])


class TestSuggestRegion:
    def test_unit_circle(self):
        th = np.linspace(0, 2 * np.pi, 60, endpoint=False)
        reg = C.suggest_region(C.make_circle(), np.c_[np.cos(th), np.sin(th)])
        assert reg.contains([0, 0, 1])
        np.testing.assert_allclose(reg.step, (reg.hi - reg.lo) / 20)

    def test_spiral_region_near_reference_box(self):
        fam = C.make_spiral(True)
        pts = np.vstack(curve_locus(fam, [0.35, 0.1, 0.0032], 500, turns=1))
        reg = C.suggest_region(fam, pts)
        assert reg.contains([0.35, 0.1, 0.0032])
        assert reg.lo[0] <= 0.35 <= reg.hi[0] < 0.45

    def test_petal_region_contains_reference_box(self):
        fam = C.make_petal(50, True)
        pts = np.vstack(curve_locus(fam, [121.5, 0.44], 2000))
        reg = C.suggest_region(fam, pts)
        assert reg.contains([121, 0.43]) and reg.contains([122, 0.45])

    @pytest.mark.parametrize("name", NAMES)
    def test_every_family_covers_truth(self, name):
        fam, lam, _ = case(name)
        reg = C.suggest_region(fam, samples(name, 300))
        assert reg.contains(lam)

    def test_too_few_points(self):
        with pytest.raises(TooFewPoints):
            C.suggest_region(C.make_circle(), np.zeros((3, 2)))

    def test_flat_axis_is_padded(self):
        pts = np.c_[np.linspace(-1, 1, 10), np.zeros(10)]
        reg = C.suggest_region(C.make_line(), pts)
        assert np.all(reg.hi > reg.lo)


def test_cases_cover_all_families():
    assert set(CASES) == set(C.catalogue())
