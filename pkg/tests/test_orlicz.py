import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq

from orlicz_lab.measure import interval, lp_norm, power_weight, radial_ball
from orlicz_lab.orlicz import (holder_pairing, indicator_bound_constants, indicator_norm,
                               luxemburg_norm, modular, norm_chain_check)
from orlicz_lab.young import YoungParams, conjugate_eval, evaluate, preceq_check

BALL = radial_ball(3, 1.0, 40)
params_st = st.builds(YoungParams, p=st.floats(1.2, 4.0), q=st.floats(0.0, 4.0))


def brute_norm(f, A, dom):
    """Independent gauge: plain brentq on the raw modular, no rescaling."""
    g = np.abs(f)
    h = lambda lam: float(np.dot(evaluate(A, g / lam), dom.mass)) - 1.0
    lo, hi = 1e-8 * g.max(), 1e8 * g.max()
    return brentq(h, lo, hi, xtol=1e-300, rtol=1e-14)


class TestLuxemburg:
    def test_zero(self):
        rep = luxemburg_norm(0.0, YoungParams(2, 1), BALL)
        assert rep.value == 0.0

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 4.0])
    def test_power_equals_lp(self, p):
        f = np.cos(3 * BALL.nodes) + 0.2
        assert luxemburg_norm(f, YoungParams(p, 0), BALL).value == pytest.approx(
            lp_norm(f, p, BALL), rel=1e-9)

    def test_unit_mass_indicator(self):
        d = interval(0, 1, 50)
        assert luxemburg_norm(1.0, YoungParams(2, 0), d).value == pytest.approx(1.0, rel=1e-12)

    @pytest.mark.parametrize("p,q", [(1.5, 2), (2, 3), (3, 1)])
    def test_against_brute_root(self, p, q):
        f = np.exp(-BALL.nodes) * (1 + BALL.nodes ** 2)
        A = YoungParams(p, q)
        assert luxemburg_norm(f, A, BALL).value == pytest.approx(brute_norm(f, A, BALL), rel=1e-11)

    def test_report_invariants(self):
        A = YoungParams(1.5, 2)
        f = 1 / (0.05 + BALL.nodes)
        rep = luxemburg_norm(f, A, BALL)
        assert rep.modular_at_value <= 1 + 1e-9
        assert modular(f, A, 0.999 * rep.value, BALL) > 1
        assert rep.iterations > 0 and float(rep) == rep.value

    @settings(max_examples=40, deadline=None)
    @given(params_st, st.integers(0, 2 ** 31 - 1), st.floats(-1e6, 1e6).filter(lambda c: abs(c) > 1e-6))
    def test_homogeneity(self, A, seed, c):
        f = np.random.default_rng(seed).normal(size=BALL.size)
        a = luxemburg_norm(c * f, A, BALL).value
        b = abs(c) * luxemburg_norm(f, A, BALL).value
        assert a == pytest.approx(b, rel=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(params_st, st.integers(0, 2 ** 31 - 1))
    def test_triangle(self, A, seed):
        rng = np.random.default_rng(seed)
        f, g = rng.normal(size=(2, BALL.size)) * rng.lognormal(size=(2, 1))
        n = lambda h: luxemburg_norm(h, A, BALL).value
        assert n(f + g) <= n(f) + n(g) + 1e-9

    @settings(max_examples=40, deadline=None)
    @given(params_st, st.integers(0, 2 ** 31 - 1))
    def test_modular_identity(self, A, seed):
        f = np.random.default_rng(seed).exponential(size=BALL.size)
        rep = luxemburg_norm(f, A, BALL)
        assert modular(f, A, rep.value, BALL) == pytest.approx(1.0, abs=1e-9)

    def test_tiny_and_huge_scales(self):
        A = YoungParams(2, 2)
        f = 1 + BALL.nodes
        base = luxemburg_norm(f, A, BALL).value
        for c in (1e-150, 1e150):
            assert luxemburg_norm(c * f, A, BALL).value == pytest.approx(c * base, rel=1e-12)

    def test_conjugate_space(self):
        A = YoungParams(2, 0)
        d = interval(0, 1, 10)
        # conjugate of t^2 is t^2/4, so the norm of 1 is 1/2
        assert luxemburg_norm(1.0, A.conjugate(), d).value == pytest.approx(0.5, rel=1e-10)


class TestHolder:
    def test_zero(self):
        rep = holder_pairing(0.0, 1.0, YoungParams(2, 1), BALL)
        assert rep.lhs == 0 and rep.holds

    def test_equality_case(self):
        d = interval(0, 1, 20)
        rep = holder_pairing(1.0, 1.0, YoungParams(2, 0), d)
        assert rep.lhs == pytest.approx(1.0) and rep.rhs == pytest.approx(1.0, rel=1e-9)
        assert rep.holds

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 31 - 1))
    def test_random_fields(self, seed):
        rng = np.random.default_rng(seed)
        dom = radial_ball(3, 1.0, 24, weight=power_weight(rng.uniform(0, 2)))
        A = YoungParams(rng.uniform(1.2, 4), rng.uniform(0, 4))
        f, g = rng.standard_cauchy(size=(2, dom.size))
        assert holder_pairing(f, g, A, dom).holds


class TestIndicator:
    def test_closed_case(self):
        assert indicator_norm(YoungParams(2, 0), 1.0) == pytest.approx(0.5, abs=1e-10)

    def test_mass_positive(self):
        with pytest.raises(ValueError):
            indicator_norm(YoungParams(2, 0), 0.0)

    @pytest.mark.parametrize("p,q", [(1.5, 2), (2, 3), (3, 1)])
    def test_matches_luxemburg(self, p, q):
        A = YoungParams(p, q)
        f = np.array([1.0, 0.0])
        for mass in 10.0 ** np.arange(-4, 1):
            # one cell: each of the two nodes carries half its length
            d = interval(0, 2 * mass, 1)
            lux = luxemburg_norm(f, A.conjugate(), d).value
            assert lux == pytest.approx(indicator_norm(A, mass), rel=1e-8)

    @pytest.mark.parametrize("p,q", [(1.5, 2), (2, 3)])
    def test_monotone(self, p, q):
        m = np.geomspace(1e-8, 10, 60)
        vals = [indicator_norm(YoungParams(p, q), x) for x in m]
        assert np.all(np.diff(vals) > 0)

    @pytest.mark.parametrize("p,q", [(1.5, 2), (2, 3), (3, 1)])
    def test_bound_constants_bounded(self, p, q):
        m = np.geomspace(1e-12, 1e-2, 30)
        r1, r2 = indicator_bound_constants(YoungParams(p, q), m)
        for r in (r1, r2):
            assert np.all(np.isfinite(r)) and r.max() / r.min() < 5
        # the two log forms agree as the mass shrinks
        assert abs(r1[0] / r2[0] - 1) < 0.2


class TestChain:
    def test_constant_function(self):
        d = interval(0, 1, 30)
        rep = norm_chain_check(1.0, 1.5, 1, 3, 2, d)
        assert all(rep.ordered) and rep.max_constant <= 2
        assert all(n >= 1 - 1e-12 for n in rep.norms[:3])

    def test_equal_powers(self):
        f = np.exp(BALL.nodes)
        rep = norm_chain_check(f, 2, 0, 2, 0, BALL)
        assert rep.norms[0] == pytest.approx(rep.norms[2], rel=1e-12)

    def test_ordering_violation(self):
        with pytest.raises(ValueError):
            norm_chain_check(1.0, 3, 0, 2, 0, BALL)
        with pytest.raises(ValueError):
            norm_chain_check(1.0, 2, 3, 2, 1, BALL)

    def test_counterexample_truncations(self):
        from orlicz_lab.experiments.scenarios import counterexample_profile
        e = np.concatenate(([0.0], 2.0 ** (-np.arange(16 * 24, -1, -1) / 24)))
        dom = radial_ball(3, 1.0, edges=e)
        for k in range(2, 15):
            f = counterexample_profile(dom.nodes, k)
            rep = norm_chain_check(f, 1.2, 0, 1.5, 2, dom)
            assert all(rep.ordered), (k, rep.constants)

    def test_scale_gap_same_power(self):
        # with the same power and extra log on A only, ||f||_A / ||f||_p grows without bound
        e = np.concatenate(([0.0], 2.0 ** (-np.arange(40 * 8, -1, -1) / 8)))
        dom = radial_ball(3, 1.0, edges=e)
        ratios = []
        for s in (1e-2, 1e-6, 1e-11):
            f = np.where(dom.nodes <= s, 1.0, 0.0)
            rep = norm_chain_check(f, 1.5, 2, 1.5, 2, dom, bound=np.inf)
            ratios.append(rep.norms[1] / rep.norms[2])
        assert ratios[0] < ratios[1] < ratios[2]


class TestCompare:
    @pytest.mark.parametrize("A,B", [((1.5, 0), (1.5, 2)), ((2, 1), (3, 0)), ((1.2, 3), (2, 0))])
    def test_preceq_implies_bounded_ratio(self, A, B):
        A, B = YoungParams(*A), YoungParams(*B)
        assert preceq_check(A, B, np.geomspace(1, 1e8, 300)).holds
        rng = np.random.default_rng(7)
        ratios = []
        for _ in range(40):
            f = rng.lognormal(sigma=3, size=BALL.size)
            ratios.append(luxemburg_norm(f, A, BALL).value / luxemburg_norm(f, B, BALL).value)
        assert max(ratios) < 10

    def test_conjugate_eval_used_for_conjugate_norm(self):
        A = YoungParams(1.5, 2)
        Abar = A.conjugate()
        t = np.array([0.5, 3.0])
        assert np.allclose(Abar(t), conjugate_eval(A, t), rtol=1e-14)
