import math
import random

import pytest

from icngame import kernels
from icngame.demand import DemandParams, GKind
from icngame.equilibrium import (
    GameSpec,
    Method,
    best_response,
    best_response_dynamics,
    foc_residual,
    nash_concave_closed,
    nash_linear,
    nash_numeric_foc,
    total_price_closed,
    utility_cp,
    utility_isp,
    verify_nash,
)
from icngame.errors import NoSignChange, SidePaymentTooLarge, UnsupportedModel
from icngame.numerics import Bracket

LIN = DemandParams(12, 1, g_kind=GKind.NONE)
CONCAVE = DemandParams.from_a(12, 1, 1.0)
P_STAR_A1 = (51 - math.sqrt(105)) / 4


def spec(params=LIN, ps=0.0, scale=1.0, cost=0.0):
    return GameSpec(params, ps, scale, cost)


class TestUtilities:
    def test_symmetric(self):
        assert utility_isp(4, 4, spec()) == 16
        assert utility_cp(4, 4, spec()) == 16

    def test_side_payment_removed(self):
        s = spec(ps=-3, scale=0.0, cost=2.5)
        assert utility_isp(4, 4, s) == pytest.approx(4 * 4 - 2.5)

    def test_zero_gross_revenue(self):
        # p1 = -scale * p_s with ISP paying the CP
        s = spec(ps=-2, scale=0.5, cost=1.5)
        assert utility_isp(1.0, 5, s) == pytest.approx(-1.5)

    def test_cp_zero_margin(self):
        s = spec(ps=2, scale=0.5)
        assert utility_cp(3, 1.0, s) == 0.0

    def test_cp_hand_value(self):
        assert utility_cp(3, 5, spec(ps=2)) == pytest.approx(12)

    def test_effective_ps(self):
        assert spec(ps=-2, scale=0.25).effective_ps == pytest.approx(-0.5)


class TestNashLinear:
    def test_symmetric(self):
        eq = nash_linear(spec())
        assert (eq.p1, eq.p2, eq.u1, eq.u2) == pytest.approx((4, 4, 16, 16))
        assert eq.method is Method("ClosedFormLinear")

    def test_side_payment(self):
        eq = nash_linear(spec(ps=1))
        assert (eq.p1, eq.p2, eq.u1, eq.u2) == pytest.approx((3, 5, 16, 16))
        assert eq.p_total == eq.p1 + eq.p2
        assert eq.valid_interior

    def test_too_large(self):
        with pytest.raises(SidePaymentTooLarge) as info:
            nash_linear(spec(ps=4))
        assert "4" in str(info.value)

    def test_scaled_side_payment(self):
        eq = nash_linear(spec(ps=-6, scale=0.5))
        assert (eq.p1, eq.p2) == pytest.approx((7, 1))

    def test_fixed_cost(self):
        assert nash_linear(spec(cost=3)).u1 == pytest.approx(13)

    def test_non_strict_flags(self):
        eq = nash_linear(spec(ps=5), strict=False)
        assert not eq.valid_interior

    def test_rejects_concave(self):
        with pytest.raises(UnsupportedModel):
            nash_linear(spec(CONCAVE))

    @pytest.mark.parametrize("ps", [-3.9, -1, 0, 2.5, 3.99])
    def test_symmetric_utilities_any_ps(self, ps):
        eq = nash_linear(spec(ps=ps))
        assert eq.u1 == pytest.approx(16, rel=1e-14)
        assert eq.u2 == pytest.approx(16, rel=1e-14)


class TestNashConcave:
    def test_a1(self):
        eq = nash_concave_closed(spec(CONCAVE))
        assert eq.p_total == pytest.approx(P_STAR_A1, rel=1e-14)
        assert eq.p1 == eq.p2

    def test_quadratic_root(self):
        assert 2 * P_STAR_A1 ** 2 - 51 * P_STAR_A1 + 312 == pytest.approx(0, abs=1e-10)

    def test_small_a_limit(self):
        eq = nash_concave_closed(spec(DemandParams.from_a(12, 1, 1e-9)))
        assert eq.p_total == pytest.approx(8, abs=1e-6)

    def test_a_zero_delegates(self):
        assert nash_concave_closed(spec(LIN, ps=1)).p1 == pytest.approx(3)

    def test_icn_polarity(self):
        eq = nash_concave_closed(spec(CONCAVE, ps=-1))
        assert eq.p1 == pytest.approx(P_STAR_A1 / 2 + 1)
        assert eq.p2 == pytest.approx(P_STAR_A1 / 2 - 1)

    def test_mm1_unsupported(self):
        with pytest.raises(UnsupportedModel):
            nash_concave_closed(spec(DemandParams(12, 1, 20, 2, g_kind=GKind.MM1)))

    def test_bound_is_half_p_star(self):
        with pytest.raises(SidePaymentTooLarge):
            nash_concave_closed(spec(CONCAVE, ps=P_STAR_A1 / 2 + 1e-9))

    @pytest.mark.parametrize("a", [1e-12, 1e-6, 0.01, 1, 10, 1e6])
    def test_closed_form_solves_foc(self, a):
        p = total_price_closed(12, 1, a)
        assert abs(foc_residual(p, DemandParams.from_a(12, 1, a))) <= 1e-10


class TestNumericFoc:
    def test_matches_closed(self):
        assert nash_numeric_foc(spec(CONCAVE)).p_total == pytest.approx(P_STAR_A1, abs=1e-8)

    def test_linear(self):
        eq = nash_numeric_foc(spec(LIN))
        assert eq.p_total == pytest.approx(8, abs=1e-10)
        assert eq.method is Method("NumericFOC")

    def test_small_curvature_recovers_linear(self):
        eq = nash_numeric_foc(spec(DemandParams.from_a(12, 1, 1e-9), ps=1))
        ref = nash_linear(spec(LIN, ps=1))
        assert eq.p1 == pytest.approx(ref.p1, abs=1e-4)
        assert eq.p2 == pytest.approx(ref.p2, abs=1e-4)

    def test_residual_reported(self):
        assert nash_numeric_foc(spec(CONCAVE)).foc_residual <= 1e-10

    def test_mm1_passes_deviation_check(self):
        s = spec(DemandParams(12, 1, 20, 2, g_kind=GKind.MM1))
        eq = nash_numeric_foc(s)
        assert 0 < eq.p_total < 12
        assert verify_nash(eq, s).passed

    def test_no_root_in_bracket(self):
        with pytest.raises(NoSignChange):
            nash_numeric_foc(spec(CONCAVE), bracket=Bracket(0.1, 1.0))

    @pytest.mark.parametrize("a", [1e-6, 0.01, 0.1, 1, 10])
    @pytest.mark.parametrize("d_max", [1, 12, 100])
    @pytest.mark.parametrize("d", [0.5, 1, 2])
    def test_grid_agreement(self, a, d_max, d):
        s = spec(DemandParams.from_a(d_max, d, a))
        assert abs(nash_concave_closed(s).p_total - nash_numeric_foc(s).p_total) <= 1e-8


class TestBestResponse:
    def test_analytic(self):
        assert best_response(1, 4, spec()).price == pytest.approx(4, abs=1e-9)
        assert best_response(2, 4, spec()).price == pytest.approx(4, abs=1e-9)

    def test_with_side_payment(self):
        assert best_response(1, 5, spec(ps=1)).price == pytest.approx(3, abs=1e-9)

    def test_degenerate(self):
        br = best_response(1, 12, spec())
        assert br.degenerate and br.price == 0.0

    def test_mm1(self):
        s = spec(DemandParams(12, 1, 20, 2, g_kind=GKind.MM1))
        eq = nash_numeric_foc(s)
        assert best_response(1, eq.p2, s).price == pytest.approx(eq.p1, abs=1e-6)

    @pytest.mark.parametrize("params", [LIN, CONCAVE, DemandParams.from_a(100, 0.5, 0.02)])
    @pytest.mark.parametrize("ps", [-1.0, 0.0, 0.5])
    def test_equilibrium_is_fixed_point(self, params, ps):
        s = spec(params, ps=ps)
        eq = nash_concave_closed(s)
        assert best_response(1, eq.p2, s).price == pytest.approx(eq.p1, abs=1e-6)
        assert best_response(2, eq.p1, s).price == pytest.approx(eq.p2, abs=1e-6)

    def test_bad_player(self):
        with pytest.raises(ValueError):
            best_response(3, 1, spec())


class TestDynamics:
    def test_from_origin(self):
        tr = best_response_dynamics(spec(), (0, 0), 200)
        assert tr.converged
        assert tr.final == pytest.approx((4, 4), abs=1e-6)
        assert tr.points[0] == (0, 0)

    def test_stays_at_nash(self):
        tr = best_response_dynamics(spec(), (4, 4), 5)
        assert all(p == pytest.approx((4, 4), abs=1e-9) for p in tr.points)
        assert tr.converged and tr.rounds == 1

    def test_concave(self):
        s = spec(CONCAVE)
        ref = nash_concave_closed(s)
        tr = best_response_dynamics(s, (1, 1), 200)
        assert tr.final == pytest.approx((ref.p1, ref.p2), abs=1e-6)

    def test_sequential(self):
        tr = best_response_dynamics(spec(ps=1), (0, 0), 200, sequential=True)
        assert tr.converged
        assert tr.final == pytest.approx((3, 5), abs=1e-6)

    def test_not_converged_reported(self):
        tr = best_response_dynamics(spec(), (0, 0), 2)
        assert not tr.converged and tr.rounds == 2

    def test_rounds_validated(self):
        with pytest.raises(ValueError):
            best_response_dynamics(spec(), (0, 0), 0)


class TestVerifyNash:
    def test_linear_equilibrium_passes(self):
        s = spec(ps=1)
        report = verify_nash(nash_linear(s), s, 1000)
        assert report.passed and not report.near_boundary

    def test_perturbed_fails(self):
        s = spec(ps=1)
        eq = nash_linear(s)
        bad = type(eq)(**{**eq.as_dict(), "p1": eq.p1 + 0.1, "p_total": eq.p_total + 0.1,
                          "method": eq.method})
        report = verify_nash(bad, s, 1000)
        assert not report.passed
        assert report.isp.max_gain > 1e-9
        assert report.isp.best_deviation == pytest.approx(3.0, abs=0.02)

    def test_boundary_flagged(self):
        s = spec(ps=4 - 1e-4)
        report = verify_nash(nash_linear(s), s)
        assert report.near_boundary

    def test_requires_interior(self):
        s = spec(ps=5)
        with pytest.raises(ValueError):
            verify_nash(nash_linear(s, strict=False), s)


def test_brute_force_oracle_matches_linear_closed_form():
    rng = random.Random(7)
    for _ in range(5):
        d_max, d = rng.uniform(1, 100), rng.uniform(0.1, 5)
        ps = rng.uniform(-0.9, 0.9) * d_max / (3 * d)
        p1, p2, _, ok = kernels.brute_force_nash(d_max, d, 0.0, ps, 0.0, 0.0, 1000, 500, 1e-11)
        ref = nash_linear(spec(DemandParams(d_max, d, g_kind=GKind.NONE), ps=ps))
        assert ok
        assert p1 == pytest.approx(ref.p1, abs=1e-5)
        assert p2 == pytest.approx(ref.p2, abs=1e-5)


@pytest.mark.parametrize("kappa", [0.0, 0.5])
def test_ps_neutrality(kappa):
    base = DemandParams(12, 1, 10, 4, kappa)
    ref = nash_concave_closed(spec(base))
    bound = ref.p_total / 2
    for k in range(10):
        ps = -bound * 0.95 + k * bound * 0.19
        eq = nash_concave_closed(spec(base, ps=ps, scale=1 - kappa))
        assert abs(eq.p_total - ref.p_total) <= 1e-9
        assert abs(eq.demand_at_eq - ref.demand_at_eq) <= 1e-9
        assert abs(eq.u1 - ref.u1) <= 1e-9
