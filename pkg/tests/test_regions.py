import random

import pytest

from ccrsim.alg2 import MixParams
from ccrsim.erasure import CaseLabel, PreconditionError
from ccrsim.regions import (
    RatePair,
    alg2_parametric_point,
    alg2_region_max_r2,
    alg2_t_hat,
    inner_bound_max_r2,
    outer_bound_max_r2,
    outer_bound_max_r2_lp,
    outer_bound_region,
    r1_upper_bound,
    region_membership,
    t_hat,
    t_hat_parts,
)
from conftest import random_independent_model, random_joint_model


class TestR1Cap:
    def test_zero_erasure(self, zero_model):
        assert r1_upper_bound(zero_model) == pytest.approx(1.0)

    def test_symmetric_half(self, sym_half):
        assert r1_upper_bound(sym_half) == pytest.approx(0.5)

    def test_cap_saturates_first_branch(self, case3_model):
        cap = r1_upper_bound(case3_model)
        parts = t_hat_parts(case3_model, RatePair(cap, 0.0))
        assert parts["branch_dest3"] == pytest.approx(1.0, abs=1e-12)


class TestOuterBound:
    def test_region_object_zero_erasure(self, zero_model):
        region = outer_bound_region(zero_model)
        assert region.variables == ("R1", "R2", "G", "S", "U")
        for coeffs, bound in region.inequalities:
            assert bound == 1.0
            assert coeffs[0] == pytest.approx(1.0)
            assert coeffs[1] == pytest.approx(1.0)

    def test_region_rows_symmetric_half(self, sym_half):
        # hand arithmetic: R1 coefficient 2, R2 coefficient 4/3, and the
        # relayed fractions G and S rebated fully (primary and secondary
        # see node 3 equally well here), U never rebated
        region = outer_bound_region(sym_half)
        coeffs, bound = region.inequalities[1]
        assert bound == 1.0
        assert coeffs[0] == pytest.approx(2.0)
        assert coeffs[1] == pytest.approx(4 / 3)
        assert coeffs[2] == pytest.approx(0.0)  # G
        assert coeffs[3] == pytest.approx(0.0)  # S
        assert coeffs[4] == pytest.approx(1.0)  # U

    def test_r1_zero_gives_single_user_rate(self, sym_half, case3_model):
        from ccrsim.erasure import marginal_erasure_prob

        for m in (sym_half, case3_model):
            e24 = marginal_erasure_prob(m, 2, (4,))
            assert outer_bound_max_r2(m, 0.0) == pytest.approx(1 - e24)

    def test_symmetric_value(self, sym_half):
        assert outer_bound_max_r2(sym_half, 0.3) == pytest.approx(
            min(0.75 * (1 - 2 * 0.3), 0.5 * (1 - 32 / 21 * 0.3))
        )
        assert outer_bound_max_r2(sym_half, 0.3) == pytest.approx(0.2714285714285715)

    def test_rejects_r1_beyond_cap(self, sym_half):
        with pytest.raises(PreconditionError):
            outer_bound_max_r2(sym_half, 0.51)

    def test_closed_form_equals_percase_lp(self):
        rng = random.Random(11)
        for case in CaseLabel:
            for _ in range(25):
                m = random_joint_model(rng, case)
                r1 = rng.uniform(0, 0.95) * r1_upper_bound(m)
                assert outer_bound_max_r2(m, r1) == pytest.approx(
                    outer_bound_max_r2_lp(m, r1), abs=1e-9
                )

    def test_case12_match_joint_projection(self, sym_half, case2_model):
        rng = random.Random(3)
        for m in (sym_half, case2_model):
            for _ in range(10):
                r1 = rng.uniform(0, 0.95) * r1_upper_bound(m)
                assert outer_bound_max_r2(m, r1) == pytest.approx(
                    outer_bound_max_r2_lp(m, r1, system="joint"), abs=1e-9
                )

    def test_case3_description_can_exceed_joint_projection(self, case3_model):
        # the published Case-3 description drops the airtime row; on this
        # model it is strictly looser than the joint polytope's projection
        r1 = 0.5 * r1_upper_bound(case3_model)
        loose = outer_bound_max_r2(case3_model, r1)
        strict = outer_bound_max_r2_lp(case3_model, r1, system="joint")
        assert strict < loose - 1e-3
        assert loose == pytest.approx(0.3596622437602178)
        assert strict == pytest.approx(0.3562278915210634)

    def test_monotone_in_r1(self, case3_model, sym_half, case2_model):
        for m in (case3_model, sym_half, case2_model):
            cap = r1_upper_bound(m)
            values = [outer_bound_max_r2(m, f * cap) for f in
                      (0, 0.2, 0.4, 0.6, 0.8, 0.999)]
            assert all(a >= b - 1e-12 for a, b in zip(values, values[1:]))


class TestInnerBound:
    def test_r1_zero(self, case3_model):
        e24 = 0.5
        assert inner_bound_max_r2(case3_model, 0.0) == pytest.approx(1 - e24)

    def test_requires_case3(self, sym_half):
        with pytest.raises(PreconditionError, match="Case"):
            inner_bound_max_r2(sym_half, 0.1)

    def test_never_exceeds_outer(self):
        rng = random.Random(21)
        for _ in range(40):
            m = random_independent_model(rng, CaseLabel.CASE3)
            r1 = rng.uniform(0, 0.9) * r1_upper_bound(m)
            assert inner_bound_max_r2(m, r1) <= outer_bound_max_r2(m, r1) + 1e-9

    def test_grid_sweep_agrees_with_lp(self, case3_model):
        r1 = 0.5 * r1_upper_bound(case3_model)
        swept, params = alg2_region_max_r2(case3_model, r1)
        assert swept == pytest.approx(inner_bound_max_r2(case3_model, r1), abs=1e-3)
        assert params.g + params.s <= 1.0 + 1e-12

    def test_time_constraint_option_never_grows(self, case3_model):
        for frac in (0.2, 0.5, 0.8):
            r1 = frac * r1_upper_bound(case3_model)
            assert inner_bound_max_r2(
                case3_model, r1, include_time_constraint=True
            ) <= inner_bound_max_r2(case3_model, r1) + 1e-12


class TestCompletionTime:
    def test_zero_erasure(self, zero_model):
        assert t_hat(zero_model, RatePair(0.4, 0.35)) == pytest.approx(0.75)

    def test_symmetric_hand_value(self, sym_half):
        assert t_hat(sym_half, RatePair(0.3, 0.3)) == pytest.approx(
            max(1.0, 32 / 21 * 0.3 + 0.6)
        )

    def test_boundary_identity_case1(self, sym_half):
        # on a Case-1 model the completion-time frontier is the rate frontier
        for frac in (0.1, 0.35, 0.6, 0.9):
            r1 = frac * r1_upper_bound(sym_half)
            r2 = outer_bound_max_r2(sym_half, r1)
            assert t_hat(sym_half, RatePair(r1, r2)) == pytest.approx(1.0, abs=1e-12)

    def test_decomposition_matches_on_random_models(self):
        rng = random.Random(17)
        for _ in range(200):
            m = random_joint_model(rng)
            rates = RatePair(rng.uniform(0, 0.4), rng.uniform(0, 0.4))
            parts = t_hat_parts(m, rates)  # raises if the two forms disagree
            assert parts["t_hat"] >= 0


class TestParametric:
    def test_no_controls_recovers_case1_value(self, sym_half):
        point = alg2_parametric_point(sym_half, 0.3, MixParams(0, 0, 0.7))
        assert (point.aux.G, point.aux.S, point.aux.U) == (0.0, 0.0, 0.0)
        assert point.r2 == pytest.approx(outer_bound_max_r2(sym_half, 0.3))
        assert not point.u_bracket_negative

    def test_g_sweep_reaches_case2_boundary(self, case2_strong):
        r1 = 0.5 * r1_upper_bound(case2_strong)
        points = [
            alg2_parametric_point(case2_strong, r1, MixParams(g=k / 400, s=0, u=0)).r2
            for k in range(401)
        ]
        assert max(points) == pytest.approx(
            outer_bound_max_r2(case2_strong, r1), abs=1e-6
        )
        # the retransmission control is load-bearing on this model
        assert max(points) > points[0] + 1e-3

    def test_bracket_never_negative(self):
        rng = random.Random(23)
        for _ in range(200):
            m = random_joint_model(rng)
            point = alg2_parametric_point(m, 0.1, MixParams(0.2, 0.3, 0.5))
            assert not point.u_bracket_negative
            assert point.aux.U >= 0

    def test_alg2_t_hat_reduces_to_t_hat(self, sym_half):
        rates = RatePair(0.25, 0.2)
        assert alg2_t_hat(sym_half, rates, MixParams()) == pytest.approx(
            t_hat(sym_half, rates)
        )


class TestMembership:
    def test_origin_always_inside(self):
        rng = random.Random(29)
        for _ in range(20):
            m = random_joint_model(rng)
            assert region_membership(m, RatePair(0, 0), "outer")

    def test_beyond_cap_outside(self, sym_half):
        cap = r1_upper_bound(sym_half)
        assert not region_membership(sym_half, RatePair(cap + 0.01, 0.0), "outer")

    def test_inner_implies_outer(self):
        rng = random.Random(41)
        checked = 0
        for _ in range(40):
            m = random_independent_model(rng, CaseLabel.CASE3)
            cap = r1_upper_bound(m)
            rates = RatePair(rng.uniform(0, 0.9) * cap, rng.uniform(0, 0.6))
            if region_membership(m, rates, "inner"):
                assert region_membership(m, rates, "outer")
                checked += 1
        assert checked > 5

    def test_boundary_point_inside(self, case3_model):
        r1 = 0.4 * r1_upper_bound(case3_model)
        r2 = inner_bound_max_r2(case3_model, r1)
        assert region_membership(case3_model, RatePair(r1, r2 - 1e-9), "inner")
        assert not region_membership(case3_model, RatePair(r1, r2 + 1e-6), "inner")

    def test_which_validated(self, sym_half):
        with pytest.raises(ValueError):
            region_membership(sym_half, RatePair(0, 0), "between")
