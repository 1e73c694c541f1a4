"""Closed-form and LP computations for the rate regions and completion time.

Everything here is a pure function of the erasure model and a rate point.
The outer bound is a small polytope over (R1, R2, G, S, U); its projection
onto (R1, R2) has a per-case closed form (a one-dimensional piecewise
linear maximization) that the generic simplex cross-checks.  The inner
bound for Case 3 is a four-variable LP, independently validated by a dense
sweep of the scheduler's (g, s, u) controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .alg2 import MixParams
from .erasure import (
    CaseLabel,
    ErasureModel,
    PreconditionError,
    classify_case,
    marginal_erasure_prob,
    require_admissible,
)
from .simplex import solve_lp

R1_TOL = 1e-12
LP_TOL = 1e-9


@dataclass(frozen=True, slots=True)
class RatePair:
    r1: float
    r2: float

    def __post_init__(self) -> None:
        if self.r1 < 0 or self.r2 < 0:
            raise ValueError("rates must be nonnegative")


@dataclass(frozen=True, slots=True)
class AuxVars:
    """Time-fraction variables of the bound algebra (all nonnegative)."""

    G: float
    S: float
    U: float


@dataclass(frozen=True)
class LinearRegion:
    """A conjunction of inequalities sum(coef * var) <= bound.

    Variables are named; nonnegativity of every variable is implied and not
    listed among the inequalities.
    """

    variables: tuple[str, ...]
    inequalities: tuple[tuple[tuple[float, ...], float], ...]

    def __post_init__(self) -> None:
        for coeffs, bound in self.inequalities:
            if len(coeffs) != len(self.variables):
                raise ValueError("coefficient row does not match variables")
            if not all(math.isfinite(c) for c in coeffs) or not math.isfinite(bound):
                raise ValueError("region coefficients must be finite")


@dataclass(frozen=True)
class ParametricPoint:
    """Auxiliary values induced by (g, s, u) and the best rate they allow."""

    aux: AuxVars
    r2: float
    u_bracket_negative: bool


@dataclass(frozen=True)
class _Coeffs:
    e123: float
    e1234: float
    e13: float
    e134: float
    e14: float
    e23: float
    e24: float
    e234: float
    a1: float  # R1 weight on the node-3-limited branch
    a2: float  # R1 weight on the node-4-limited branch
    b1: float
    b2: float
    k3: float  # (1-e13)/(1-e23)
    k34: float  # (1-e134)/(1-e234)
    k4: float  # (1-e14)/(1-e24)
    gamma: float  # per-R1 cap on the relayed-fraction variables
    cS: float  # S = s * cS * R1
    cU: float  # U = u * s * cU * R1
    c6: float  # supply constraint: S <= c6 * R2
    m5: float
    bracket4: float


@lru_cache(maxsize=512)
def _coeffs(model: ErasureModel) -> _Coeffs:
    e = lambda t, s: marginal_erasure_prob(model, t, s)
    e123, e1234 = e(1, (2, 3)), e(1, (2, 3, 4))
    e13, e134, e14 = e(1, (3,)), e(1, (3, 4)), e(1, (4,))
    e23, e24, e234 = e(2, (3,)), e(2, (4,)), e(2, (3, 4))
    a1 = (e13 - e123) / ((1 - e23) * (1 - e123)) + 1 / (1 - e123)
    a2 = (e134 - e1234) / ((1 - e1234) * (1 - e234)) + 1 / (1 - e123)
    cS = (e23 - e234) * (e134 - e1234) / ((1 - e134) * (1 - e1234) * (1 - e234))
    cU_keyed = (e134 - e1234) * (1 - e24) / ((1 - e14) * (1 - e234) * (1 - e1234))
    return _Coeffs(
        e123=e123,
        e1234=e1234,
        e13=e13,
        e134=e134,
        e14=e14,
        e23=e23,
        e24=e24,
        e234=e234,
        a1=a1,
        a2=a2,
        b1=1 / (1 - e234),
        b2=1 / (1 - e24),
        k3=(1 - e13) / (1 - e23),
        k34=(1 - e134) / (1 - e234),
        k4=(1 - e14) / (1 - e24),
        gamma=(e134 - e1234) / ((1 - e1234) * (1 - e134)),
        cS=cS,
        cU=cU_keyed - cS,
        c6=(e23 - e234) * (e24 - e234) / ((1 - e134) * (1 - e24) * (1 - e234)),
        m5=(1 - e14) * (1 - e234) / ((1 - e24) * (1 - e134)),
        bracket4=(1 - e24) * (1 - e134) / (1 - e14) - (e23 - e234),
    )


def r1_upper_bound(model: ErasureModel) -> float:
    """Largest primary rate any admissible point can carry."""
    require_admissible(model)
    return 1.0 / _coeffs(model).a1


def outer_bound_region(model: ErasureModel) -> LinearRegion:
    """The three outer-bound inequalities over (R1, R2, G, S, U)."""
    require_admissible(model)
    c = _coeffs(model)
    rows = (
        # uplink budget: every aux fraction eats into airtime one for one
        ((1 / (1 - c.e123), c.b2, 1.0, 1.0, 1.0), 1.0),
        ((c.a1, c.b1, 1 - c.k3, 1 - c.k3, 1.0), 1.0),
        ((c.a2, c.b2, 1 - c.k34, 1 - c.k4, 1 - c.k4), 1.0),
    )
    return LinearRegion(("R1", "R2", "G", "S", "U"), rows)


def _max_min_of_two_lines(
    v1: float, s1: float, v2: float, s2: float, lo: float, hi: float
) -> float:
    """max over t in [lo, hi] of min(v1 + s1*t, v2 + s2*t)."""
    candidates = [lo, hi]
    if s1 != s2:
        t_cross = (v2 - v1) / (s1 - s2)
        if lo < t_cross < hi:
            candidates.append(t_cross)
    return max(min(v1 + s1 * t, v2 + s2 * t) for t in candidates)


def outer_bound_max_r2(model: ErasureModel, r1: float) -> float:
    """Largest R2 the per-case outer-bound description allows at fixed R1.

    Case 1 needs no auxiliary time; Cases 2 and 3 maximize over the single
    productive auxiliary fraction, capped at gamma*R1.  For Cases 1 and 2
    this equals the projection of the joint (R1, R2, G, S, U) polytope
    exactly.  The Case-3 case-split description drops the airtime-budget
    row, so there it can exceed that projection; the numerical studies are
    defined against this closed form, and the strict projection remains
    available via ``outer_bound_max_r2_lp(..., system="joint")``.  A
    negative return means no nonnegative R2 is feasible at this R1
    (possible only for heavily correlated models near R1 = B).
    """
    case = classify_case(model)
    c = _coeffs(model)
    B = 1.0 / c.a1
    if not -R1_TOL <= r1 <= B + R1_TOL:
        raise PreconditionError(f"R1={r1} outside [0, B={B}]")
    line1_at0 = (1 - c.a1 * r1) / c.b1
    line2_at0 = (1 - c.a2 * r1) / c.b2
    if case is CaseLabel.CASE1:
        return min(line1_at0, line2_at0)
    boost = c.k34 if case is CaseLabel.CASE2 else c.k4
    slope1 = -(1 - c.k3) / c.b1
    slope2 = (boost - 1) / c.b2
    return _max_min_of_two_lines(line1_at0, slope1, line2_at0, slope2, 0.0, c.gamma * r1)


def outer_bound_max_r2_lp(
    model: ErasureModel, r1: float, *, system: str = "percase"
) -> float:
    """Same quantity via the simplex, as an independent cross-check.

    ``system="percase"`` solves the per-case description that the closed
    form evaluates (so the two must agree to rounding).  ``"joint"``
    solves the three-inequality system over (R2, G, S, U) directly; for
    Cases 1 and 2 both systems describe the same region, for Case 3 the
    joint projection can be strictly smaller.
    """
    require_admissible(model)
    c = _coeffs(model)
    if not -R1_TOL <= r1 <= 1.0 / c.a1 + R1_TOL:
        raise PreconditionError(f"R1={r1} outside [0, B]")
    if system == "joint":
        lhs = [
            (c.b2, 1.0, 1.0, 1.0),
            (c.b1, 1 - c.k3, 1 - c.k3, 1.0),
            (c.b2, 1 - c.k34, 1 - c.k4, 1 - c.k4),
        ]
        rhs = [
            1 - r1 / (1 - c.e123),
            1 - c.a1 * r1,
            1 - c.a2 * r1,
        ]
        res = solve_lp((1.0, 0.0, 0.0, 0.0), lhs, rhs, free=(0,))
    elif system == "percase":
        case = classify_case(model)
        if case is CaseLabel.CASE1:
            lhs = [(c.b1,), (c.b2,)]
            rhs = [1 - c.a1 * r1, 1 - c.a2 * r1]
            res = solve_lp((1.0,), lhs, rhs, free=(0,))
        else:
            boost = c.k34 if case is CaseLabel.CASE2 else c.k4
            lhs = [
                (c.b1, 1 - c.k3),
                (c.b2, 1 - boost),
                (0.0, 1.0),
            ]
            rhs = [1 - c.a1 * r1, 1 - c.a2 * r1, c.gamma * r1]
            res = solve_lp((1.0, 0.0), lhs, rhs, free=(0,))
    else:
        raise ValueError(f"system must be 'percase' or 'joint', got {system!r}")
    if res.status != "optimal":
        raise RuntimeError(f"outer-bound LP unexpectedly {res.status}")
    return res.value


def _inner_lp_rows(c: _Coeffs, r1: float, include_time_constraint: bool):
    lhs = [
        (c.b1, 1 - c.k3, 1 - c.k3, 1.0),
        (c.b2, 1 - c.k34, 1 - c.k4, 1 - c.k4),
        (0.0, c.e23 - c.e234, 1 - c.e234, 0.0),
        (0.0, 0.0, -c.bracket4, c.e23 - c.e234),
        (0.0, 1.0, c.m5, c.m5),
        (-c.c6, 0.0, 1.0, 0.0),
    ]
    rhs = [
        1 - c.a1 * r1,
        1 - c.a2 * r1,
        (c.e23 - c.e234) * c.gamma * r1,
        0.0,
        c.gamma * r1,
        0.0,
    ]
    if include_time_constraint:
        lhs.append((c.b2, 1.0, 1.0, 1.0))
        rhs.append(1 - r1 / (1 - c.e123))
    return lhs, rhs


def inner_bound_max_r2(
    model: ErasureModel,
    r1: float,
    *,
    include_time_constraint: bool = False,
) -> float:
    """Largest R2 in the Case-3 achievable region at a fixed R1 (LP).

    ``include_time_constraint`` additionally imposes the airtime-budget
    inequality that the region's defining system leaves out; it is off by
    default and exists for sensitivity checks only.
    """
    case = classify_case(model)
    if case is not CaseLabel.CASE3:
        raise PreconditionError(
            f"inner bound is defined for Case3 models; this one is {case.value}"
            " (its achievable region equals the outer bound)"
        )
    c = _coeffs(model)
    if not -R1_TOL <= r1 <= 1.0 / c.a1 + R1_TOL:
        raise PreconditionError(f"R1={r1} outside [0, B]")
    lhs, rhs = _inner_lp_rows(c, r1, include_time_constraint)
    res = solve_lp((1.0, 0.0, 0.0, 0.0), lhs, rhs, free=(0,))
    if res.status != "optimal":
        raise RuntimeError(f"inner-bound LP {res.status} at R1={r1}")
    return res.value


def t_hat(model: ErasureModel, rates: RatePair) -> float:
    """Asymptotic normalized completion time of the four-phase scheduler."""
    return t_hat_parts(model, rates)["t_hat"]


def t_hat_parts(model: ErasureModel, rates: RatePair) -> dict[str, float]:
    """Both forms of the completion-time law, checked against each other.

    Returns the branch maximum plus the per-phase decomposition
    (T1 + T2 + T3 + max of the two final-phase times); the two forms must
    agree to 1e-12 or the coefficients are wrong.
    """
    require_admissible(model)
    c = _coeffs(model)
    r1, r2 = rates.r1, rates.r2
    branch1 = c.a1 * r1 + c.b1 * r2
    branch2 = c.a2 * r1 + c.b2 * r2
    value = max(branch1, branch2)

    t1 = r1 / (1 - c.e123)
    q_fresh = r1 * (c.e134 - c.e1234) / (1 - c.e1234)
    q_at4 = r1 * ((c.e13 - c.e123) / (1 - c.e123) - (c.e134 - c.e1234) / (1 - c.e1234))
    t2 = q_fresh / (1 - c.e234)
    m = q_fresh * (c.e23 - c.e234) / (1 - c.e234)
    t3 = r2 / (1 - c.e234)
    q_at3 = r2 * (c.e24 - c.e234) / (1 - c.e234)
    t4_dest3 = (q_at4 + m) / (1 - c.e23)
    t4_dest4 = q_at3 / (1 - c.e24)
    decomposed = t1 + t2 + t3 + max(t4_dest3, t4_dest4)
    if abs(decomposed - value) > 1e-12:
        raise AssertionError(
            f"completion-time forms disagree: {value!r} vs {decomposed!r}"
        )
    return {
        "t_hat": value,
        "branch_dest3": branch1,
        "branch_dest4": branch2,
        "T1": t1,
        "T2": t2,
        "T3": t3,
        "T4_dest3": t4_dest3,
        "T4_dest4": t4_dest4,
        "relay_fresh_after_step1": q_fresh,
        "relay_at4_after_step1": q_at4,
        "relay_landed_at4_step2": m,
        "own_at3_after_step3": q_at3,
    }


def alg2_parametric_point(
    model: ErasureModel, r1: float, params: MixParams
) -> ParametricPoint:
    """Auxiliary fractions induced by (g, s, u) and the best R2 they allow.

    The returned rate is the largest R2 satisfying the two rate
    inequalities at those fractions; it may be negative, meaning the
    controls leave no room for secondary traffic at this R1.  A negative
    keying bracket is reported, never clamped (it cannot occur for a
    distribution with consistent marginals, so it signals bad input).
    """
    require_admissible(model)
    c = _coeffs(model)
    if r1 < -R1_TOL:
        raise PreconditionError("R1 must be nonnegative")
    G = params.g * c.gamma * r1
    S = params.s * c.cS * r1
    bracket_negative = c.cU < -1e-12
    U = params.u * params.s * c.cU * r1
    r2_1 = (1 - c.a1 * r1 - (1 - c.k3) * (G + S) - U) / c.b1
    r2_2 = (1 - c.a2 * r1 - (1 - c.k34) * G - (1 - c.k4) * (S + U)) / c.b2
    return ParametricPoint(
        aux=AuxVars(G=G, S=S, U=max(U, 0.0)),
        r2=min(r2_1, r2_2),
        u_bracket_negative=bracket_negative,
    )


def alg2_t_hat(model: ErasureModel, rates: RatePair, params: MixParams) -> float:
    """Asymptotic normalized completion time of the eight-phase scheduler.

    Branchwise this is the feasibility margin of the two rate
    inequalities: the point is achievable with these controls exactly when
    the value is below 1.
    """
    require_admissible(model)
    c = _coeffs(model)
    r1, r2 = rates.r1, rates.r2
    G = params.g * c.gamma * r1
    S = params.s * c.cS * r1
    U = params.u * params.s * c.cU * r1
    branch1 = c.a1 * r1 + c.b1 * r2 + (1 - c.k3) * (G + S) + U
    branch2 = c.a2 * r1 + c.b2 * r2 + (1 - c.k34) * G + (1 - c.k4) * (S + U)
    return max(branch1, branch2)


def _best_u_r2(c: _Coeffs, r1: float, g: float, s: float) -> tuple[float, float]:
    """Best (u, R2) at fixed (g, s): max over U of the min of two lines."""
    G = g * c.gamma * r1
    S = s * c.cS * r1
    u_cap = s * c.cU * r1
    v1 = (1 - c.a1 * r1 - (1 - c.k3) * (G + S)) / c.b1
    s1 = -1.0 / c.b1
    v2 = (1 - c.a2 * r1 - (1 - c.k34) * G - (1 - c.k4) * S) / c.b2
    s2 = (c.k4 - 1) / c.b2
    best_r2, best_U = min(v1, v2), 0.0
    for U in ((v2 - v1) / (s1 - s2), u_cap):
        if 0.0 <= U <= u_cap:
            r2 = min(v1 + s1 * U, v2 + s2 * U)
            if r2 > best_r2:
                best_r2, best_U = r2, U
    u = 0.0 if u_cap <= 0 else min(best_U / u_cap, 1.0)
    return u, best_r2


def alg2_region_max_r2(
    model: ErasureModel,
    r1: float,
    *,
    grid: int = 64,
    refinements: int = 3,
    require_supply: bool = True,
) -> tuple[float, MixParams]:
    """Best R2 over the scheduler controls by dense (g, s) sweep.

    ``u`` is optimized exactly at every grid point (the objective is
    piecewise linear in the keyed fraction).  With ``require_supply`` the
    sweep skips control points whose precoded volume exceeds what the
    claimed secondary rate can pair against; those points cannot sustain
    their nominal rate and are exactly the ones the achievable-region LP
    cuts off.  Without it the sweep evaluates the bare parametric system,
    with no supply feasibility imposed.
    """
    require_admissible(model)
    c = _coeffs(model)

    def evaluate(g: float, s: float) -> tuple[float, float]:
        u, r2 = _best_u_r2(c, r1, g, s)
        if require_supply and s * c.cS * r1 > c.c6 * r2 + 1e-15:
            return -math.inf, u
        return r2, u

    lo_g, hi_g, lo_s, hi_s = 0.0, 1.0, 0.0, 1.0
    best = (-math.inf, 0.0, 0.0, 0.0)  # r2, g, s, u
    for _ in range(refinements + 1):
        step_g = (hi_g - lo_g) / grid
        step_s = (hi_s - lo_s) / grid
        for i in range(grid + 1):
            g = lo_g + i * step_g
            if g > 1.0:
                break
            for j in range(grid + 1):
                s = lo_s + j * step_s
                if g + s > 1.0 + 1e-12:
                    break
                r2, u = evaluate(g, min(s, 1.0 - g))
                if r2 > best[0]:
                    best = (r2, g, min(s, 1.0 - g), u)
        _, bg, bs, _ = best
        lo_g, hi_g = max(0.0, bg - step_g), min(1.0, bg + step_g)
        lo_s, hi_s = max(0.0, bs - step_s), min(1.0, bs + step_s)
    r2, g, s, u = best
    return r2, MixParams(g=min(g, 1.0), s=min(s, 1.0 - g), u=u)


def region_membership(model: ErasureModel, rates: RatePair, which: str) -> bool:
    """LP feasibility of a rate point in the outer or inner region."""
    c = _coeffs(model)
    r1, r2 = rates.r1, rates.r2
    if which == "outer":
        lhs = [
            (1.0, 1.0, 1.0),
            (1 - c.k3, 1 - c.k3, 1.0),
            (1 - c.k34, 1 - c.k4, 1 - c.k4),
        ]
        rhs = [
            1 - r1 / (1 - c.e123) - c.b2 * r2,
            1 - c.a1 * r1 - c.b1 * r2,
            1 - c.a2 * r1 - c.b2 * r2,
        ]
        require_admissible(model)
    elif which == "inner":
        if classify_case(model) is not CaseLabel.CASE3:
            raise PreconditionError("inner region membership needs a Case3 model")
        full_lhs, full_rhs = _inner_lp_rows(c, r1, False)
        lhs = [row[1:] for row in full_lhs]
        rhs = [b - row[0] * r2 for row, b in zip(full_lhs, full_rhs)]
    else:
        raise ValueError(f"which must be 'outer' or 'inner', got {which!r}")
    res = solve_lp((0.0, 0.0, 0.0), lhs, rhs)
    return res.status == "optimal"
