import itertools
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccrsim.erasure import (
    CaseLabel,
    ErasureModel,
    ModelError,
    PreconditionError,
    classify_case,
    independent_model,
    marginal_erasure_prob,
    model_from_dict,
    model_to_dict,
    sample_erasure,
)
from conftest import anticorrelated_case2_model, normalized, random_joint_model


def test_zero_erasure_identity():
    m = independent_model(0, 0, 0, 0, 0)
    for nodes in ((2,), (3,), (4,), (2, 3), (3, 4), (2, 3, 4)):
        assert marginal_erasure_prob(m, 1, nodes) == 0.0
    assert marginal_erasure_prob(m, 2, (3, 4)) == 0.0


def test_independent_products():
    m = independent_model(0.2, 0.3, 0.4, 0.1, 0.5)
    assert marginal_erasure_prob(m, 1, (2, 3)) == pytest.approx(0.06, abs=1e-15)
    assert marginal_erasure_prob(m, 1, (2, 3, 4)) == pytest.approx(0.024, abs=1e-15)
    sym = independent_model(*[0.5] * 5)
    assert marginal_erasure_prob(sym, 1, (2, 3, 4)) == pytest.approx(0.125)
    assert marginal_erasure_prob(sym, 2, (3, 4)) == pytest.approx(0.25)


def test_anticorrelated_marginal_is_zero():
    m = anticorrelated_case2_model()
    assert marginal_erasure_prob(m, 1, (3, 4)) == 0.0
    assert marginal_erasure_prob(m, 1, (3,)) == pytest.approx(0.5)
    assert marginal_erasure_prob(m, 1, (4,)) == pytest.approx(0.5)


def test_pair_marginal_is_double_erasure_mass():
    m = ErasureModel((0.125,) * 8, (0.37, 0.23, 0.19, 0.21))
    assert marginal_erasure_prob(m, 2, (3, 4)) == pytest.approx(0.37)


@pytest.mark.parametrize("bad", [-0.1, 1.0, 1.5, "x"])
def test_independent_rejects_bad_probability(bad):
    with pytest.raises(ModelError):
        independent_model(bad, 0.1, 0.1, 0.1, 0.1)


def test_joint_must_normalize():
    with pytest.raises(ModelError):
        ErasureModel((0.5,) * 8, (0.25,) * 4)
    with pytest.raises(ModelError):
        ErasureModel((0.125,) * 8, (0.5, 0.5, 0.5, -0.5))


def test_marginal_set_validation(sym_half):
    with pytest.raises(ModelError):
        marginal_erasure_prob(sym_half, 1, ())
    with pytest.raises(ModelError):
        marginal_erasure_prob(sym_half, 2, (2,))
    with pytest.raises(ModelError):
        marginal_erasure_prob(sym_half, 3, (3,))


def test_sampling_degenerate_models():
    zero = independent_model(0, 0, 0, 0, 0)
    rng = random.Random(1)
    assert all(sample_erasure(zero, 1, rng) == (1, 1, 1) for _ in range(50))
    all_erased = ErasureModel(
        (1.0,) + (0.0,) * 7, (1.0,) + (0.0,) * 3
    )
    assert all(sample_erasure(all_erased, 2, rng) == (0, 0) for _ in range(50))


def test_sampling_frequency_matches_every_marginal(sym_half):
    rng = random.Random(2024)
    n = 1_000_000
    listeners = {1: (2, 3, 4), 2: (3, 4)}
    for transmitter in (1, 2):
        nodes = listeners[transmitter]
        outcome_counts: dict[tuple, int] = {}
        for _ in range(n):
            z = sample_erasure(sym_half, transmitter, rng)
            outcome_counts[z] = outcome_counts.get(z, 0) + 1
        subsets = [
            s
            for r in range(1, len(nodes) + 1)
            for s in itertools.combinations(nodes, r)
        ]
        for s in subsets:
            hits = sum(
                count
                for z, count in outcome_counts.items()
                if all(z[nodes.index(j)] == 0 for j in s)
            )
            p = marginal_erasure_prob(sym_half, transmitter, s)
            sigma = math.sqrt(p * (1 - p) / n)
            assert abs(hits / n - p) < 4 * sigma, (transmitter, s)


def test_classify_examples(sym_half, case3_model, case2_model):
    assert classify_case(sym_half) is CaseLabel.CASE1
    assert classify_case(case3_model) is CaseLabel.CASE3
    assert classify_case(case2_model) is CaseLabel.CASE2


def test_classify_case3_ratios(case3_model):
    r1 = (1 - marginal_erasure_prob(case3_model, 1, (3, 4))) / (
        1 - marginal_erasure_prob(case3_model, 2, (3, 4))
    )
    r2 = (1 - marginal_erasure_prob(case3_model, 1, (4,))) / (
        1 - marginal_erasure_prob(case3_model, 2, (4,))
    )
    assert r1 == pytest.approx(0.91 / 0.95)
    assert r2 == pytest.approx(1.8)


def test_classify_rejects_unhelpful_cooperation():
    with pytest.raises(PreconditionError, match="eps1_3 >= eps2_3"):
        classify_case(independent_model("0.1", "0.2", "0.5", "0.3", "0.5"))


def test_classify_rejects_degenerate_denominator():
    # secondary-to-4 link always erased
    m = ErasureModel((0.125,) * 8, (0.5, 0.0, 0.5, 0.0))
    with pytest.raises(PreconditionError, match="eps2_4"):
        classify_case(m)


def _tie_model(exact: bool):
    # both ratios exactly 5/4: eps1_34=0.1, eps1_4=0.2, eps2_34=0.28, eps2_4=0.36
    n34 = {(0, 0): "0.1", (0, 1): "0.4", (1, 0): "0.1", (1, 1): "0.4"}
    node1 = []
    for z2 in (0, 1):
        for z3 in (0, 1):
            for z4 in (0, 1):
                w = Fraction("0.3") if z2 == 0 else Fraction("0.7")
                node1.append(w * Fraction(n34[(z3, z4)]))
    node2 = [Fraction(v) for v in ("0.28", "0.12", "0.08", "0.52")]
    if exact:
        return ErasureModel(
            tuple(map(float, node1)), tuple(map(float, node2)),
            tuple(node1), tuple(node2),
        )
    return ErasureModel(tuple(map(float, node1)), tuple(map(float, node2)))


@pytest.mark.parametrize("exact", [True, False])
def test_classify_tie_goes_to_case2(exact):
    m = _tie_model(exact)
    r1 = (1 - marginal_erasure_prob(m, 1, (3, 4))) / (
        1 - marginal_erasure_prob(m, 2, (3, 4))
    )
    r2 = (1 - marginal_erasure_prob(m, 1, (4,))) / (
        1 - marginal_erasure_prob(m, 2, (4,))
    )
    assert r1 == pytest.approx(r2) and r1 > 1
    assert classify_case(m) is CaseLabel.CASE2


def test_case2_unreachable_on_independent_grid():
    probs = ["0.1", "0.3", "0.5", "0.7", "0.9"]
    seen = set()
    for e12, e13, e14, e23, e24 in itertools.product(probs, repeat=5):
        if float(e13) < float(e23):
            continue
        seen.add(classify_case(independent_model(e12, e13, e14, e23, e24)))
    assert CaseLabel.CASE2 not in seen
    assert {CaseLabel.CASE1, CaseLabel.CASE3} <= seen


joint_masses = st.tuples(
    st.lists(st.floats(0.01, 1.0), min_size=8, max_size=8),
    st.lists(st.floats(0.01, 1.0), min_size=4, max_size=4),
)


@given(joint_masses)
@settings(max_examples=150, deadline=None)
def test_marginal_containment(masses):
    model = ErasureModel(normalized(masses[0]), normalized(masses[1]))
    nodes1 = (2, 3, 4)
    subsets = [
        s
        for r in range(1, 4)
        for s in itertools.combinations(nodes1, r)
    ]
    for small in subsets:
        for big in subsets:
            if set(small) <= set(big):
                assert (
                    marginal_erasure_prob(model, 1, big)
                    <= marginal_erasure_prob(model, 1, small) + 1e-12
                )
    assert (
        marginal_erasure_prob(model, 2, (3, 4))
        <= min(
            marginal_erasure_prob(model, 2, (3,)),
            marginal_erasure_prob(model, 2, (4,)),
        )
        + 1e-12
    )


@given(joint_masses)
@settings(max_examples=150, deadline=None)
def test_classify_total_on_admissible_models(masses):
    model = ErasureModel(normalized(masses[0]), normalized(masses[1]))
    try:
        label = classify_case(model)
    except PreconditionError:
        return
    assert label in (CaseLabel.CASE1, CaseLabel.CASE2, CaseLabel.CASE3)


def test_every_case_reachable_by_joint_sampling():
    rng = random.Random(7)
    for case in CaseLabel:
        model = random_joint_model(rng, case)
        assert classify_case(model) is case


def test_json_round_trip(case3_model):
    d = model_to_dict(case3_model)
    again = model_from_dict(d)
    assert again.node1_joint == pytest.approx(case3_model.node1_joint)
    assert again.node2_joint == pytest.approx(case3_model.node2_joint)


def test_json_independent_with_strings_classifies_exactly():
    m = model_from_dict(
        {"kind": "independent", "e12": "0.2", "e13": "0.9", "e14": "0.1",
         "e23": "0.1", "e24": "0.5"}
    )
    assert m.is_exact
    assert classify_case(m) is CaseLabel.CASE3


@pytest.mark.parametrize(
    "obj",
    [
        {},
        {"kind": "poisson"},
        {"kind": "independent", "e12": 0.1},
        {"kind": "joint", "node1": [1.0] * 8},
    ],
)
def test_json_errors(obj):
    with pytest.raises(ModelError):
        model_from_dict(obj)
