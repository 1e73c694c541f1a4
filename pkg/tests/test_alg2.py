import math
import random

import pytest

from ccrsim.alg1 import algorithm1_policy
from ccrsim.alg2 import MixParams, algorithm2_policy
from ccrsim.regions import (
    RatePair,
    alg2_region_max_r2,
    alg2_t_hat,
    inner_bound_max_r2,
    r1_upper_bound,
)
from ccrsim.regions import _coeffs
from ccrsim.simcore import SimConfig, run_loop
from conftest import random_independent_model


def test_mix_params_validation():
    MixParams(0.5, 0.5, 1.0)
    with pytest.raises(ValueError):
        MixParams(0.6, 0.6, 0.5)
    with pytest.raises(ValueError):
        MixParams(-0.1, 0, 0)
    with pytest.raises(ValueError):
        MixParams(0, 0, 1.5)


def test_no_controls_equals_four_phase(sym_half):
    cfg = SimConfig(sym_half, 150, 150, seed=404)
    tr1, tr2 = [], []
    r1 = run_loop(cfg, algorithm1_policy(), trace=tr1.append)
    r2 = run_loop(cfg, algorithm2_policy(MixParams()), trace=tr2.append)
    assert r1.total_slots == r2.total_slots
    for a, b in zip(tr1, tr2):
        assert a["packet_ids"] == b["packet_ids"]
        assert a["erasure_outcome"] == b["erasure_outcome"]


def test_zero_erasure_any_params(zero_model):
    res = run_loop(
        SimConfig(zero_model, 7, 5, seed=1),
        algorithm2_policy(MixParams(0.4, 0.4, 0.9)),
        check_invariants=True,
    )
    assert res.total_slots == 12
    assert res.decoded_ok == {3: True, 4: True}


def test_keyed_recovery_paths_exercised(case3_model):
    # strong controls force pairs through the keyed (step 6/7) recovery
    res = run_loop(
        SimConfig(case3_model, 300, 300, seed=11),
        algorithm2_policy(MixParams(0.0, 1.0, 1.0)),
        check_invariants=True,
    )
    assert res.decoded_ok == {3: True, 4: True}
    assert res.event_counts.get("keyed_recovery_at4", 0) > 0


def test_pair_dissolution_path(case3_model):
    res = run_loop(
        SimConfig(case3_model, 300, 300, seed=13),
        algorithm2_policy(MixParams(0.0, 1.0, 0.0)),
        check_invariants=True,
    )
    assert res.decoded_ok == {3: True, 4: True}
    # u = 0 dissolves every surviving pair back to plain traffic
    assert res.event_counts.get("pair_dissolved", 0) > 0
    assert "step7" not in res.phase_slots


def test_precode_starvation_demotes(case3_model):
    # no secondary traffic at all: every precoded packet must fall back
    res = run_loop(
        SimConfig(case3_model, 200, 0, seed=7),
        algorithm2_policy(MixParams(0.0, 1.0, 0.5)),
        check_invariants=True,
    )
    assert res.decoded_ok == {3: True, 4: True}
    assert res.event_counts.get("s_demoted", 0) > 0


def test_gsu_phase_fractions():
    # a model whose relay coefficients keep all three phase counts in the
    # thousands at this horizon; fixed seed, noise ~2% of the expectations
    from ccrsim.erasure import independent_model

    model = independent_model("0.1", "0.8", "0.3", "0.6", "0.7")
    n = 200_000
    params = MixParams(0.3, 0.6, 0.9)
    co = _coeffs(model)
    r1 = 0.6 / co.a1
    r2 = 0.15
    res = run_loop(
        SimConfig(model, math.ceil(n * r1), math.ceil(n * r2), seed=0),
        algorithm2_policy(params),
    )
    G = params.g * co.gamma * r1
    S = params.s * co.cS * r1
    U = params.u * params.s * co.cU * r1
    assert res.phase_slots.get("step2", 0) / n == pytest.approx(G, rel=0.03)
    assert res.phase_slots.get("step6", 0) / n == pytest.approx(S, rel=0.03)
    assert res.phase_slots.get("step7", 0) / n == pytest.approx(U, rel=0.03)


def test_completion_time_matches_branch_margin(case3_model):
    n = 100_000
    params = MixParams(0.25, 0.25, 0.6)
    r1 = 0.4 * r1_upper_bound(case3_model)
    r2 = 0.2
    rates = RatePair(r1, r2)
    res = run_loop(
        SimConfig(case3_model, math.ceil(n * r1), math.ceil(n * r2), seed=5),
        algorithm2_policy(params),
    )
    assert res.total_slots / n == pytest.approx(
        alg2_t_hat(case3_model, rates, params), rel=0.02
    )


def test_best_controls_reach_inner_boundary(case3_model):
    n = 200_000
    r1 = 0.5 * r1_upper_bound(case3_model)
    r2, params = alg2_region_max_r2(case3_model, r1)
    assert r2 == pytest.approx(inner_bound_max_r2(case3_model, r1), abs=1e-3)
    res = run_loop(
        SimConfig(case3_model, math.ceil(n * r1), math.ceil(n * r2), seed=2718),
        algorithm2_policy(params),
    )
    assert res.total_slots / n == pytest.approx(1.0, rel=0.02)


def test_scripted_keyed_recovery_trace(case3_model):
    # one packet each way, every precoded stage exercised:
    #   slot 1: node 1; only node 2 hears -> precode pool (s = 1)
    #   slot 2: node 2 sends own packet; node 3 hears -> XOR partner ready
    #   slot 3: node 2 sends the XOR; only node 4 hears -> pair parked
    #   slot 4: node 1 resends the key; node 3 hears -> half-open pair
    #   slot 5: node 1 resends the key (kept, u = 1); node 4 decodes partner
    script = iter([(1, 0, 0), (1, 0), (0, 1), (0, 1, 0), (0, 0, 1)])
    records = []
    res = run_loop(
        SimConfig(case3_model, 1, 1, seed=6),
        algorithm2_policy(MixParams(g=0.0, s=1.0, u=1.0)),
        erasures=script,
        trace=records.append,
        check_invariants=True,
    )
    assert [r["step"] for r in records] == [
        "step1", "step4", "step5", "step6", "step7"
    ]
    assert records[2]["packet_ids"] == [0, 1]  # the XOR transmission
    assert records[2]["queues_after"]["coded_open"] == 1
    assert records[3]["queues_after"]["coded_half"] == 1
    assert res.total_slots == 5
    assert res.decoded_ok == {3: True, 4: True}
    assert res.event_counts.get("keyed_recovery_at4") == 1
    # node 1 spent slots 4-5 on a packet node 2 already held
    assert res.schedule_counters["tau1_2_not3_not4"] == 1
    assert res.schedule_counters["tau1_2_3_not4"] == 1


def test_invariants_on_random_controls():
    rng = random.Random(55)
    for _ in range(5):
        model = random_independent_model(rng)
        g = rng.uniform(0, 0.6)
        params = MixParams(g, rng.uniform(0, 1 - g), rng.random())
        res = run_loop(
            SimConfig(model, 20, 20, seed=rng.randrange(2**32)),
            algorithm2_policy(params),
            check_invariants=True,
        )
        assert res.decoded_ok == {3: True, 4: True}
