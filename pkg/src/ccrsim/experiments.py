"""Batch drivers: the deviation study, convergence sweeps, phase accounting.

The deviation study walks an independent-erasure grid, keeps the
Case-3 cells where cooperation favors the secondary receiver, and records
the relative gap between the outer-bound and achievable secondary rates at
a ladder of primary rates.  Everything here is closed form or LP, so the
study is exactly reproducible; only the convergence sweep consumes
randomness.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence

from .alg1 import algorithm1_policy
from .alg2 import MixParams, algorithm2_policy
from .erasure import CaseLabel, ErasureModel, classify_case, independent_model
from .regions import (
    RatePair,
    inner_bound_max_r2,
    outer_bound_max_r2,
    r1_upper_bound,
    t_hat,
    t_hat_parts,
)
from .simcore import SimConfig, SimResult, run_loop

HIST_BIN_WIDTH = 0.005
HIST_RANGE = 0.10

CSV_COLUMNS = (
    "e12",
    "e13",
    "e14",
    "e23",
    "e24",
    "R1_frac",
    "R1",
    "B",
    "outer_R2",
    "inner_R2",
    "D",
)


def _default_probs() -> tuple[str, ...]:
    return tuple(f"0.{k}" for k in range(1, 10))


def _default_fracs() -> tuple[float, ...]:
    return tuple(round(0.10 + 0.05 * k, 2) for k in range(17))


@dataclass(frozen=True)
class GridSpec:
    """Parameter grid for the deviation study.

    Link probabilities are decimal strings so the case filter runs on exact
    arithmetic.  ``r1_step_rule`` selects how the primary-rate ladder is
    built: "fraction" places 17 points at 0.10..0.90 of the per-cell cap B
    in steps of 0.05*B; "absolute" steps by a flat 0.05 from 0.10*B up to
    0.90*B, so the number of points varies with B.  The restricted summary
    covers cells whose direct-to-secondary-receiver erasures are at most
    ``restricted_cap`` on both links.
    """

    link_probs: tuple[str, ...] = field(default_factory=_default_probs)
    r1_fracs: tuple[float, ...] = field(default_factory=_default_fracs)
    r1_step_rule: str = "fraction"
    restricted_cap: float = 0.6

    def __post_init__(self) -> None:
        if not self.link_probs:
            raise ValueError("empty probability grid")
        for p in self.link_probs:
            if not 0.0 < float(p) < 1.0:
                raise ValueError(f"grid probability {p} outside (0, 1)")
        if self.r1_step_rule not in ("fraction", "absolute"):
            raise ValueError(f"unknown r1 step rule {self.r1_step_rule!r}")
        for f in self.r1_fracs:
            if not 0.0 < f < 1.0:
                raise ValueError(f"R1 fraction {f} outside (0, 1)")

    def r1_ladder(self, cap: float) -> list[tuple[float, float]]:
        """(fraction, R1) pairs for one cell with upper bound ``cap``."""
        if self.r1_step_rule == "fraction":
            return [(f, f * cap) for f in self.r1_fracs]
        lo, hi = min(self.r1_fracs), max(self.r1_fracs)
        out, r1 = [], lo * cap
        while r1 <= hi * cap + 1e-15:
            out.append((r1 / cap, r1))
            r1 += 0.05
        return out


@dataclass(frozen=True)
class DeviationRecord:
    """One grid cell: model parameters, rates, and the relative rate gap."""

    e12: float
    e13: float
    e14: float
    e23: float
    e24: float
    r1_frac: float
    r1: float
    cap: float
    outer_r2: float
    inner_r2: float
    deviation: float


@dataclass
class DeviationStudy:
    records: list[DeviationRecord]
    summary: dict
    histogram: list[int]  # HIST_RANGE/HIST_BIN_WIDTH bins plus one overflow


def _cell_records(args: tuple) -> list[DeviationRecord]:
    links, grid = args
    model = independent_model(*links)
    e13x, e23x = float(links[1]), float(links[3])
    if e13x < e23x:
        return []
    if classify_case(model) is not CaseLabel.CASE3:
        return []
    cap = r1_upper_bound(model)
    floats = tuple(float(v) for v in links)
    out = []
    for frac, r1 in grid.r1_ladder(cap):
        outer = outer_bound_max_r2(model, r1)
        inner = inner_bound_max_r2(model, r1)
        if outer <= 0:
            raise AssertionError(f"outer rate vanished at {links} R1={r1}")
        dev = (outer - inner) / outer
        if dev < -1e-9:
            raise AssertionError(f"inner exceeds outer at {links} R1={r1}")
        dev = max(dev, 0.0)
        out.append(
            DeviationRecord(*floats, r1_frac=frac, r1=r1, cap=cap,
                            outer_r2=outer, inner_r2=inner, deviation=dev)
        )
    return out


def _summarize(records: Sequence[DeviationRecord]) -> dict:
    n = len(records)
    if n == 0:
        return {"cells": 0, "frac_below_0_05": None, "frac_at_most_0_05": None,
                "max_D": None}
    below = sum(1 for r in records if r.deviation < 0.05)
    at_most = sum(1 for r in records if r.deviation <= 0.05)
    return {
        "cells": n,
        "frac_below_0_05": below / n,
        "frac_at_most_0_05": at_most / n,
        "max_D": max(r.deviation for r in records),
    }


def deviation_study(
    grid: Optional[GridSpec] = None,
    *,
    jobs: int = 1,
    bin_width: float = HIST_BIN_WIDTH,
) -> DeviationStudy:
    """Run the full grid and summarize the outer/inner rate gap.

    Deterministic: identical grids produce byte-identical CSV output.
    ``jobs`` > 1 fans the independent cells out to a process pool; results
    merge in grid order regardless of completion order.  The histogram
    covers [0, 0.10] in ``bin_width`` steps plus one overflow bin.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    grid = grid or GridSpec()
    combos = [
        (links, grid)
        for links in itertools.product(grid.link_probs, repeat=5)
    ]
    if jobs > 1:
        import multiprocessing

        with multiprocessing.Pool(jobs) as pool:
            chunks = pool.map(_cell_records, combos, chunksize=256)
    else:
        chunks = map(_cell_records, combos)
    records = [rec for chunk in chunks for rec in chunk]

    nbins = int(round(HIST_RANGE / bin_width))
    histogram = [0] * (nbins + 1)
    for rec in records:
        histogram[min(int(rec.deviation / bin_width), nbins)] += 1
    assert sum(histogram) == len(records)

    cap = grid.restricted_cap
    restricted = [r for r in records if r.e14 <= cap and r.e24 <= cap]
    summary = _summarize(records)
    summary["restricted"] = _summarize(restricted)
    summary["restricted"]["definition"] = f"e14 <= {cap} and e24 <= {cap}"
    summary["r1_step_rule"] = grid.r1_step_rule
    summary["grid"] = {
        "link_probs": list(grid.link_probs),
        "r1_fracs": list(grid.r1_fracs),
    }
    return DeviationStudy(records=records, summary=summary, histogram=histogram)


def write_deviation_csv(records: Iterable[DeviationRecord], fh: IO[str]) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.e12, r.e13, r.e14, r.e23, r.e24,
                f"{r.r1_frac:.6f}", f"{r.r1:.12g}", f"{r.cap:.12g}",
                f"{r.outer_r2:.12g}", f"{r.inner_r2:.12g}", f"{r.deviation:.12g}",
            ]
        )


def make_policy(algorithm: str, params: Optional[MixParams] = None):
    if algorithm == "alg1":
        return algorithm1_policy()
    if algorithm == "alg2":
        return algorithm2_policy(params or MixParams())
    raise ValueError(f"unknown algorithm {algorithm!r}")


def convergence_sweep(
    model: ErasureModel,
    rates: RatePair,
    n_list: Sequence[int],
    seeds: Sequence[int],
    *,
    algorithm: str = "alg1",
    params: Optional[MixParams] = None,
) -> list[dict]:
    """Empirical T/n against the completion-time law, per horizon n."""
    expect = t_hat(model, rates)
    rows = []
    for n in n_list:
        k1 = math.ceil(n * rates.r1)
        k2 = math.ceil(n * rates.r2)
        ratios = []
        for seed in seeds:
            policy = make_policy(algorithm, params)
            result = run_loop(SimConfig(model, k1, k2, seed=seed), policy)
            ratios.append(result.total_slots / n)
        mean = sum(ratios) / len(ratios)
        var = sum((x - mean) ** 2 for x in ratios) / max(len(ratios) - 1, 1)
        rows.append(
            {
                "n": n,
                "mean_T_over_n": mean,
                "stderr": math.sqrt(var / len(ratios)),
                "t_hat": expect,
                "seeds": len(ratios),
            }
        )
    return rows


def tau_accounting(
    result: SimResult, model: ErasureModel, rates: RatePair, n: int
) -> dict[str, dict[str, float]]:
    """Compare one run's phase and queue statistics to their limits.

    Covers the four phase durations, the step-2 relay-to-node-4 count, and
    the queue levels at the step boundaries, each as observed/expected
    pairs with a relative error.
    """
    parts = t_hat_parts(model, rates)
    phase = result.phase_slots
    ends = result.phase_end_sizes

    def entry(observed: float, expected: float) -> dict[str, float]:
        if expected != 0.0:
            rel = abs(observed - expected) / abs(expected)
        else:
            rel = abs(observed)
        return {"observed": observed, "expected": expected, "rel_err": rel}

    report = {
        "T1_over_n": entry(phase.get("step1", 0) / n, parts["T1"]),
        "T2_over_n": entry(phase.get("step2", 0) / n, parts["T2"]),
        "T3_over_n": entry(phase.get("step3", 0) / n, parts["T3"]),
        "T4_over_n": entry(
            phase.get("step4", 0) / n, max(parts["T4_dest3"], parts["T4_dest4"])
        ),
        "M_over_n": entry(
            result.event_counts.get("relay_landed_at4", 0) / n,
            parts["relay_landed_at4_step2"],
        ),
        "tau_identity": entry(
            result.schedule_counters["tau1"] + result.schedule_counters["tau2"],
            result.total_slots,
        ),
    }
    if "step1" in ends:
        report["relay_fresh_after_step1"] = entry(
            ends["step1"]["relay_fresh"] / n, parts["relay_fresh_after_step1"]
        )
        report["relay_at4_after_step1"] = entry(
            ends["step1"]["relay_at4"] / n, parts["relay_at4_after_step1"]
        )
    if "step3" in ends:
        report["own_at3_after_step3"] = entry(
            ends["step3"]["own_at3"] / n, parts["own_at3_after_step3"]
        )
    return report
