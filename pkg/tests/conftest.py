import random

import pytest

from ccrsim.erasure import (
    CaseLabel,
    ErasureModel,
    PreconditionError,
    classify_case,
    independent_model,
)


def normalized(values):
    total = sum(values)
    return tuple(v / total for v in values)


def random_joint_model(rng: random.Random, case: CaseLabel | None = None,
                       max_tries: int = 200_000) -> ErasureModel:
    """Rejection-sample an admissible correlated model, optionally per case."""
    for _ in range(max_tries):
        model = ErasureModel(
            normalized([rng.expovariate(1.0) for _ in range(8)]),
            normalized([rng.expovariate(1.0) for _ in range(4)]),
        )
        try:
            label = classify_case(model)
        except PreconditionError:
            continue
        if case is None or label is case:
            return model
    raise RuntimeError(f"no {case} model found in {max_tries} draws")


def random_independent_model(rng: random.Random, case: CaseLabel | None = None,
                             lo: float = 0.05, hi: float = 0.9,
                             max_tries: int = 200_000) -> ErasureModel:
    for _ in range(max_tries):
        e12, e14, e24 = (rng.uniform(lo, hi) for _ in range(3))
        e13, e23 = sorted((rng.uniform(lo, hi), rng.uniform(lo, hi)), reverse=True)
        model = independent_model(e12, e13, e14, e23, e24)
        try:
            label = classify_case(model)
        except PreconditionError:
            continue
        if case is None or label is case:
            return model
    raise RuntimeError(f"no {case} independent model found")


def _correlated_primary(e12: float, n34: dict, node2_links: tuple) -> ErasureModel:
    node1 = []
    for z2 in (0, 1):
        for z3 in (0, 1):
            for z4 in (0, 1):
                node1.append((e12 if z2 == 0 else 1 - e12) * n34[(z3, z4)])
    e23, e24 = node2_links
    node2 = []
    for z3 in (0, 1):
        for z4 in (0, 1):
            node2.append((e23 if z3 == 0 else 1 - e23) * (e24 if z4 == 0 else 1 - e24))
    return ErasureModel(tuple(node1), tuple(node2))


# The anti-correlated primary channel from the classification examples:
# nodes 3 and 4 never erase together, node 2 independent.
def anticorrelated_case2_model() -> ErasureModel:
    n34 = {(0, 1): 0.5, (1, 0): 0.5, (1, 1): 0.0, (0, 0): 0.0}
    return _correlated_primary(0.2, n34, (0.4, 0.4))


# A correlated model where the primary-retransmission control materially
# widens the region: lossy secondary links, primary double-erasures common
# enough that the relayed fraction is large.
def strong_case2_model() -> ErasureModel:
    n34 = {(0, 0): 0.42, (0, 1): 0.28, (1, 0): 0.28, (1, 1): 0.02}
    return _correlated_primary(0.3, n34, (0.7, 0.7))


@pytest.fixture
def sym_half() -> ErasureModel:
    return independent_model(*["0.5"] * 5)


@pytest.fixture
def case3_model() -> ErasureModel:
    return independent_model("0.2", "0.9", "0.1", "0.1", "0.5")


@pytest.fixture
def zero_model() -> ErasureModel:
    return independent_model(0, 0, 0, 0, 0)


@pytest.fixture
def case2_model() -> ErasureModel:
    return anticorrelated_case2_model()


@pytest.fixture
def case2_strong() -> ErasureModel:
    return strong_case2_model()
