"""Per-slot broadcast erasure statistics for the four-node relay setup.

Node 1 (primary transmitter) broadcasts to listeners {2, 3, 4}; node 2
(secondary transmitter) broadcasts to {3, 4}.  A transmission outcome is a
0/1 vector over the transmitter's listener set, 1 meaning "received".
Within one slot the per-listener outcomes may be arbitrarily correlated, so
the primitive here is the full joint distribution, not per-link
probabilities.  Outcomes are i.i.d. across slots.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Optional, Sequence, Union

LISTENERS = {1: (2, 3, 4), 2: (3, 4)}

SUM_TOL = 1e-12
CMP_TOL = 1e-12

ProbLike = Union[float, int, str, Fraction]


class ModelError(ValueError):
    """Invalid erasure-model description (bad mass, bad set, bad range)."""


class PreconditionError(ValueError):
    """A standing assumption of the rate analysis does not hold."""


class CaseLabel(Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"


def _outcome_bits(transmitter: int, index: int) -> tuple[int, ...]:
    """Outcome vector for a joint-mass index, most significant listener first."""
    listeners = LISTENERS[transmitter]
    width = len(listeners)
    return tuple((index >> (width - 1 - k)) & 1 for k in range(width))


def _parse_prob(value: ProbLike) -> tuple[float, Optional[Fraction]]:
    """Return (float value, exact value or None).

    Strings, ints and Fractions carry exact arithmetic through to case
    classification; plain floats do not.
    """
    if isinstance(value, Fraction):
        return float(value), value
    if isinstance(value, str):
        try:
            exact = Fraction(value)
        except ValueError as exc:
            raise ModelError(f"not a probability: {value!r}") from exc
        return float(exact), exact
    if isinstance(value, int) and not isinstance(value, bool):
        return float(value), Fraction(value)
    if isinstance(value, float):
        return value, None
    raise ModelError(f"not a probability: {value!r}")


@dataclass(frozen=True)
class ErasureModel:
    """Joint per-slot reception distributions for both transmitters.

    ``node1_joint`` has 8 masses over (z2, z3, z4) in lexicographic order
    with z=0 first; ``node2_joint`` has 4 masses over (z3, z4).  Exact
    rational copies are kept when the model was built from exact inputs so
    that case classification can compare ratios without rounding.
    Instances are immutable and safe to share across workers.
    """

    node1_joint: tuple[float, ...]
    node2_joint: tuple[float, ...]
    node1_exact: Optional[tuple[Fraction, ...]] = field(
        default=None, compare=False, repr=False
    )
    node2_exact: Optional[tuple[Fraction, ...]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self) -> None:
        for name, joint, size in (
            ("node1_joint", self.node1_joint, 8),
            ("node2_joint", self.node2_joint, 4),
        ):
            if len(joint) != size:
                raise ModelError(f"{name} must have {size} masses, got {len(joint)}")
            if any(p < 0.0 for p in joint):
                raise ModelError(f"{name} has a negative mass")
            total = sum(joint)
            if abs(total - 1.0) > SUM_TOL:
                raise ModelError(f"{name} sums to {total!r}, not 1")
        for exact, size in ((self.node1_exact, 8), (self.node2_exact, 4)):
            if exact is not None and (len(exact) != size or sum(exact) != 1):
                raise ModelError("exact joint does not sum to 1")

    def joint(self, transmitter: int) -> tuple[float, ...]:
        if transmitter == 1:
            return self.node1_joint
        if transmitter == 2:
            return self.node2_joint
        raise ModelError(f"transmitter must be 1 or 2, got {transmitter}")

    def exact_joint(self, transmitter: int) -> Optional[tuple[Fraction, ...]]:
        return self.node1_exact if transmitter == 1 else self.node2_exact

    @property
    def is_exact(self) -> bool:
        return self.node1_exact is not None and self.node2_exact is not None


def independent_model(
    e12: ProbLike, e13: ProbLike, e14: ProbLike, e23: ProbLike, e24: ProbLike
) -> ErasureModel:
    """Build the product-measure model from per-link erasure probabilities.

    Each argument is the probability that the corresponding link erases a
    transmission, and must lie in [0, 1).  Exact inputs (decimal strings,
    ints, Fractions) produce a model that classifies cases exactly.
    """
    parsed = [_parse_prob(v) for v in (e12, e13, e14, e23, e24)]
    for label, (val, _) in zip(("e12", "e13", "e14", "e23", "e24"), parsed):
        if not 0.0 <= val < 1.0:
            raise ModelError(f"{label}={val!r} outside [0, 1)")
    floats = [v for v, _ in parsed]
    exacts = [e for _, e in parsed]
    all_exact = all(e is not None for e in exacts)

    def product(links: Sequence, bits: tuple[int, ...]):
        out = links[0] ** 0  # 1 with the right numeric type
        for e, z in zip(links, bits):
            out = out * (1 - e if z else e)
        return out

    n1 = tuple(product(floats[:3], _outcome_bits(1, i)) for i in range(8))
    n2 = tuple(product(floats[3:], _outcome_bits(2, i)) for i in range(4))
    if all_exact:
        n1x = tuple(product(exacts[:3], _outcome_bits(1, i)) for i in range(8))
        n2x = tuple(product(exacts[3:], _outcome_bits(2, i)) for i in range(4))
        return ErasureModel(n1, n2, n1x, n2x)
    return ErasureModel(n1, n2)


def _validate_set(transmitter: int, nodes: Iterable[int]) -> tuple[int, ...]:
    nodes = tuple(sorted(set(nodes)))
    allowed = LISTENERS.get(transmitter)
    if allowed is None:
        raise ModelError(f"transmitter must be 1 or 2, got {transmitter}")
    if not nodes:
        raise ModelError("erasure set must be nonempty")
    bad = [n for n in nodes if n not in allowed]
    if bad:
        raise ModelError(f"nodes {bad} not listeners of transmitter {transmitter}")
    return nodes


def marginal_erasure_prob(
    model: ErasureModel, transmitter: int, nodes: Iterable[int]
) -> float:
    """Probability that one transmission is erased at every node in ``nodes``."""
    nodes = _validate_set(transmitter, nodes)
    listeners = LISTENERS[transmitter]
    positions = [listeners.index(n) for n in nodes]
    joint = model.joint(transmitter)
    total = 0.0
    for i, mass in enumerate(joint):
        bits = _outcome_bits(transmitter, i)
        if all(bits[p] == 0 for p in positions):
            total += mass
    return total


def exact_marginal_erasure_prob(
    model: ErasureModel, transmitter: int, nodes: Iterable[int]
) -> Optional[Fraction]:
    """Exact counterpart of :func:`marginal_erasure_prob`, if available."""
    joint = model.exact_joint(transmitter)
    if joint is None:
        return None
    nodes = _validate_set(transmitter, nodes)
    listeners = LISTENERS[transmitter]
    positions = [listeners.index(n) for n in nodes]
    total = Fraction(0)
    for i, mass in enumerate(joint):
        bits = _outcome_bits(transmitter, i)
        if all(bits[p] == 0 for p in positions):
            total += mass
    return total


@lru_cache(maxsize=256)
def cumulative_masses(model: ErasureModel, transmitter: int) -> tuple[float, ...]:
    """Prefix sums of the joint, for categorical sampling."""
    out, acc = [], 0.0
    for p in model.joint(transmitter):
        acc += p
        out.append(acc)
    return tuple(out)


def sample_outcome_index(model: ErasureModel, transmitter: int, rng) -> int:
    """Draw one outcome as a joint-mass index (one uniform consumed)."""
    cum = cumulative_masses(model, transmitter)
    idx = bisect_right(cum, rng.random())
    return min(idx, len(cum) - 1)


def sample_erasure(model: ErasureModel, transmitter: int, rng) -> tuple[int, ...]:
    """Draw one outcome vector (1 = received) for a transmission.

    ``rng`` is any generator with a ``random()`` method; successive calls
    are independent across slots.
    """
    return _outcome_bits(transmitter, sample_outcome_index(model, transmitter, rng))


# Denominators that the rate formulas divide by.  Any of these at 1 makes
# some expected service time infinite, so such models are rejected outright.
_DENOMINATOR_SETS = (
    (1, (2, 3)),
    (1, (2, 3, 4)),
    (1, (3, 4)),
    (1, (4,)),
    (2, (3,)),
    (2, (4,)),
    (2, (3, 4)),
)


def require_admissible(model: ErasureModel) -> None:
    """Check the standing assumptions of the case analysis.

    Raises :class:`PreconditionError` naming the failed inequality if the
    primary channel to node 3 is better than the secondary's
    (cooperation cannot help) or if any region denominator vanishes.
    """
    for transmitter, nodes in _DENOMINATOR_SETS:
        if marginal_erasure_prob(model, transmitter, nodes) >= 1.0 - CMP_TOL:
            name = f"eps{transmitter}_{''.join(map(str, nodes))}"
            raise PreconditionError(f"{name} = 1: expected service time is infinite")
    e13x = exact_marginal_erasure_prob(model, 1, (3,))
    e23x = exact_marginal_erasure_prob(model, 2, (3,))
    if e13x is not None and e23x is not None:
        if e13x < e23x:
            raise PreconditionError("eps1_3 >= eps2_3 violated")
    else:
        e13 = marginal_erasure_prob(model, 1, (3,))
        e23 = marginal_erasure_prob(model, 2, (3,))
        if e13 < e23 - CMP_TOL:
            raise PreconditionError("eps1_3 >= eps2_3 violated")


def classify_case(model: ErasureModel) -> CaseLabel:
    """Classify the model by the two cooperation-gain ratios.

    Case 1: max{(1-eps1_34)/(1-eps2_34), (1-eps1_4)/(1-eps2_4)} <= 1.
    Case 2: the max exceeds 1 and is attained by the first ratio.
    Case 3: the max exceeds 1 and is attained by the second ratio.
    A tie of two ratios above 1 is labelled Case 2.  Comparisons are exact
    when the model carries exact masses, else within ``CMP_TOL``.
    """
    require_admissible(model)
    if model.is_exact:
        one = Fraction(1)
        r1 = (one - exact_marginal_erasure_prob(model, 1, (3, 4))) / (
            one - exact_marginal_erasure_prob(model, 2, (3, 4))
        )
        r2 = (one - exact_marginal_erasure_prob(model, 1, (4,))) / (
            one - exact_marginal_erasure_prob(model, 2, (4,))
        )
        if max(r1, r2) <= 1:
            return CaseLabel.CASE1
        return CaseLabel.CASE2 if r1 >= r2 else CaseLabel.CASE3
    r1 = (1.0 - marginal_erasure_prob(model, 1, (3, 4))) / (
        1.0 - marginal_erasure_prob(model, 2, (3, 4))
    )
    r2 = (1.0 - marginal_erasure_prob(model, 1, (4,))) / (
        1.0 - marginal_erasure_prob(model, 2, (4,))
    )
    if max(r1, r2) <= 1.0 + CMP_TOL:
        return CaseLabel.CASE1
    return CaseLabel.CASE2 if r1 >= r2 - CMP_TOL else CaseLabel.CASE3


def model_from_dict(obj: Mapping) -> ErasureModel:
    """Parse the JSON model description.

    Two kinds are accepted::

        {"kind": "independent", "e12": ..., "e13": ..., "e14": ...,
         "e23": ..., "e24": ...}
        {"kind": "joint", "node1": [8 masses], "node2": [4 masses]}

    Probabilities may be numbers or decimal strings; strings keep the
    classification arithmetic exact.
    """
    try:
        kind = obj["kind"]
    except (KeyError, TypeError) as exc:
        raise ModelError("model description needs a 'kind' field") from exc
    if kind == "independent":
        try:
            args = [obj[k] for k in ("e12", "e13", "e14", "e23", "e24")]
        except KeyError as exc:
            raise ModelError(f"missing link probability {exc}") from exc
        return independent_model(*args)
    if kind == "joint":
        try:
            n1 = [_parse_prob(v) for v in obj["node1"]]
            n2 = [_parse_prob(v) for v in obj["node2"]]
        except KeyError as exc:
            raise ModelError(f"missing joint table {exc}") from exc
        floats1 = tuple(v for v, _ in n1)
        floats2 = tuple(v for v, _ in n2)
        if all(e is not None for _, e in n1) and all(e is not None for _, e in n2):
            return ErasureModel(
                floats1,
                floats2,
                tuple(e for _, e in n1),
                tuple(e for _, e in n2),
            )
        return ErasureModel(floats1, floats2)
    raise ModelError(f"unknown model kind {kind!r}")


def model_to_dict(model: ErasureModel) -> dict:
    return {
        "kind": "joint",
        "node1": list(model.node1_joint),
        "node2": list(model.node2_joint),
    }
