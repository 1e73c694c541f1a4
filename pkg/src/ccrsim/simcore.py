"""Slot-synchronous simulation machinery shared by both transmission policies.

One slot = one transmission by node 1 or node 2, one joint erasure draw,
then queue updates driven purely by the (public, instantaneous) feedback.
Payloads are byte strings combined with bytewise XOR, so every decode can be
checked bit-exactly against the original packet.

Queue naming (location / content):

=============  ================================================================
``q1``         primary backlog at node 1, destined to node 3
``q2``         secondary backlog at node 2, destined to node 4
``relay_fresh``  primary packets overheard by node 2, unseen by nodes 3 and 4
``relay_at4``  primary packets held by node 2 that node 4 already has
               (mirrored at node 4 as decoding side information)
``own_at3``    secondary packets node 3 already has, still missing at node 4
               (mirrored at node 3)
``g_relay``    overheard primary packets earmarked for node-1 retransmission
``s_relay``    overheard primary packets earmarked for node-2 precoding
``coded_open`` XOR pairs held by node 4, neither constituent delivered yet
``coded_half`` XOR pairs held by node 4 whose primary constituent has
               already reached node 3
``key_open``/``key_half``  node-1 copies of the primary constituents of the
               corresponding coded queues (the "keys" node 4 still awaits)
``mark_buf``   at most one primary packet that node 4 caught before
               anyone else (node 1 keeps it marked while it stays in q1)
=============  ================================================================

A run is strictly single-threaded; concurrent runs share only the
(immutable) erasure model.
"""

from __future__ import annotations

import random
from bisect import bisect_right
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Mapping, Optional, Union

from .erasure import ErasureModel, cumulative_masses, marginal_erasure_prob

DEFAULT_PAYLOAD_LEN = 8


class DecodeError(RuntimeError):
    """A receiver failed to reconstruct a packet, or reconstructed it wrongly.

    This always signals a bookkeeping bug, never channel noise, so the run
    is aborted rather than patched up.
    """


class ConfigError(ValueError):
    """Run configuration with an unreachable phase or invalid counts."""


@dataclass(frozen=True, slots=True)
class Packet:
    uid: int
    origin: int  # 1 or 2
    index: int  # ordinal within its message
    payload: bytes

    @property
    def destination(self) -> int:
        return self.origin + 2


@dataclass(frozen=True, slots=True)
class CodedPacket:
    """Bytewise XOR of one or two packets, with provenance."""

    uid: tuple[int, ...]
    constituents: tuple[Packet, ...]
    payload: bytes

    def __post_init__(self) -> None:
        if not 1 <= len(self.constituents) <= 2:
            raise ValueError("a coded packet has one or two constituents")


Unit = Union[Packet, CodedPacket]


def xor_payloads(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError(f"payload length mismatch: {len(a)} != {len(b)}")
    return bytes(x ^ y for x, y in zip(a, b))


def xor_combine(a: Unit, b: Packet) -> CodedPacket:
    """XOR ``b`` into ``a``; constituents are the union of both sides."""
    parts = a.constituents if isinstance(a, CodedPacket) else (a,)
    merged = tuple(sorted(parts + (b,), key=lambda p: p.uid))
    return CodedPacket(
        uid=tuple(p.uid for p in merged),
        constituents=merged,
        payload=xor_payloads(a.payload, b.payload),
    )


def decode_at_receiver(
    received: CodedPacket,
    side_info: Union[Iterable[Packet], Mapping[int, bytes]],
) -> Packet:
    """Recover the single unknown constituent of ``received``.

    ``side_info`` is what the receiver already holds, either as packets or
    as a uid->payload mapping.  Exactly one constituent may be unknown;
    anything else means the queues lied about the receiver's knowledge.
    """
    if isinstance(side_info, Mapping):
        known = side_info
    else:
        known = {p.uid: p.payload for p in side_info}
    unknown = [p for p in received.constituents if p.uid not in known]
    if len(unknown) != 1:
        raise DecodeError(
            f"coded packet {received.uid} has {len(unknown)} unknown constituents"
        )
    payload = received.payload
    for p in received.constituents:
        if p.uid in known:
            payload = xor_payloads(payload, known[p.uid])
    missing = unknown[0]
    return Packet(missing.uid, missing.origin, missing.index, payload)


@dataclass(frozen=True)
class SimConfig:
    model: ErasureModel
    k1: int
    k2: int
    payload_len: int = DEFAULT_PAYLOAD_LEN
    seed: int = 0
    deadline: Optional[int] = None

    def __post_init__(self) -> None:
        if self.k1 < 0 or self.k2 < 0 or self.k1 + self.k2 < 1:
            raise ConfigError("need k1 >= 0, k2 >= 0, k1 + k2 >= 1")
        if self.payload_len < 1:
            raise ConfigError("payload_len must be positive")
        if self.deadline is not None and self.deadline < 0:
            raise ConfigError("deadline must be nonnegative")


class QueueBank:
    """All queues of the scheduling taxonomy for one run."""

    NAMES = (
        "q1",
        "q2",
        "relay_fresh",
        "relay_at4",
        "own_at3",
        "g_relay",
        "s_relay",
        "coded_open",
        "coded_half",
        "key_open",
        "key_half",
    )

    __slots__ = NAMES + ("mark_buf",)

    def __init__(self) -> None:
        for name in self.NAMES:
            setattr(self, name, deque())
        self.mark_buf: Optional[Packet] = None

    def sizes(self) -> dict[str, int]:
        out = {name: len(getattr(self, name)) for name in self.NAMES}
        out["mark_buf"] = 0 if self.mark_buf is None else 1
        return out


@dataclass
class SimResult:
    """Outcome of one run: totals, per-step slot counts, verdicts."""

    algorithm: str
    k1: int
    k2: int
    seed: int
    total_slots: int
    phase_slots: dict[str, int]
    schedule_counters: dict[str, int]
    decoded_ok: dict[int, bool]
    deadline_met: Optional[bool]
    delivered: dict[int, int]
    phase_end_sizes: dict[str, dict[str, int]]
    event_counts: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "k1": self.k1,
            "k2": self.k2,
            "seed": self.seed,
            "T": self.total_slots,
            "phase_slots": dict(self.phase_slots),
            "schedule_counters": dict(self.schedule_counters),
            "decoded_ok": {str(k): v for k, v in self.decoded_ok.items()},
            "deadline_met": self.deadline_met,
            "delivered": {str(k): v for k, v in self.delivered.items()},
            "phase_end_sizes": {k: dict(v) for k, v in self.phase_end_sizes.items()},
            "event_counts": dict(self.event_counts),
        }


# heard-bit layout, kept in one int per packet
_BIT = {2: 1, 3: 2, 4: 4}


def _outcome_meta(width: int) -> tuple[tuple, ...]:
    """Per outcome index: (z vector, heard bits, z3 flag, z4 flag)."""
    out = []
    for idx in range(1 << width):
        z = tuple((idx >> (width - 1 - k)) & 1 for k in range(width))
        if width == 3:
            bits = (z[0] and 1) | (z[1] and 2) | (z[2] and 4)
            z3, z4 = z[1], z[2]
        else:
            bits = (z[0] and 2) | (z[1] and 4)
            z3, z4 = z[0], z[1]
        out.append((z, bits, z3, z4))
    return tuple(out)


_META1 = _outcome_meta(3)
_META2 = _outcome_meta(2)


class RunState:
    """Mutable state of one run: queues, receiver knowledge, counters.

    ``know[j]`` maps uid -> payload as node j holds it (direct receptions
    and successful decodes).  ``heard[uid]`` is the node bitmask used to
    classify node-1 transmissions by the reception history of the packet
    being sent; decodes count as receptions here.  Coded packets keep
    their payloads in ``know`` only when invariant checking is on -- no
    decode path reads them back.
    """

    __slots__ = (
        "config",
        "bank",
        "rng",
        "packets",
        "know",
        "heard",
        "delivered3",
        "delivered4",
        "remaining",
        "slot",
        "phase_slots",
        "tau_patterns",
        "tau1",
        "tau2",
        "event_counts",
        "cum1",
        "cum2",
        "track_coded",
    )

    def __init__(self, config: SimConfig, track_coded: bool = False) -> None:
        self.config = config
        self.bank = QueueBank()
        self.rng = random.Random(config.seed)
        self.packets: list[Packet] = []
        for i in range(config.k1):
            self.packets.append(
                Packet(i, 1, i, self.rng.randbytes(config.payload_len))
            )
        for i in range(config.k2):
            self.packets.append(
                Packet(config.k1 + i, 2, i, self.rng.randbytes(config.payload_len))
            )
        self.bank.q1.extend(self.packets[: config.k1])
        self.bank.q2.extend(self.packets[config.k1 :])
        self.know: dict[int, dict] = {3: {}, 4: {}}
        self.heard = [0] * (config.k1 + config.k2)
        self.delivered3: set[int] = set()
        self.delivered4: set[int] = set()
        self.remaining = config.k1 + config.k2
        self.slot = 0
        self.phase_slots: dict[str, int] = {}
        self.tau_patterns = [0] * 8
        self.tau1 = 0
        self.tau2 = 0
        self.event_counts: dict[str, int] = {}
        self.cum1 = cumulative_masses(config.model, 1)
        self.cum2 = cumulative_masses(config.model, 2)
        self.track_coded = track_coded

    def count_event(self, name: str, n: int = 1) -> None:
        self.event_counts[name] = self.event_counts.get(name, 0) + n

    def learn(self, node: int, packet: Packet, payload: bytes) -> None:
        """Record that ``node`` reconstructed ``packet`` with ``payload``.

        The reconstruction must match the original bit for bit; a mismatch
        is a decoding bug and aborts the run.
        """
        if payload != packet.payload:
            raise DecodeError(
                f"node {node} reconstructed packet {packet.uid} incorrectly"
            )
        self.know[node][packet.uid] = payload
        self.heard[packet.uid] |= _BIT[node]
        if node == 3 and packet.origin == 1:
            if packet.uid not in self.delivered3:
                self.delivered3.add(packet.uid)
                self.remaining -= 1
        elif node == 4 and packet.origin == 2:
            if packet.uid not in self.delivered4:
                self.delivered4.add(packet.uid)
                self.remaining -= 1

    # -- invariants ------------------------------------------------------

    def validate(self) -> None:
        """Assert queue/knowledge consistency at a slot boundary."""
        b = self.bank
        know3, know4 = self.know[3], self.know[4]
        for p in b.relay_at4:
            assert p.uid in know4, f"relay_at4 packet {p.uid} unknown at node 4"
        for p in b.own_at3:
            assert p.uid in know3, f"own_at3 packet {p.uid} unknown at node 3"
        if b.mark_buf is not None:
            assert b.mark_buf.uid in know4
            assert b.q1 and b.mark_buf is b.q1[0], (
                "mark buffer holds a packet that is not the head of q1"
            )
        for coded_name, key_name in (
            ("coded_open", "key_open"),
            ("coded_half", "key_half"),
        ):
            coded_q = getattr(b, coded_name)
            key_q = getattr(b, key_name)
            assert len(coded_q) == len(key_q), f"{coded_name}/{key_name} desynced"
            for coded, key in zip(coded_q, key_q):
                assert coded.uid in know4, f"{coded_name} pair unknown at node 4"
                cons = {p.uid for p in coded.constituents}
                assert key.uid in cons, f"{key_name} head not a constituent"
        for key in b.key_half:
            assert key.uid in self.delivered3, "key_half packet not yet at node 3"

        k1 = self.config.k1
        groups1 = {
            "q1": {p.uid for p in b.q1},
            "relay_fresh": {p.uid for p in b.relay_fresh},
            "g_relay": {p.uid for p in b.g_relay},
            "s_relay": {p.uid for p in b.s_relay},
            "relay_at4": {p.uid for p in b.relay_at4},
            "key_open": {p.uid for p in b.key_open},
            "delivered3": set(self.delivered3),
        }
        seen: set[int] = set()
        for name, ids in groups1.items():
            overlap = seen & ids
            assert not overlap, f"origin-1 packets {overlap} double-booked in {name}"
            seen |= ids
        assert seen == set(range(k1)), "origin-1 packet conservation violated"

        def partner(coded: CodedPacket) -> int:
            (p,) = [p for p in coded.constituents if p.origin == 2]
            return p.uid

        groups2 = {
            "q2": {p.uid for p in b.q2},
            "own_at3": {p.uid for p in b.own_at3},
            "coded_open": {partner(c) for c in b.coded_open},
            "coded_half": {partner(c) for c in b.coded_half},
            "delivered4": set(self.delivered4),
        }
        seen = set()
        for name, ids in groups2.items():
            overlap = seen & ids
            assert not overlap, f"origin-2 packets {overlap} double-booked in {name}"
            seen |= ids
        assert seen == set(range(k1, k1 + self.config.k2)), (
            "origin-2 packet conservation violated"
        )


def check_reachability(
    model: ErasureModel,
    k1: int,
    k2: int,
    *,
    needs_node1_relay: bool = False,
    needs_node1_key: bool = False,
) -> None:
    """Reject configurations whose expected completion time is infinite."""
    required = []
    if k1 > 0:
        required += [(1, (2, 3)), (2, (3, 4)), (2, (3,))]
        if needs_node1_relay:
            required.append((1, (3, 4)))
        if needs_node1_key:
            required.append((1, (4,)))
    if k2 > 0:
        required += [(2, (3, 4)), (2, (4,))]
    for transmitter, nodes in required:
        if marginal_erasure_prob(model, transmitter, nodes) >= 1.0 - 1e-12:
            name = f"eps{transmitter}_{''.join(map(str, nodes))}"
            raise ConfigError(f"unreachable phase: {name} = 1")


def run_loop(
    config: SimConfig,
    policy,
    *,
    erasures: Optional[Iterator] = None,
    trace: Optional[Callable[[dict], None]] = None,
    check_invariants: bool = False,
) -> SimResult:
    """Drive one run of ``policy`` to completion (or to its deadline).

    Draw order per run: first the packet payloads, then per slot one
    uniform for the erasure outcome followed by any branching coins the
    policy needs for that slot.  Runs are bit-reproducible for a fixed
    seed.  ``erasures`` may supply a scripted sequence of outcome vectors,
    overriding the model (used by golden tests).
    """
    policy.check_config(config)
    state = RunState(config, track_coded=check_invariants)
    policy.reset()
    bank = state.bank
    deadline = config.deadline
    last_step: Optional[str] = None
    phase_end_sizes: dict[str, dict[str, int]] = {}
    phase_slots = state.phase_slots

    # hot-loop locals
    rng_random = state.rng.random
    cum1, cum2 = state.cum1, state.cum2
    know3, know4 = state.know[3], state.know[4]
    heard = state.heard
    tau_patterns = state.tau_patterns
    delivered3, delivered4 = state.delivered3, state.delivered4
    instrumented = trace is not None or check_invariants

    while state.remaining:
        slot = state.slot
        if deadline is not None and slot >= deadline:
            break
        step, transmitter, unit = policy.choose(state)
        if step != last_step:
            if last_step is not None:
                phase_end_sizes[last_step] = bank.sizes()
            last_step = step

        if erasures is not None:
            idx = 0
            for bit in next(erasures):
                idx = (idx << 1) | (1 if bit else 0)
            z, bits, z3, z4 = (_META1 if transmitter == 1 else _META2)[idx]
        elif transmitter == 1:
            z, bits, z3, z4 = _META1[
                min(bisect_right(cum1, rng_random()), 7)
            ]
        else:
            z, bits, z3, z4 = _META2[
                min(bisect_right(cum2, rng_random()), 3)
            ]

        # reception recording and tau classification
        uid = unit.uid
        plain = type(unit) is Packet
        if transmitter == 1:
            state.tau1 += 1
            tau_patterns[heard[uid]] += 1
        else:
            state.tau2 += 1
        if plain:
            if z3 and uid not in know3:
                know3[uid] = unit.payload
                if unit.origin == 1:
                    delivered3.add(uid)
                    state.remaining -= 1
            if z4 and uid not in know4:
                know4[uid] = unit.payload
                if unit.origin == 2:
                    delivered4.add(uid)
                    state.remaining -= 1
            if bits:
                heard[uid] |= bits
        elif state.track_coded:
            if z3:
                know3.setdefault(uid, unit.payload)
            if z4:
                know4.setdefault(uid, unit.payload)

        policy.apply(state, step, unit, z)
        phase_slots[step] = phase_slots.get(step, 0) + 1
        state.slot = slot + 1

        if instrumented:
            if trace is not None:
                uids = list(uid) if not plain else [uid]
                trace(
                    {
                        "slot": state.slot,
                        "transmitter": transmitter,
                        "step": step,
                        "packet_ids": uids,
                        "erasure_outcome": list(z),
                        "queues_after": bank.sizes(),
                    }
                )
            if check_invariants:
                state.validate()

    if last_step is not None:
        phase_end_sizes[last_step] = bank.sizes()

    total = state.slot
    assert state.tau1 + state.tau2 == total
    pat = state.tau_patterns
    counters = {
        "tau1": state.tau1,
        "tau2": state.tau2,
        "tau1_not2_not3": pat[0] + pat[4],
        "tau1_2_not3": pat[1] + pat[5],
        "tau1_3": pat[2] + pat[3] + pat[6] + pat[7],
        "tau1_2_not3_not4": pat[1],
        "tau1_2_3_not4": pat[3],
    }
    done = state.remaining == 0
    return SimResult(
        algorithm=policy.name,
        k1=config.k1,
        k2=config.k2,
        seed=config.seed,
        total_slots=total,
        phase_slots=phase_slots,
        schedule_counters=counters,
        decoded_ok={
            3: len(state.delivered3) == config.k1,
            4: len(state.delivered4) == config.k2,
        },
        deadline_met=(done if deadline is not None else None),
        delivered={3: len(state.delivered3), 4: len(state.delivered4)},
        phase_end_sizes=phase_end_sizes,
        event_counts=state.event_counts,
    )
