"""Eight-phase policy with probabilistic relaying controls g, s, u.

Extends the four-phase scheduler: overheard primary packets that neither
receiver caught are split three ways when they leave ``q1`` -- a g-portion
for node 1 to retransmit itself (``g_relay``), an s-portion for node 2 to
send XOR-precoded against its own traffic (``s_relay``), the rest handled
as before.  Precoded pairs caught only by node 4 park in the coded queues
until node 1 retransmits their primary constituent ("key"); pairs whose
primary half already reached node 3 are thinned per-packet with
probability 1-u back to plain node-2 traffic, the rest are keyed out by
node 1.

Phase order per slot (first nonempty wins):
q1, g_relay (node 1), relay_fresh, q2, s_relay+own_at3 coded (node 2),
key_open (node 1), key_half after one-shot u-thinning (node 1), then the
final XOR/cleanup stage.

If ``s_relay`` outlives ``own_at3`` the leftover packets are demoted to
ordinary ``relay_fresh`` handling; inside the intended operating envelope
this happens for an asymptotically vanishing fraction of packets.
"""

from __future__ import annotations

from dataclasses import dataclass

from .alg1 import Algorithm1Policy
from .simcore import (
    CodedPacket,
    Packet,
    RunState,
    SimConfig,
    check_reachability,
    decode_at_receiver,
    xor_combine,
)


@dataclass(frozen=True, slots=True)
class MixParams:
    """Relaying controls: probabilities g, s (g + s <= 1) and u in [0, 1]."""

    g: float = 0.0
    s: float = 0.0
    u: float = 0.0

    def __post_init__(self) -> None:
        if self.g < 0 or self.s < 0 or not 0.0 <= self.u <= 1.0:
            raise ValueError("need g >= 0, s >= 0, 0 <= u <= 1")
        if self.g + self.s > 1.0 + 1e-12:
            raise ValueError(f"g + s = {self.g + self.s} exceeds 1")


class Algorithm2Policy(Algorithm1Policy):
    name = "alg2"

    def __init__(self, params: MixParams) -> None:
        super().__init__()
        self.params = params
        self._thinned = False

    def reset(self) -> None:
        super().reset()
        self._thinned = False

    def check_config(self, config: SimConfig) -> None:
        p = self.params
        check_reachability(
            config.model,
            config.k1,
            config.k2,
            needs_node1_relay=(p.g > 0 or p.s > 0),
            needs_node1_key=(p.s > 0 and p.u > 0),
        )

    def choose(self, state: RunState):
        b = state.bank
        if b.q1:
            return "step1", 1, b.q1[0]
        if b.g_relay:
            return "step2", 1, b.g_relay[0]
        if b.relay_fresh:
            return "step3", 2, b.relay_fresh[0]
        if b.q2:
            return "step4", 2, b.q2[0]
        if b.s_relay:
            if b.own_at3:
                key = (b.s_relay[0].uid, b.own_at3[0].uid)
                if self._coded_cache is None or self._coded_cache[0] != key:
                    self._coded_cache = (key, xor_combine(b.s_relay[0], b.own_at3[0]))
                return "step5", 2, self._coded_cache[1]
            # precode partners ran out: treat leftovers as plain relays
            state.count_event("s_demoted", len(b.s_relay))
            b.relay_fresh.extend(b.s_relay)
            b.s_relay.clear()
            return "step3", 2, b.relay_fresh[0]
        if b.key_open:
            return "step6", 1, b.key_open[0]
        if not self._thinned:
            self._thin_key_half(state)
        if b.key_half:
            return "step7", 1, b.key_half[0]
        return self.choose_mix("step8", state)

    def _thin_key_half(self, state: RunState) -> None:
        """One-shot per-packet draw: keep each pair for node-1 keying with
        probability u, else dissolve it back into plain node-2 traffic."""
        b = state.bank
        u = self.params.u
        kept_keys, kept_coded = [], []
        for key, coded in zip(b.key_half, b.coded_half):
            if state.rng.random() < u:
                kept_keys.append(key)
                kept_coded.append(coded)
            else:
                (partner,) = [p for p in coded.constituents if p.origin == 2]
                b.own_at3.append(partner)
                state.count_event("pair_dissolved")
        b.key_half.clear()
        b.key_half.extend(kept_keys)
        b.coded_half.clear()
        b.coded_half.extend(kept_coded)
        self._thinned = True

    def route_overheard(self, state: RunState, q: Packet) -> None:
        g, s = self.params.g, self.params.s
        b = state.bank
        if g + s <= 0.0:
            b.relay_fresh.append(q)
            return
        r = state.rng.random()
        if r < g:
            b.g_relay.append(q)
        elif r < g + s:
            b.s_relay.append(q)
        else:
            b.relay_fresh.append(q)

    def apply(self, state: RunState, step: str, unit, z) -> None:
        if step == "step1":
            self.apply_step1(state, z)
        elif step == "step2":
            self.apply_g_relay(state, z)
        elif step == "step3":
            self.apply_relay_fresh(state, z)
        elif step == "step4":
            self.apply_step3(state, z)
        elif step == "step5":
            self.apply_precoded(state, unit, z)
        elif step == "step6":
            self.apply_key_open(state, z)
        elif step == "step7":
            self.apply_key_half(state, z)
        else:
            self.apply_mix(state, unit, z)

    def apply_g_relay(self, state: RunState, z) -> None:
        b = state.bank
        _, z3, z4 = z
        if z3:
            b.g_relay.popleft()
        elif z4:
            q = b.g_relay.popleft()
            b.relay_at4.append(q)
            state.count_event("relay_landed_at4")

    def apply_precoded(self, state: RunState, unit: CodedPacket, z) -> None:
        b = state.bank
        z3, z4 = z
        if not (z3 or z4):
            return
        s_pkt = b.s_relay.popleft()
        if z3:
            rec = decode_at_receiver(unit, state.know[3])
            state.learn(3, s_pkt, rec.payload)
        if z4 and not z3:
            b.own_at3.popleft()
            b.coded_open.append(unit)
            b.key_open.append(s_pkt)
        elif z3 and z4:
            b.own_at3.popleft()
            b.coded_half.append(unit)
            b.key_half.append(s_pkt)
        # z3 only: the partner packet stays queued for node 4

    def apply_key_open(self, state: RunState, z) -> None:
        b = state.bank
        _, z3, z4 = z
        if not (z3 or z4):
            return
        key = b.key_open.popleft()
        coded = b.coded_open.popleft()
        if z4:
            (partner,) = [p for p in coded.constituents if p.origin == 2]
            rec = decode_at_receiver(coded, state.know[4])
            state.learn(4, partner, rec.payload)
            state.count_event("keyed_recovery_at4")
            if not z3:
                b.relay_at4.append(key)  # node 4 now holds the key, node 3 does not
        else:  # z3 only: key delivered, pair waits for node 4
            b.key_half.append(key)
            b.coded_half.append(coded)

    def apply_key_half(self, state: RunState, z) -> None:
        b = state.bank
        _, _, z4 = z
        if z4:
            b.key_half.popleft()
            coded = b.coded_half.popleft()
            (partner,) = [p for p in coded.constituents if p.origin == 2]
            rec = decode_at_receiver(coded, state.know[4])
            state.learn(4, partner, rec.payload)
            state.count_event("keyed_recovery_at4")


def algorithm2_policy(params: MixParams) -> Algorithm2Policy:
    return Algorithm2Policy(params)
