"""Four-phase XOR relaying policy (the simpler of the two schedulers).

Phase order, each running until its queue empties:

1. Node 1 sends the head of ``q1`` until node 2 or node 3 receives it.
   Copies that only node 4 caught are remembered in the one-slot mark
   buffer so they can skip straight into ``relay_at4`` later.
2. Node 2 resends ``relay_fresh`` packets until node 3 or node 4 has them.
3. Node 2 sends its own backlog ``q2`` until node 3 or node 4 has it.
4. Node 2 sends XORs of the heads of ``relay_at4`` and ``own_at3``; each
   reception lets that receiver cancel its known half.  Once one queue
   empties the leftovers go out uncoded to their destination.

A later phase never refills an earlier phase's queue, so the run walks the
steps monotonically.
"""

from __future__ import annotations

from .simcore import (
    CodedPacket,
    Packet,
    RunState,
    SimConfig,
    check_reachability,
    decode_at_receiver,
    xor_combine,
)


class Algorithm1Policy:
    name = "alg1"

    def __init__(self) -> None:
        self._coded_cache: tuple[tuple[int, int], CodedPacket] | None = None

    def reset(self) -> None:
        self._coded_cache = None

    def check_config(self, config: SimConfig) -> None:
        check_reachability(config.model, config.k1, config.k2)

    # -- slot decisions ---------------------------------------------------

    def choose(self, state: RunState):
        b = state.bank
        if b.q1:
            return "step1", 1, b.q1[0]
        if b.relay_fresh:
            return "step2", 2, b.relay_fresh[0]
        if b.q2:
            return "step3", 2, b.q2[0]
        return self.choose_mix("step4", state)

    def choose_mix(self, step: str, state: RunState):
        """Coded transmissions while both sides last, then uncoded cleanup."""
        b = state.bank
        if b.relay_at4 and b.own_at3:
            key = (b.relay_at4[0].uid, b.own_at3[0].uid)
            if self._coded_cache is None or self._coded_cache[0] != key:
                self._coded_cache = (key, xor_combine(b.relay_at4[0], b.own_at3[0]))
            return step, 2, self._coded_cache[1]
        if b.relay_at4:
            return step, 2, b.relay_at4[0]
        if b.own_at3:
            return step, 2, b.own_at3[0]
        raise AssertionError("policy asked to transmit with all queues empty")

    # -- feedback handling -------------------------------------------------

    def apply(self, state: RunState, step: str, unit, z) -> None:
        if step == "step1":
            self.apply_step1(state, z)
        elif step == "step2":
            self.apply_relay_fresh(state, z)
        elif step == "step3":
            self.apply_step3(state, z)
        else:
            self.apply_mix(state, unit, z)

    def apply_step1(self, state: RunState, z) -> None:
        b = state.bank
        z2, z3, z4 = z
        q = b.q1[0]
        if z3:
            # Destination reached; any mark on this packet dies with it.
            b.q1.popleft()
            if b.mark_buf is q:
                b.mark_buf = None
        elif z2:
            b.q1.popleft()
            if z4 or b.mark_buf is q:
                if b.mark_buf is q:
                    b.mark_buf = None
                b.relay_at4.append(q)
            else:
                self.route_overheard(state, q)
        elif z4:
            if b.mark_buf is None:
                b.mark_buf = q
            # a second solitary catch by node 4 changes nothing

    def route_overheard(self, state: RunState, q: Packet) -> None:
        state.bank.relay_fresh.append(q)

    def apply_relay_fresh(self, state: RunState, z) -> None:
        b = state.bank
        z3, z4 = z
        if z3:
            b.relay_fresh.popleft()
        elif z4:
            q = b.relay_fresh.popleft()
            b.relay_at4.append(q)
            state.count_event("relay_landed_at4")

    def apply_step3(self, state: RunState, z) -> None:
        b = state.bank
        z3, z4 = z
        if z4:
            b.q2.popleft()
        elif z3:
            q = b.q2.popleft()
            b.own_at3.append(q)

    def apply_mix(self, state: RunState, unit, z) -> None:
        b = state.bank
        z3, z4 = z
        if isinstance(unit, CodedPacket):
            if z3:
                q = b.relay_at4.popleft()
                rec = decode_at_receiver(unit, state.know[3])
                state.learn(3, q, rec.payload)
            if z4:
                q = b.own_at3.popleft()
                rec = decode_at_receiver(unit, state.know[4])
                state.learn(4, q, rec.payload)
            return
        # uncoded cleanup: only the destination's feedback matters
        if unit.origin == 1:
            if z3:
                b.relay_at4.popleft()
        else:
            if z4:
                b.own_at3.popleft()


def algorithm1_policy() -> Algorithm1Policy:
    return Algorithm1Policy()
