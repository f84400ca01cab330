"""Two-party execution substrate: channel, transcript ledger, session.

The two parties run on one cooperative scheduler: protocol code is written as
a single choreography that says which party computes what, and every value
that crosses between parties is pushed through the session as a real byte
frame. The transcript keeps wire traffic and dealer (hybrid) traffic in
strictly separate ledgers; all acceptance checks read this ledger.

A "round" increments whenever the direction of dependency flips; batched
parallel messages in one flow count as one round, and a simultaneous exchange
(both directions, as in a Beaver multiplication opening) also counts as one.
"""
from __future__ import annotations

import hashlib
from collections import deque
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .errors import ProtocolDesync

_EXCHANGE = -1


@dataclass
class PhaseRecord:
    label: str
    wire_bits: tuple[int, int]
    wire_rounds: int
    hybrid_bits: int

    def shape(self) -> tuple:
        return (self.label, self.wire_bits, self.wire_rounds, self.hybrid_bits)


class Transcript:
    """Ledger of a session's communication, split into wire and hybrid parts."""

    def __init__(self):
        self.wire_bits_sent = [0, 0]
        self.wire_rounds = 0
        self.hybrid_bits = 0
        self.messages = 0
        self.phases: list[PhaseRecord] = []
        self._digest = hashlib.sha256()
        self._last_flow = None
        self._phase_stack: list[tuple[str, int, int, int, int]] = []

    # -- counters ---------------------------------------------------------

    def note_send(self, src: int, bits: int, payload: bytes):
        if self._last_flow != src:
            self.wire_rounds += 1
            self._last_flow = src
        self.wire_bits_sent[src] += bits
        self.messages += 1
        self._digest.update(b"s%d:%d:" % (src, bits))
        self._digest.update(payload)

    def note_exchange(self, bits0: int, bits1: int, pay0: bytes, pay1: bytes):
        self.wire_rounds += 1
        self._last_flow = _EXCHANGE
        self.wire_bits_sent[0] += bits0
        self.wire_bits_sent[1] += bits1
        self.messages += 2
        self._digest.update(b"x:%d:%d:" % (bits0, bits1))
        self._digest.update(pay0)
        self._digest.update(pay1)

    def note_hybrid(self, bits: int):
        self.hybrid_bits += bits

    # -- phases -----------------------------------------------------------

    def push_phase(self, label: str):
        path = label if not self._phase_stack else self._phase_stack[-1][0] + "." + label
        self._phase_stack.append(
            (path, self.wire_bits_sent[0], self.wire_bits_sent[1],
             self.wire_rounds, self.hybrid_bits)
        )

    def pop_phase(self):
        path, b0, b1, r, h = self._phase_stack.pop()
        self.phases.append(PhaseRecord(
            path,
            (self.wire_bits_sent[0] - b0, self.wire_bits_sent[1] - b1),
            self.wire_rounds - r,
            self.hybrid_bits - h,
        ))

    # -- views ------------------------------------------------------------

    @property
    def wire_bits(self) -> int:
        return sum(self.wire_bits_sent)

    def digest(self) -> str:
        return self._digest.hexdigest()

    def phase_shapes(self) -> list[tuple]:
        return [p.shape() for p in self.phases]

    def phase_labels(self, top_level: bool = True) -> list[str]:
        labels = []
        for p in self.phases:
            if top_level and "." in p.label:
                continue
            labels.append(p.label)
        return labels

    def bits_for(self, label_part: str) -> int:
        """Total wire bits over leaf phases whose path contains label_part."""
        total = 0
        for p in self.phases:
            if label_part in p.label.split("."):
                total += sum(p.wire_bits)
        return total

    def rounds_for(self, label_part: str) -> int:
        return sum(
            p.wire_rounds for p in self.phases if label_part in p.label.split(".")
        )

    def summary(self) -> str:
        return (
            f"wire_bits={self.wire_bits} (P0 {self.wire_bits_sent[0]}, "
            f"P1 {self.wire_bits_sent[1]}), wire_rounds={self.wire_rounds}, "
            f"hybrid_bits={self.hybrid_bits}"
        )


class RandPool:
    """Buffered uniform uint64 stream over one PCG64 generator.

    Batching the draws keeps per-gate randomness cheap; consumption order is
    deterministic for a fixed seed.
    """

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self._buf = np.empty(0, dtype=np.uint64)
        self._pos = 0

    def u64(self, n: int) -> np.ndarray:
        if self._pos + n > len(self._buf):
            grow = max(n, 1 << 14)
            self._buf = self.rng.integers(0, 1 << 64, grow, dtype=np.uint64)
            self._pos = 0
        out = self._buf[self._pos:self._pos + n].copy()
        self._pos += n
        return out

    def bits(self, n: int) -> np.ndarray:
        return self.u64(n) & np.uint64(1)


@dataclass
class PartyState:
    """Per-party private state: identity and an independent seeded PRNG."""

    id: int
    rng: np.random.Generator

    def __post_init__(self):
        self.pool = RandPool(self.rng)

    def draw_perm(self, n: int) -> np.ndarray:
        """Sample a uniform permutation of [n] (1-based targets)."""
        return self.rng.permutation(n).astype(np.int64) + 1


def _payload_bytes(data) -> bytes:
    if isinstance(data, np.ndarray):
        return data.tobytes()
    if isinstance(data, bytes):
        return data
    raise TypeError(f"unsupported frame payload type {type(data)!r}")


class Session:
    """One two-party protocol execution context.

    A fixed seed triple (seed0, seed1, seedD) makes every run bit-reproducible:
    the parties and the dealer own independent PRNGs and all protocol
    randomness is drawn from exactly one of them.
    """

    def __init__(self, seed0: int = 11, seed1: int = 22, seedD: int = 33,
                 triple_budget: int | None = None):
        from .dealer import Dealer

        self.seeds = (seed0, seed1, seedD)
        self.parties = (
            PartyState(0, np.random.Generator(np.random.PCG64(seed0))),
            PartyState(1, np.random.Generator(np.random.PCG64(seed1))),
        )
        self.transcript = Transcript()
        self.dealer = Dealer(np.random.Generator(np.random.PCG64(seedD)),
                             self.transcript, triple_budget)
        self._queues = (deque(), deque())  # index = sending party
        self.tamper_phase: str | None = None
        self._tampered = False

    # -- raw queue interface (desync is detectable here) -------------------

    def post(self, src: int, data, bits: int):
        payload = _payload_bytes(data)
        self.transcript.note_send(src, bits, payload)
        self._queues[src].append(data)

    def take(self, src: int):
        if not self._queues[src]:
            raise ProtocolDesync(f"party {1 - src} expected a message from "
                                 f"party {src} that was never sent")
        data = self._queues[src].popleft()
        return self._maybe_tamper(data)

    # -- choreography helpers ----------------------------------------------

    def send(self, src: int, data, bits: int):
        """One-way message; returns the payload as the receiver sees it."""
        self.post(src, data, bits)
        return self.take(src)

    def exchange(self, data0, data1, bits0: int, bits1: int):
        """Simultaneous both-direction flow; one round total.

        Returns (what P0 receives, what P1 receives).
        """
        pay0, pay1 = _payload_bytes(data0), _payload_bytes(data1)
        self.transcript.note_exchange(bits0, bits1, pay0, pay1)
        return self._maybe_tamper(data1), self._maybe_tamper(data0)

    def _maybe_tamper(self, data):
        if (self.tamper_phase is not None and not self._tampered
                and isinstance(data, np.ndarray) and data.size
                and any(self.tamper_phase in p[0].split(".")
                        for p in self.transcript._phase_stack)):
            data = data.copy()
            data.flat[0] = np.uint64(int(data.flat[0]) ^ 1)
            self._tampered = True
        return data

    @contextmanager
    def phase(self, label: str):
        self.transcript.push_phase(label)
        try:
            yield
        finally:
            self.transcript.pop_phase()

    def run_protocol(self, protocol, *args, **kwargs):
        """Run a named two-party program to completion.

        Returns (protocol outputs, transcript). Leftover queued messages mean
        one party ended while the other still owed it a receive.
        """
        out = protocol(self, *args, **kwargs)
        if self._queues[0] or self._queues[1]:
            raise ProtocolDesync("protocol ended with undelivered messages")
        return out, self.transcript
