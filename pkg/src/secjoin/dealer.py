"""Trusted dealer: seeded correlated randomness for the two parties.

The dealer realizes the hybrid model: Beaver triples, daBits/edaBits for share
conversions, random-OT pads (used by the switching network and asymmetric
multiplication), plus the set-operation ideal functionalities built on top of
it in ``setops``. Everything the dealer hands a party is ledgered as hybrid
bits, never as wire traffic.
"""
from __future__ import annotations

import numpy as np

from .errors import DealerExhausted
from .ring import MASK

_U64 = np.uint64


class Dealer:
    def __init__(self, rng: np.random.Generator, transcript, triple_budget=None):
        from .session import RandPool

        self.rng = rng
        self.pool = RandPool(rng)
        self.transcript = transcript
        self.triple_budget = triple_budget

    # -- internals ----------------------------------------------------------

    def _rand(self, n: int) -> np.ndarray:
        return self.pool.u64(n)

    def _spend(self, units: int):
        if self.triple_budget is not None:
            if self.triple_budget < units:
                raise DealerExhausted(
                    f"dealer asked for {units} triples, "
                    f"{self.triple_budget} remain")
            self.triple_budget -= units

    def deliver(self, bits: int):
        """Ledger `bits` of dealer-to-party traffic."""
        self.transcript.note_hybrid(bits)

    def _split(self, values: np.ndarray, binary: bool, width: int = 64):
        r = self._rand(len(values))
        if binary:
            if width < 64:
                r &= _U64((1 << width) - 1)
            return r, values ^ r
        return r, values - r

    # -- correlations ---------------------------------------------------------

    def triples_arith(self, n: int):
        """n multiplication triples over Z_2^64; both halves of (a, b, c)."""
        self._spend(n)
        a, b = self._rand(n), self._rand(n)
        c = a * b
        a0, a1 = self._split(a, False)
        b0, b1 = self._split(b, False)
        c0, c1 = self._split(c, False)
        self.deliver(2 * 3 * 64 * n)
        return (a0, a1), (b0, b1), (c0, c1)

    def triples_bin(self, n: int, width: int):
        """n packed AND triples, `width` independent bit-triples per element."""
        self._spend(n * width)
        wmask = _U64((1 << width) - 1) if width < 64 else MASK
        a = self._rand(n) & wmask
        b = self._rand(n) & wmask
        c = a & b
        a0, a1 = self._split(a, True, width)
        b0, b1 = self._split(b, True, width)
        c0, c1 = self._split(c, True, width)
        self.deliver(2 * 3 * width * n)
        return (a0, a1), (b0, b1), (c0, c1)

    def dabits(self, n: int):
        """Random bits shared both binary (1-bit) and arithmetically."""
        r = self.pool.bits(n)
        rb0, rb1 = self._split(r, True, 1)
        ra0, ra1 = self._split(r, False)
        self.deliver(2 * (1 + 64) * n)
        return (rb0, rb1), (ra0, ra1)

    def dabits_packed(self, n: int, width: int):
        """`width` daBits per element: packed binary halves + per-bit arithmetic halves.

        Arithmetic halves come back as (width, n) arrays, bit j in row j.
        """
        r = self._rand(n) & (_U64((1 << width) - 1) if width < 64 else MASK)
        rb0, rb1 = self._split(r, True, width)
        bits = np.empty((width, n), dtype=np.uint64)
        for j in range(width):
            bits[j] = (r >> _U64(j)) & _U64(1)
        ra0 = self.pool.u64(width * n).reshape(width, n)
        ra1 = bits - ra0
        self.deliver(2 * (width + 64 * width) * n)
        return (rb0, rb1), (ra0, ra1)

    def edabits(self, n: int, width: int = 64):
        """Random ring values shared both arithmetically and binary (packed)."""
        r = self._rand(n)
        ra0, ra1 = self._split(r, False)
        rb0, rb1 = self._split(r, True)
        self.deliver(2 * 2 * width * n)
        return (ra0, ra1), (rb0, rb1)

    def random_ots(self, n: int, words: int = 1):
        """Random OT pads: receiver side (choice c, pad q_c), sender side (q0, q1).

        Each of the two transferable messages is `words` uint64s wide.
        """
        c = self.pool.bits(n)
        q0 = self.pool.u64(n * words).reshape(n, words)
        q1 = self.pool.u64(n * words).reshape(n, words)
        qc = np.where((c == 1)[:, None], q1, q0)
        self.deliver((1 + 64 * words) * n + 2 * 64 * words * n)
        return (c, qc), (q0, q1)

    def mask(self, n: int) -> np.ndarray:
        """Uniform mask vector used as the party-0 half when sharing inputs."""
        return self._rand(n)
