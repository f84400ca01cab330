"""Additive secret shares over Z_2^64 and the basic secure gates.

Values are shared either arithmetically (x = x0 + x1 mod 2^64) or binary
(x = x0 XOR x1, bits packed into one uint64 per element). A SharedVector keeps
both halves side by side; party isolation is a discipline of the protocol
code: everything that logically crosses between parties goes through the
session so the transcript stays faithful.

Gate costs: mul/AND burn one Beaver triple per element (per bit for packed
binary) and one exchange round; add/XOR are local; conversions use dealer
daBits/edaBits; eq/gt are log-width AND trees.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FlavorMismatch, SizeMismatch, WidthMismatch
from .ring import ARITH, BINARY, MASK, as_ring, width_mask
from .session import Session

_U64 = np.uint64


# ---------------------------------------------------------------------------
# scalar shares (single elements; vectors below do the real work)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Share:
    """One party's half of a shared ring element."""

    flavor: str
    width: int
    value: int
    owner: int


def share(sess: Session, x: int, flavor: str = ARITH, width: int = 64,
          owner: int = 0) -> tuple[Share, Share]:
    """Split a secret value; the party-0 half comes from the dealer's RNG."""
    vec = share_vec(sess, owner, [x], flavor, width)
    return (Share(flavor, width, int(vec.shares[0][0]), 0),
            Share(flavor, width, int(vec.shares[1][0]), 1))


def reconstruct(s0: Share, s1: Share) -> int:
    if s0.flavor != s1.flavor:
        raise FlavorMismatch(f"{s0.flavor} vs {s1.flavor}")
    if s0.width != s1.width:
        raise WidthMismatch(f"{s0.width} vs {s1.width}")
    if s0.flavor == ARITH:
        return (s0.value + s1.value) % (1 << 64)
    return (s0.value ^ s1.value) & int(width_mask(s0.width))


# ---------------------------------------------------------------------------
# shared vectors
# ---------------------------------------------------------------------------

class SharedVector:
    """One logical vector, both additive halves, uniform flavor and width."""

    __slots__ = ("flavor", "width", "shares")

    def __init__(self, flavor: str, width: int, share0: np.ndarray,
                 share1: np.ndarray):
        if len(share0) != len(share1):
            raise SizeMismatch("share halves differ in length")
        self.flavor = flavor
        self.width = width
        self.shares = (share0, share1)

    def __len__(self):
        return len(self.shares[0])

    @classmethod
    def zeros(cls, n: int, flavor: str = ARITH, width: int = 64):
        z = np.zeros(n, dtype=np.uint64)
        return cls(flavor, width, z, z.copy())

    @classmethod
    def public(cls, values, flavor: str = ARITH, width: int = 64):
        """A publicly known vector in shared form (party 0 holds it plain)."""
        v = as_ring(values) & width_mask(width)
        return cls(flavor, width, v, np.zeros(len(v), dtype=np.uint64))

    def reconstruct(self) -> np.ndarray:
        if self.flavor == ARITH:
            return self.shares[0] + self.shares[1]
        return (self.shares[0] ^ self.shares[1]) & width_mask(self.width)

    def gather(self, idx) -> "SharedVector":
        """Apply a public index map to both halves (local)."""
        idx = np.asarray(idx)
        return SharedVector(self.flavor, self.width,
                            self.shares[0][idx], self.shares[1][idx])

    def slice(self, lo, hi) -> "SharedVector":
        return SharedVector(self.flavor, self.width,
                            self.shares[0][lo:hi], self.shares[1][lo:hi])

    def copy(self) -> "SharedVector":
        return SharedVector(self.flavor, self.width,
                            self.shares[0].copy(), self.shares[1].copy())

    def append(self, other: "SharedVector") -> "SharedVector":
        if self.flavor != other.flavor:
            raise FlavorMismatch(f"{self.flavor} vs {other.flavor}")
        if self.width != other.width:
            raise WidthMismatch(f"{self.width} vs {other.width}")
        return SharedVector(self.flavor, self.width,
                            np.concatenate([self.shares[0], other.shares[0]]),
                            np.concatenate([self.shares[1], other.shares[1]]))

    def _check_like(self, other: "SharedVector"):
        if self.flavor != other.flavor:
            raise FlavorMismatch(f"{self.flavor} vs {other.flavor}")
        if self.width != other.width:
            raise WidthMismatch(f"{self.width} vs {other.width}")
        if len(self) != len(other):
            raise SizeMismatch(f"{len(self)} vs {len(other)}")


def share_vec(sess: Session, owner: int, values, flavor: str = ARITH,
              width: int = 64) -> SharedVector:
    """Share a plaintext vector held by `owner`.

    The party-0 half is a dealer-drawn mask; when party 0 owns the input it
    wires the masked vector to party 1, otherwise the dealer hands the mask
    to both sides and party 1 finishes locally.
    """
    v = as_ring(values) & width_mask(width)
    n = len(v)
    r = sess.dealer.mask(n)
    if flavor == BINARY:
        r = r & width_mask(width)
        other = v ^ r
    else:
        other = v - r
    sess.dealer.deliver(width * n)  # mask to party 0
    if owner == 0:
        if n:
            other = sess.send(0, other, width * n)
    else:
        sess.dealer.deliver(width * n)  # mask to the owner as well
    return SharedVector(flavor, width, r, other)


def open_vec(sess: Session, x: SharedVector, to: int | str = "both") -> np.ndarray:
    """Reveal a shared vector to one party or both; returns the plaintext
    as the receiving party sees it (party 0's view when revealed to both)."""
    n = len(x)
    bits = x.width * n
    if n == 0:
        return x.reconstruct()
    if to == "both":
        at0, _ = sess.exchange(x.shares[0], x.shares[1], bits, bits)
        other = at0
        own = x.shares[0]
    else:
        src = 1 - int(to)
        other = sess.send(src, x.shares[src], bits)
        own = x.shares[int(to)]
    if x.flavor == ARITH:
        return own + other
    return (own ^ other) & width_mask(x.width)


# ---------------------------------------------------------------------------
# local ring/bit operations
# ---------------------------------------------------------------------------

def add(x: SharedVector, y: SharedVector) -> SharedVector:
    x._check_like(y)
    if x.flavor == BINARY:
        return SharedVector(BINARY, x.width, x.shares[0] ^ y.shares[0],
                            x.shares[1] ^ y.shares[1])
    return SharedVector(ARITH, x.width, x.shares[0] + y.shares[0],
                        x.shares[1] + y.shares[1])


def sub(x: SharedVector, y: SharedVector) -> SharedVector:
    x._check_like(y)
    if x.flavor == BINARY:
        return add(x, y)
    return SharedVector(ARITH, x.width, x.shares[0] - y.shares[0],
                        x.shares[1] - y.shares[1])


def xor(x: SharedVector, y: SharedVector) -> SharedVector:
    if x.flavor != BINARY or y.flavor != BINARY:
        raise FlavorMismatch("xor needs binary shares")
    return add(x, y)


def not_bits(x: SharedVector) -> SharedVector:
    if x.flavor != BINARY:
        raise FlavorMismatch("not needs binary shares")
    return SharedVector(BINARY, x.width,
                        x.shares[0] ^ width_mask(x.width), x.shares[1].copy())


def xor_public(x: SharedVector, pub) -> SharedVector:
    pub = as_ring(pub) & width_mask(x.width)
    return SharedVector(BINARY, x.width, x.shares[0] ^ pub, x.shares[1].copy())


def add_public(x: SharedVector, pub) -> SharedVector:
    pub = as_ring(pub)
    return SharedVector(ARITH, x.width, x.shares[0] + pub, x.shares[1].copy())


def scale_public(x: SharedVector, pub) -> SharedVector:
    pub = as_ring(pub)
    return SharedVector(ARITH, x.width, x.shares[0] * pub, x.shares[1] * pub)


def replicate_bit(f: SharedVector, width: int) -> SharedVector:
    """Spread a 1-bit binary share across `width` bit positions (local)."""
    if f.flavor != BINARY or f.width != 1:
        raise WidthMismatch("replicate_bit needs a 1-bit binary share")
    m = width_mask(width)
    return SharedVector(BINARY, width,
                        (np.uint64(0) - (f.shares[0] & _U64(1))) & m,
                        (np.uint64(0) - (f.shares[1] & _U64(1))) & m)


# ---------------------------------------------------------------------------
# interactive gates
# ---------------------------------------------------------------------------

def mul(sess: Session, x: SharedVector, y: SharedVector) -> SharedVector:
    """Beaver multiplication: x*y for arithmetic shares, AND for binary."""
    x._check_like(y)
    n = len(x)
    if n == 0:
        return SharedVector(x.flavor, x.width, x.shares[0][:0], x.shares[1][:0])
    if x.flavor == BINARY:
        return _and_bin(sess, x, y)
    (a0, a1), (b0, b1), (c0, c1) = sess.dealer.triples_arith(n)
    d0, e0 = x.shares[0] - a0, y.shares[0] - b0
    d1, e1 = x.shares[1] - a1, y.shares[1] - b1
    bits = 2 * 64 * n
    at0, at1 = sess.exchange(np.concatenate([d0, e0]),
                             np.concatenate([d1, e1]), bits, bits)
    d_0, e_0 = d0 + at0[:n], e0 + at0[n:]   # opened (d, e) as party 0 sees them
    d_1, e_1 = d1 + at1[:n], e1 + at1[n:]
    z0 = c0 + d_0 * b0 + e_0 * a0 + d_0 * e_0
    z1 = c1 + d_1 * b1 + e_1 * a1
    return SharedVector(ARITH, 64, z0, z1)


def _and_bin(sess: Session, x: SharedVector, y: SharedVector) -> SharedVector:
    n, w = len(x), x.width
    (a0, a1), (b0, b1), (c0, c1) = sess.dealer.triples_bin(n, w)
    d0, e0 = x.shares[0] ^ a0, y.shares[0] ^ b0
    d1, e1 = x.shares[1] ^ a1, y.shares[1] ^ b1
    bits = 2 * w * n
    at0, at1 = sess.exchange(np.concatenate([d0, e0]),
                             np.concatenate([d1, e1]), bits, bits)
    d_0, e_0 = d0 ^ at0[:n], e0 ^ at0[n:]
    d_1, e_1 = d1 ^ at1[:n], e1 ^ at1[n:]
    wm = width_mask(w)
    z0 = (c0 ^ (d_0 & b0) ^ (e_0 & a0) ^ (d_0 & e_0)) & wm
    z1 = (c1 ^ (d_1 & b1) ^ (e_1 & a1)) & wm
    return SharedVector(BINARY, w, z0, z1)


def and_bits(sess: Session, x: SharedVector, y: SharedVector) -> SharedVector:
    if x.flavor != BINARY:
        raise FlavorMismatch("and_bits needs binary shares")
    return mul(sess, x, y)


def or_bits(sess: Session, x: SharedVector, y: SharedVector) -> SharedVector:
    return xor(xor(x, y), and_bits(sess, x, y))


def b2a(sess: Session, f: SharedVector) -> SharedVector:
    """One-bit binary share -> arithmetic share of the same 0/1 value."""
    if f.flavor != BINARY or f.width != 1:
        raise WidthMismatch("b2a expects 1-bit binary shares")
    n = len(f)
    if n == 0:
        return SharedVector(ARITH, 64, f.shares[0][:0], f.shares[1][:0])
    (rb0, rb1), (ra0, ra1) = sess.dealer.dabits(n)
    m0, m1 = (f.shares[0] ^ rb0) & _U64(1), (f.shares[1] ^ rb1) & _U64(1)
    at0, at1 = sess.exchange(m0, m1, n, n)
    v0, v1 = (m0 ^ at0) & _U64(1), (m1 ^ at1) & _U64(1)  # public f xor r
    sgn0 = _U64(1) - _U64(2) * v0  # 1-2v, wraps to -1 for v=1
    sgn1 = _U64(1) - _U64(2) * v1
    z0 = ra0 * sgn0 + v0
    z1 = ra1 * sgn1
    return SharedVector(ARITH, 64, z0, z1)


def b2a_wide(sess: Session, x: SharedVector) -> SharedVector:
    """Binary share of any width -> arithmetic share of the same value (B2A)."""
    if x.flavor != BINARY:
        raise FlavorMismatch("b2a_wide expects binary shares")
    n, w = len(x), x.width
    if n == 0:
        return SharedVector(ARITH, 64, x.shares[0][:0], x.shares[1][:0])
    (rb0, rb1), (ra0, ra1) = sess.dealer.dabits_packed(n, w)
    m0, m1 = x.shares[0] ^ rb0, x.shares[1] ^ rb1
    at0, at1 = sess.exchange(m0, m1, w * n, w * n)
    va, vb = (m0 ^ at0) & width_mask(w), (m1 ^ at1) & width_mask(w)
    z0 = np.zeros(n, dtype=np.uint64)
    z1 = np.zeros(n, dtype=np.uint64)
    for j in range(w):
        vj0 = (va >> _U64(j)) & _U64(1)
        vj1 = (vb >> _U64(j)) & _U64(1)
        pw = _U64(1) << _U64(j)
        z0 += pw * (ra0[j] * (_U64(1) - _U64(2) * vj0) + vj0)
        z1 += pw * (ra1[j] * (_U64(1) - _U64(2) * vj1))
    return SharedVector(ARITH, 64, z0, z1)


def a2b(sess: Session, x: SharedVector) -> SharedVector:
    """Arithmetic share -> packed 64-bit binary share (A2B)."""
    if x.flavor != ARITH:
        raise FlavorMismatch("a2b expects arithmetic shares")
    n = len(x)
    if n == 0:
        return SharedVector(BINARY, 64, x.shares[0][:0], x.shares[1][:0])
    (ra0, ra1), (rb0, rb1) = sess.dealer.edabits(n)
    m0, m1 = x.shares[0] - ra0, x.shares[1] - ra1
    at0, at1 = sess.exchange(m0, m1, 64 * n, 64 * n)
    c0, c1 = m0 + at0, m1 + at1  # public x - r per party view
    # Result = binary share of c + r: Kogge-Stone carries for a public addend,
    # generate = c AND r (local), propagate = c XOR r (local).
    g = SharedVector(BINARY, 64, c0 & rb0, c1 & rb1)
    p = SharedVector(BINARY, 64, c0 ^ rb0, rb1.copy())
    p_run = p
    for k in range(6):
        s = _U64(1 << k)
        g_shift = SharedVector(BINARY, 64, g.shares[0] << s, g.shares[1] << s)
        p_shift = SharedVector(BINARY, 64, p_run.shares[0] << s, p_run.shares[1] << s)
        g = xor(g, and_bits(sess, p_run, g_shift))
        p_run = and_bits(sess, p_run, p_shift)
    carries = SharedVector(BINARY, 64, g.shares[0] << _U64(1), g.shares[1] << _U64(1))
    return xor(p, carries)


def eq(sess: Session, x: SharedVector, y: SharedVector) -> SharedVector:
    """Equality indicator as a 1-bit binary share (log-width AND tree)."""
    if x.width != y.width:
        raise WidthMismatch(f"{x.width} vs {y.width}")
    if x.flavor == ARITH:
        x, y = a2b(sess, x), a2b(sess, y)
    t = xor(x, y)
    return _is_zero_bits(sess, t)


def _is_zero_bits(sess: Session, t: SharedVector) -> SharedVector:
    """AND-reduce NOT(bit) over the width; 1-bit result."""
    w = t.width
    # pad unused high bits of the NOT with ones so they don't break the AND
    t = SharedVector(BINARY, 64, t.shares[0] ^ MASK, t.shares[1].copy())
    s = 1
    while s < w:
        sh = _U64(s)
        t = and_bits(sess, t,
                     SharedVector(BINARY, 64, (t.shares[0] >> sh) | (MASK << _U64(64 - s)),
                                  t.shares[1] >> sh))
        s *= 2
    return SharedVector(BINARY, 1, t.shares[0] & _U64(1), t.shares[1] & _U64(1))


def gt(sess: Session, x: SharedVector, y: SharedVector) -> SharedVector:
    """Unsigned x > y as a 1-bit binary share (bitwise compare tree)."""
    if x.flavor == ARITH:
        x = a2b(sess, x)
    if y.flavor == ARITH:
        y = a2b(sess, y)
    if x.width != y.width:
        raise WidthMismatch(f"{x.width} vs {y.width}")
    w = x.width
    gt_bits = and_bits(sess, x, not_bits(y))
    eq_bits = not_bits(xor(x, y))
    s = 1
    while s < w:
        sh = _U64(s)
        gt_lo = SharedVector(BINARY, w, gt_bits.shares[0] << sh, gt_bits.shares[1] << sh)
        eq_lo = SharedVector(BINARY, w, eq_bits.shares[0] << sh, eq_bits.shares[1] << sh)
        gt_bits = xor(gt_bits, and_bits(sess, eq_bits, gt_lo))
        if 2 * s < w:
            eq_bits = and_bits(sess, eq_bits, eq_lo)
        s *= 2
    top = _U64(w - 1)
    return SharedVector(BINARY, 1, (gt_bits.shares[0] >> top) & _U64(1),
                        (gt_bits.shares[1] >> top) & _U64(1))


def mux(sess: Session, f: SharedVector, x: SharedVector, y: SharedVector) -> SharedVector:
    """f ? x : y with a 1-bit binary selector."""
    if f.flavor != BINARY or f.width != 1:
        raise WidthMismatch("mux selector must be a 1-bit binary share")
    x._check_like(y)
    if len(f) != len(x):
        raise SizeMismatch("selector length differs from data length")
    if len(x) == 0:
        return x.copy()
    if x.flavor == BINARY:
        rep = replicate_bit(f, x.width)
        return xor(y, and_bits(sess, rep, xor(x, y)))
    fa = b2a(sess, f)
    return add(y, mul(sess, fa, sub(x, y)))


def mux_arith(sess: Session, fa: SharedVector, x: SharedVector,
              y: SharedVector) -> SharedVector:
    """Mux with an already-converted arithmetic 0/1 selector."""
    return add(y, mul(sess, fa, sub(x, y)))


def asym_mul(sess: Session, f_holder: int, f_bits: np.ndarray, x_vals: np.ndarray,
             flavor: str = ARITH, width: int = 64) -> SharedVector:
    """f ? x : 0 where one party holds the bit f, the other holds x.

    Realized through the dealer as one correlated transfer per element; the
    bit holder acts as OT receiver.
    """
    n = len(f_bits)
    if len(x_vals) != n:
        raise SizeMismatch("bit vector and value vector differ in length")
    if n == 0:
        e = np.zeros(0, dtype=np.uint64)
        return SharedVector(flavor, width, e, e.copy())
    x_holder = 1 - f_holder
    f_bits = as_ring(f_bits) & _U64(1)
    x_vals = as_ring(x_vals) & width_mask(width)
    (c, qc), (q0, q1) = sess.dealer.random_ots(n)
    qc, q0, q1 = qc[:, 0], q0[:, 0], q1[:, 0]
    d = sess.send(f_holder, f_bits ^ c, n)
    r = sess.parties[x_holder].pool.u64(n) & width_mask(width)
    if flavor == BINARY:
        m0, m1 = r.copy(), x_vals ^ r
        x_share = r
    else:
        m0, m1 = (np.uint64(0) - r), x_vals - r
        x_share = r
    y0 = m0 ^ np.where(d == 1, q1, q0)
    y1 = m1 ^ np.where(d == 1, q0, q1)
    y0, y1 = np.split(sess.send(x_holder, np.concatenate([y0, y1]), 2 * 64 * n), 2)
    got = np.where(f_bits == 1, y1, y0) ^ qc
    halves = [None, None]
    halves[f_holder] = got & width_mask(width) if flavor == BINARY else got
    halves[x_holder] = x_share
    return SharedVector(flavor, width, halves[0], halves[1])


def convert(sess: Session, x: SharedVector, target: str) -> SharedVector:
    """Flavor conversion preserving the reconstructed value (B2A/b2A/A2B)."""
    if x.flavor == target:
        return x
    if target == ARITH:
        return b2a(sess, x) if x.width == 1 else b2a_wide(sess, x)
    return a2b(sess, x)
