"""Oblivious primitives over shared vectors.

Switching (OSN) over a Beneš network, random shuffle, shared-permutation
application (shared and plain-vector variants), one-bit sort-permutation
generation, bitmap stable sort, a bitonic stable sort, and the segmented
running aggregate used by the group-aggregation protocols.

Permutation conventions follow the apply-notation Y = pi . X with
y_i = x_{pi(i)} (1-based IndexMap targets). bit_sort/per_gen return the
scatter-style permutation whose inverse application stably sorts, matching
how the sorting primitives are composed downstream.
"""
from __future__ import annotations

import numpy as np

from . import sharing as sh
from .benes import build_program
from .errors import NotAPermutation, PreconditionViolated, SizeMismatch
from .ring import ARITH, BINARY, as_ring, width_mask
from .session import Session
from .sharing import SharedVector

_U64 = np.uint64

AGG_SUM = "sum"
AGG_COUNT = "count"
AGG_MAX = "max"
AGG_MIN = "min"
AGG_XOR = "xor"

AGG_IDENTITY = {AGG_SUM: 0, AGG_COUNT: 0, AGG_XOR: 0,
                AGG_MAX: 0, AGG_MIN: (1 << 64) - 1}


def _pad_pow2(n: int) -> int:
    m = 1
    while m < n:
        m *= 2
    return m


def _extend_perm(pi: np.ndarray, m: int) -> np.ndarray:
    """Extend a 1-based permutation of [n] to [m] with fixed points."""
    out = np.arange(1, m + 1, dtype=np.int64)
    out[:len(pi)] = pi
    return out


def invert_perm(pi: np.ndarray) -> np.ndarray:
    """Inverse of a 1-based permutation."""
    inv = np.empty(len(pi), dtype=np.int64)
    inv[np.asarray(pi, dtype=np.int64) - 1] = np.arange(1, len(pi) + 1)
    return inv


class PlainColumn:
    """A sender-held plaintext column fed into an OSN."""

    __slots__ = ("values", "flavor", "width")

    def __init__(self, values, flavor=ARITH, width=64):
        self.values = as_ring(values) & width_mask(width)
        self.flavor = flavor
        self.width = width

    def __len__(self):
        return len(self.values)


# ---------------------------------------------------------------------------
# oblivious switching network
# ---------------------------------------------------------------------------

def _osn_network(sess: Session, receiver: int, pi: np.ndarray,
                 cols: list[PlainColumn]) -> list[SharedVector]:
    """Core OSN: the receiver knows pi, the sender holds plain columns.

    The sender masks every network wire; one OT per switch carries the
    per-column translation pair matching the receiver's control bit. The
    receiver evaluates the masked network locally and ends holding y + mask,
    the sender keeps the negated final masks as its share.
    """
    n = len(pi)
    sender = 1 - receiver
    for col in cols:
        if len(col) != n:
            raise SizeMismatch(f"column length {len(col)} != |pi| = {n}")
    if n == 0:
        z = np.zeros(0, np.uint64)
        return [SharedVector(c.flavor, c.width, z, z.copy()) for c in cols]

    m = _pad_pow2(n)
    prog = build_program(_extend_perm(np.asarray(pi, dtype=np.int64), m) - 1)
    s_count = prog.num_switches
    ctrl = prog.controls()
    spool = sess.parties[sender].pool
    ncols = len(cols)

    data = []
    for col in cols:
        d = np.zeros(m, dtype=np.uint64)
        d[:n] = col.values
        data.append(d)
    init = [spool.u64(m) for _ in cols]
    cur = [mk.copy() for mk in init]

    # Translations for both switch settings, all layers precomputed.
    t_straight = np.zeros((s_count, 2 * ncols), dtype=np.uint64)
    t_cross = np.zeros((s_count, 2 * ncols), dtype=np.uint64)
    pos = 0
    for a_idx, b_idx, _ in prog.layers:
        k = len(a_idx)
        if k == 0:
            continue
        for ci, col in enumerate(cols):
            fresh_a = spool.u64(k)
            fresh_b = spool.u64(k)
            ma, mb = cur[ci][a_idx], cur[ci][b_idx]
            if col.flavor == BINARY:
                t_straight[pos:pos + k, 2 * ci] = fresh_a ^ ma
                t_straight[pos:pos + k, 2 * ci + 1] = fresh_b ^ mb
                t_cross[pos:pos + k, 2 * ci] = fresh_a ^ mb
                t_cross[pos:pos + k, 2 * ci + 1] = fresh_b ^ ma
            else:
                t_straight[pos:pos + k, 2 * ci] = fresh_a - ma
                t_straight[pos:pos + k, 2 * ci + 1] = fresh_b - mb
                t_cross[pos:pos + k, 2 * ci] = fresh_a - mb
                t_cross[pos:pos + k, 2 * ci + 1] = fresh_b - ma
            cur[ci][a_idx] = fresh_a
            cur[ci][b_idx] = fresh_b
        pos += k

    width_sum = sum(col.width for col in cols)
    if s_count:
        (c_bits, qc), (q0, q1) = sess.dealer.random_ots(s_count, 2 * ncols)
        d = sess.send(receiver, ctrl ^ c_bits, s_count)
        y0 = t_straight ^ np.where((d == 1)[:, None], q1, q0)
        y1 = t_cross ^ np.where((d == 1)[:, None], q0, q1)
        y0 = sess.send(sender, y0, 2 * width_sum * s_count)
        y1 = sess.send(sender, y1, 2 * width_sum * s_count)
        t_sel = (np.where((ctrl == 1)[:, None], y1, y0) ^ qc)
    masked = []
    for col, dcol, mk in zip(cols, data, init):
        v = (dcol ^ mk) if col.flavor == BINARY else (dcol + mk)
        masked.append(sess.send(sender, v, col.width * m))

    # Receiver-side evaluation, layer by layer.
    pos = 0
    for a_idx, b_idx, _ in prog.layers:
        k = len(a_idx)
        if k == 0:
            continue
        lc = ctrl[pos:pos + k] == 1
        for ci, col in enumerate(cols):
            v = masked[ci]
            va, vb = v[a_idx], v[b_idx]
            src_a = np.where(lc, vb, va)
            src_b = np.where(lc, va, vb)
            ta = t_sel[pos:pos + k, 2 * ci]
            tb = t_sel[pos:pos + k, 2 * ci + 1]
            if col.flavor == BINARY:
                v[a_idx] = src_a ^ ta
                v[b_idx] = src_b ^ tb
            else:
                v[a_idx] = src_a + ta
                v[b_idx] = src_b + tb
        pos += k

    out = []
    for col, v, mk in zip(cols, masked, cur):
        halves = [None, None]
        if col.flavor == BINARY:
            wm = width_mask(col.width)
            halves[receiver] = v[:n] & wm
            halves[sender] = mk[:n] & wm
        else:
            halves[receiver] = v[:n]
            halves[sender] = np.uint64(0) - mk[:n]
        out.append(SharedVector(col.flavor, col.width, halves[0], halves[1]))
    return out


def osn_plain(sess: Session, receiver: int, pi: np.ndarray,
              cols: list[PlainColumn]) -> list[SharedVector]:
    """y_i = x_{pi(i)}: permutation at the receiver, plain vectors at the sender."""
    return _osn_network(sess, receiver, pi, cols)


def osn_shared(sess: Session, receiver: int, pi: np.ndarray,
               cols: list[SharedVector | PlainColumn]) -> list[SharedVector]:
    """OSN over shared (or sender-plain) columns under the receiver's pi.

    Shared columns: the sender feeds its half through the plain network and
    the receiver adds its own permuted half locally.
    """
    sender = 1 - receiver
    n = len(pi)
    plain_cols = []
    for col in cols:
        if isinstance(col, PlainColumn):
            plain_cols.append(col)
        else:
            plain_cols.append(PlainColumn(col.shares[sender], col.flavor, col.width))
    outs = _osn_network(sess, receiver, pi, plain_cols)
    gather = np.asarray(pi, dtype=np.int64) - 1
    for col, out in zip(cols, outs):
        if isinstance(col, PlainColumn):
            continue
        own = col.shares[receiver][gather]
        rsh = out.shares[receiver]
        if col.flavor == BINARY:
            out.shares[receiver][:] = rsh ^ own
        else:
            out.shares[receiver][:] = rsh + own
    return outs


# ---------------------------------------------------------------------------
# shuffle and shared permutations
# ---------------------------------------------------------------------------

def shuffle(sess: Session, cols: list[SharedVector]) -> list[SharedVector]:
    """Co-shuffle all columns under one hidden random permutation."""
    out, _ = _shuffle_keep(sess, cols)
    return out


def _shuffle_keep(sess: Session, cols):
    n = len(cols[0]) if cols else 0
    for col in cols:
        if len(col) != n:
            raise SizeMismatch("shuffle columns differ in length")
    phi_a = sess.parties[0].draw_perm(n)
    phi_b = sess.parties[1].draw_perm(n)
    step1 = osn_shared(sess, 0, phi_a, cols)
    step2 = osn_shared(sess, 1, phi_b, step1)
    return step2, (phi_a, phi_b)


def _unshuffle(sess: Session, cols, perms):
    phi_a, phi_b = perms
    step1 = osn_shared(sess, 1, invert_perm(phi_b), cols)
    return osn_shared(sess, 0, invert_perm(phi_a), step1)


def _open_perm(sess: Session, sv: SharedVector, to, debug: bool) -> np.ndarray:
    vals = sh.open_vec(sess, sv, to)
    out = vals.astype(np.int64)
    if debug and sorted(out.tolist()) != list(range(1, len(out) + 1)):
        raise NotAPermutation(f"opened vector is not a permutation of [{len(out)}]")
    return out


def invp_shared(sess: Session, pi: SharedVector, cols: list[SharedVector],
                debug: bool = False) -> list[SharedVector]:
    """Apply pi^-1 to shared columns: shuffle (pi, X) jointly, open the
    shuffled permutation, finish locally."""
    shuffled, _ = _shuffle_keep(sess, [pi] + list(cols))
    sigma = _open_perm(sess, shuffled[0], "both", debug)
    gather = invert_perm(sigma) - 1
    return [c.gather(gather) for c in shuffled[1:]]


def perm_shared(sess: Session, pi: SharedVector, cols: list[SharedVector],
                debug: bool = False) -> list[SharedVector]:
    """Apply pi to shared columns (dual of invp_shared).

    Shuffle pi alone, open sigma = pi . phi, gather by sigma, then undo the
    hidden phi by running the switching passes backwards.
    """
    shuffled, perms = _shuffle_keep(sess, [pi])
    sigma = _open_perm(sess, shuffled[0], "both", debug)
    gathered = [c.gather(sigma - 1) for c in cols]
    return _unshuffle(sess, gathered, perms)


def perm_plain(sess: Session, pi: SharedVector, sender: int,
               cols: list[PlainColumn]) -> list[SharedVector]:
    """Apply a shared permutation to sender-held plain vectors (2 OSN passes)."""
    receiver = 1 - sender
    n = len(pi)
    sigma = sess.parties[receiver].draw_perm(n)
    rho_sv = osn_shared(sess, receiver, sigma, [pi])[0]
    rho = _open_perm(sess, rho_sv, sender, False)
    moved = [PlainColumn(c.values[rho - 1], c.flavor, c.width) for c in cols]
    return osn_plain(sess, receiver, invert_perm(sigma), moved)


def invp_plain(sess: Session, pi: SharedVector, sender: int,
               cols: list[PlainColumn]) -> list[SharedVector]:
    """Apply the inverse of a shared permutation to sender-held plain vectors."""
    receiver = 1 - sender
    n = len(pi)
    sigma = sess.parties[sender].draw_perm(n)
    rho_sv = osn_shared(sess, sender, sigma, [pi])[0]
    rho = _open_perm(sess, rho_sv, receiver, False)
    moved = [PlainColumn(c.values[sigma - 1], c.flavor, c.width) for c in cols]
    return osn_plain(sess, receiver, invert_perm(rho), moved)


# ---------------------------------------------------------------------------
# sort-permutation generation
# ---------------------------------------------------------------------------

def bit_sort(sess: Session, bvecs: list[SharedVector],
             debug: bool = False) -> SharedVector:
    """Stable sort permutation for a one-hot bitmap (at most one set bit per row).

    Rows with no set bit rank first, then buckets 1..d in ascending order;
    original order is kept inside every bucket. Output is an arithmetic shared
    permutation pi: row i belongs at position pi(i) in the sorted order.
    """
    n = len(bvecs[0])
    for b in bvecs:
        if b.width != 1 or b.flavor != BINARY:
            raise PreconditionViolated("bit_sort expects 1-bit binary vectors")
        if len(b) != n:
            raise SizeMismatch("bitmap vectors differ in length")
    if debug:
        total = sum(b.reconstruct().astype(np.int64) for b in bvecs)
        if np.any(total > 1):
            raise PreconditionViolated("some row has more than one set bit")
    comp = bvecs[0]
    for b in bvecs[1:]:
        comp = sh.xor(comp, b)
    comp = sh.not_bits(comp)
    ordered = [comp] + list(bvecs)
    flat = ordered[0]
    for b in ordered[1:]:
        flat = flat.append(b)
    flat_a = sh.b2a(sess, flat)
    counts0 = np.cumsum(flat_a.shares[0])
    counts1 = np.cumsum(flat_a.shares[1])
    ranks = SharedVector(ARITH, 64, counts0, counts1)
    prod = sh.mul(sess, flat_a, ranks)
    v0 = prod.shares[0].reshape(len(ordered), n).sum(axis=0, dtype=np.uint64)
    v1 = prod.shares[1].reshape(len(ordered), n).sum(axis=0, dtype=np.uint64)
    return SharedVector(ARITH, 64, v0, v1)


def per_gen(sess: Session, v: SharedVector) -> SharedVector:
    """Stable-sort permutation of a one-bit vector (zeros first)."""
    return bit_sort(sess, [v])


# ---------------------------------------------------------------------------
# stable sort (bitonic network)
# ---------------------------------------------------------------------------

def _shift_rows(sv: SharedVector, idx: np.ndarray) -> SharedVector:
    return sv.gather(idx)


def _multi_limb_gt(sess: Session, a_limbs, b_limbs) -> SharedVector:
    """Strict greater-than over most-significant-first limb lists."""
    gt_acc, eq_acc = None, None
    for a, b in zip(a_limbs, b_limbs):
        if a.width == 1:
            g = sh.and_bits(sess, a, sh.not_bits(b))
            e = sh.not_bits(sh.xor(a, b))
        else:
            g = sh.gt(sess, a, b)
            e = sh.eq(sess, a, b)
        if gt_acc is None:
            gt_acc, eq_acc = g, e
        else:
            gt_acc = sh.xor(gt_acc, sh.and_bits(sess, eq_acc, g))
            eq_acc = sh.and_bits(sess, eq_acc, e)
    return gt_acc


def stable_sort(sess: Session, key_cols: list[SharedVector],
                carry_cols: list[SharedVector] | None = None):
    """Ascending stable sort of binary-shared keys via a bitonic network.

    Ties keep input order: the row index is appended as the least significant
    key limb, which also makes every comparator key distinct. Returns
    (pi, sorted key columns, sorted carry columns) where pi is the gather
    permutation (sorted_i = input_{pi(i)}) as a binary shared vector.
    """
    carry_cols = carry_cols or []
    n = len(key_cols[0])
    if n == 0:
        empty = SharedVector(BINARY, 64, np.zeros(0, np.uint64), np.zeros(0, np.uint64))
        return empty, [k.copy() for k in key_cols], [c.copy() for c in carry_cols]
    m = _pad_pow2(n)

    def pad(sv: SharedVector, fill: int) -> SharedVector:
        if m == n:
            return sv.copy()
        extra = np.full(m - n, fill, dtype=np.uint64) & width_mask(sv.width)
        z = np.zeros(m - n, dtype=np.uint64)
        return SharedVector(sv.flavor, sv.width,
                            np.concatenate([sv.shares[0], extra]),
                            np.concatenate([sv.shares[1], z]))

    keys = [pad(k, (1 << k.width) - 1 if k.width < 64 else (1 << 64) - 1)
            for k in key_cols]
    idx = SharedVector(BINARY, 64,
                       np.arange(1, m + 1, dtype=np.uint64),
                       np.zeros(m, dtype=np.uint64))
    cols = keys + [idx] + [pad(c, 0) for c in carry_cols]
    nk = len(keys)

    k = 2
    while k <= m:
        j = k // 2
        while j >= 1:
            left, right, desc = [], [], []
            for i in range(m):
                partner = i ^ j
                if partner > i:
                    left.append(i)
                    right.append(partner)
                    desc.append(1 if (i & k) else 0)
            left = np.array(left)
            right = np.array(right)
            desc = np.array(desc, dtype=np.uint64)
            a_key = [c.gather(left) for c in cols[:nk + 1]]
            b_key = [c.gather(right) for c in cols[:nk + 1]]
            swap = _multi_limb_gt(sess, a_key, b_key)
            swap = sh.xor_public(swap, desc)
            for ci, col in enumerate(cols):
                va, vb = col.gather(left), col.gather(right)
                if col.flavor == BINARY:
                    new_a = sh.mux(sess, swap, vb, va)
                    delta0 = new_a.shares[0] ^ va.shares[0] ^ vb.shares[0]
                    delta1 = new_a.shares[1] ^ va.shares[1] ^ vb.shares[1]
                    col.shares[0][left] = new_a.shares[0]
                    col.shares[1][left] = new_a.shares[1]
                    col.shares[0][right] = delta0
                    col.shares[1][right] = delta1
                else:
                    new_a = sh.mux(sess, swap, vb, va)
                    col.shares[0][left] = new_a.shares[0]
                    col.shares[1][left] = new_a.shares[1]
                    col.shares[0][right] = (va.shares[0] + vb.shares[0]) - new_a.shares[0]
                    col.shares[1][right] = (va.shares[1] + vb.shares[1]) - new_a.shares[1]
            j //= 2
        k *= 2

    sorted_keys = [c.slice(0, n) for c in cols[:nk]]
    pi = cols[nk].slice(0, n)
    sorted_carries = [c.slice(0, n) for c in cols[nk + 1:]]
    return pi, sorted_keys, sorted_carries


# ---------------------------------------------------------------------------
# oblivious traversal (segmented running aggregate)
# ---------------------------------------------------------------------------

def adjacent_same_flags(sess: Session, limbs: list[SharedVector],
                        plain_flags: np.ndarray | None = None,
                        plain_holder: int = 1) -> SharedVector:
    """1-bit flags c with c_i = 1 iff row i has the same key as row i-1.

    `plain_flags`, when given, is one party's locally computed same-key
    indicator that gets shared and ANDed in (used when part of the key is
    plaintext on one side).
    """
    n = len(limbs[0]) if limbs else len(plain_flags)
    acc = None
    for limb in limbs:
        prev = _shift_rows(limb, np.maximum(np.arange(n) - 1, 0))
        if limb.width == 1:
            same = sh.not_bits(sh.xor(limb, prev))
        else:
            same = sh.eq(sess, limb, prev)
        acc = same if acc is None else sh.and_bits(sess, acc, same)
    if plain_flags is not None:
        shared = sh.share_vec(sess, plain_holder, plain_flags, BINARY, 1)
        acc = shared if acc is None else sh.and_bits(sess, acc, shared)
    if acc is None:
        raise SizeMismatch("adjacent_same_flags needs at least one key source")
    # first row starts its own group
    first = np.zeros(n, dtype=np.uint64)
    first[0] = 1
    mask0 = acc.shares[0] & ~first if n else acc.shares[0]
    return SharedVector(BINARY, 1, mask0, acc.shares[1] & ~first)


def _agg_combine(sess: Session, agg: str, prev: SharedVector, cur: SharedVector):
    if agg in (AGG_SUM, AGG_COUNT):
        return sh.add(prev, cur)
    if agg == AGG_XOR:
        return sh.xor(prev, cur)
    if agg == AGG_MAX:
        return sh.mux(sess, sh.gt(sess, prev, cur), prev, cur)
    if agg == AGG_MIN:
        return sh.mux(sess, sh.gt(sess, prev, cur), cur, prev)
    raise ValueError(f"unknown aggregate {agg!r}")


def trav_flags(sess: Session, flags: SharedVector, values: SharedVector,
               agg: str, validity: SharedVector | None = None):
    """Segmented running aggregate with precomputed same-group flags.

    Returns (aggregated values, aggregated validity) where validity is OR-ed
    along each run when supplied (used for the null-absorbing encoding).
    """
    n = len(values)
    if len(flags) != n:
        raise SizeMismatch("flags and values differ in length")
    if n == 0:
        return values.copy(), validity
    run = flags
    vals = values
    s = 1
    while s < n:
        shift_idx = np.maximum(np.arange(n) - s, 0)
        prev_vals = _shift_rows(vals, shift_idx)
        combined = _agg_combine(sess, agg, prev_vals, vals)
        if vals.flavor == ARITH:
            run_a = sh.b2a(sess, run)
            vals = sh.mux_arith(sess, run_a, combined, vals)
        else:
            vals = sh.mux(sess, run, combined, vals)
        if validity is not None:
            prev_t = _shift_rows(validity, shift_idx)
            both = sh.or_bits(sess, validity, prev_t)
            validity = sh.mux(sess, run, both, validity)
        prev_run = _shift_rows(run, shift_idx)
        zero_head = np.ones(n, dtype=np.uint64)
        zero_head[:s] = 0
        prev_run = SharedVector(BINARY, 1, prev_run.shares[0] * zero_head,
                                prev_run.shares[1] * zero_head)
        run = sh.and_bits(sess, run, prev_run)
        s *= 2
    return vals, validity


def trav(sess: Session, key_limbs: list[SharedVector], values: SharedVector,
         agg: str) -> SharedVector:
    """y_i = agg over the maximal run of equal adjacent keys ending at i."""
    flags = adjacent_same_flags(sess, key_limbs)
    out, _ = trav_flags(sess, flags, values, agg)
    return out
