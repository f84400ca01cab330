"""Group-aggregation protocols over a materialized join view.

Five interchangeable protocols (sorting baseline, optimized sorting, the
bitmap-assisted sort, the mixed protocol and the pure-bitmap protocol) plus
the one-side shortcut. All reveal the canonicalized result table to party 1
and must agree exactly with the plaintext reference evaluation.

Null handling: masked rows carry a validity bit; 0 stands in for the dropped
value and canonicalization removes invalid rows. Inside running aggregates
the null replacement is the aggregate's identity (0 for sum/count/xor/max,
2^64-1 for min), so min callers must avoid the reserved extreme.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oblivious as ob
from . import sharing as sh
from .errors import DomainTooLarge, SizeMismatch
from .oblivious import AGG_IDENTITY, PlainColumn
from .ring import ARITH, BINARY
from .session import Session
from .sharing import SharedVector
from .views import shared_e

_U64 = np.uint64
_MOD = 1 << 64

BITMAP_SORT_CAP = 1 << 12
BITMAP_PAIR_CAP = 1 << 10


@dataclass
class JgaQuery:
    """One join-group-aggregate query over a view.

    aggs entries are (side, column, fn); count ignores the column (an
    implicit all-ones vector is aggregated).
    """

    group0: str | None
    group1: str | None
    aggs: list[tuple[int, str | None, str]]
    protocol: str = "auto"
    dom0: list[int] | None = None
    dom1: list[int] | None = None

    def one_side(self) -> bool:
        return (self.group0 is None) != (self.group1 is None)

    def agg_labels(self) -> list[str]:
        return [f"{fn}_{col}" if col else fn for _, col, fn in self.aggs]


@dataclass
class GroupResult:
    rows: list[tuple]
    canonical: bool = True

    def to_csv(self, agg_labels: list[str]) -> str:
        header = ["g0", "g1"] + agg_labels
        lines = [",".join(header)]
        for row in self.rows:
            lines.append(",".join("" if v is None else str(v) for v in row))
        return "\n".join(lines) + "\n"


def select_protocol(n: int, d0: int, d1: int, aggs, one_side: bool = False) -> str:
    """The four-rule decision list from the evaluation guidelines."""
    if one_side:
        return "oneside"
    sum_like = all(fn in ("sum", "count") for _, _, fn in aggs)
    if d0 < 2 ** 3 and d1 < 2 ** 3 and sum_like:
        return "bitmap"
    if min(d0, d1) < 2 ** 7 and sum_like:
        return "mix"
    if min(d0, d1) < 2 ** 12:
        return "bsorting"
    return "osorting"


def _value_flavor(fn: str) -> str:
    return ARITH if fn in ("sum", "count") else BINARY


# ---------------------------------------------------------------------------
# view access shim (PK-PK: P0 columns plaintext; PK-FK: P0 columns shared)
# ---------------------------------------------------------------------------

class _Table:
    def __init__(self, view0, view1):
        self.pkfk = view0.kind == "pkfk"
        self.v0, self.v1 = view0, view1
        if self.pkfk:
            self.n = view0.n
            self.j1 = view1.j1
        else:
            self.n = view0.n_e
            self.j1 = view1.j
        self.e = shared_e(view0, view1)

    def p1_col(self, col: str) -> np.ndarray:
        return self.j1[col]

    def p0_plain(self, col: str) -> np.ndarray:
        assert not self.pkfk
        return self.v0.j[col]

    def p0_shared(self, col: str) -> SharedVector:
        assert self.pkfk
        return SharedVector(ARITH, 64, self.v0.j0_half[col].copy(),
                            self.v1.j0_half[col].copy())


def _sorted_domain(dom, plain_col=None) -> list[int]:
    if dom is not None:
        return sorted(int(v) for v in set(dom))
    if plain_col is None:
        raise DomainTooLarge("a public domain is required for this protocol")
    return sorted(int(v) for v in np.unique(plain_col))


def _arith_to_bit(sess: Session, sv: SharedVector) -> SharedVector:
    """0/1 arithmetic share -> 1-bit binary share."""
    wide = sh.a2b(sess, sv)
    return SharedVector(BINARY, 1, wide.shares[0] & _U64(1),
                        wide.shares[1] & _U64(1))


def _tile(sv: SharedVector, reps: int) -> SharedVector:
    return SharedVector(sv.flavor, sv.width, np.tile(sv.shares[0], reps),
                        np.tile(sv.shares[1], reps))


def _concat(svs: list[SharedVector]) -> SharedVector:
    out = svs[0]
    for s in svs[1:]:
        out = out.append(s)
    return out


def _local_sort_perm(col: np.ndarray) -> np.ndarray:
    """Stable ascending argsort as a 1-based gather permutation."""
    return np.argsort(col, kind="stable").astype(np.int64) + 1


def _empty_result() -> GroupResult:
    return GroupResult([])


def _convert_values(sess, q, values):
    for i, (_side, _col, fn) in enumerate(q.aggs):
        want = _value_flavor(fn)
        if values[i].flavor != want:
            values[i] = sh.b2a_wide(sess, values[i]) if want == ARITH \
                else sh.a2b(sess, values[i])
    return values


def _canon(rows: list[tuple]) -> list[tuple]:
    rows.sort(key=lambda r: tuple(v for v in r[:2] if v is not None))
    return rows


# ---------------------------------------------------------------------------
# shared tail: valid flag, aggregate, mask, shuffle, reveal, canonicalize
# ---------------------------------------------------------------------------

def _mask_bits(sess, f, col):
    return sh.and_bits(sess, sh.replicate_bit(f, col.width), col)


def _grouped_tail(sess: Session, q: JgaQuery, e_s: SharedVector,
                  g0_s: SharedVector | None, g1_s: SharedVector | None,
                  values: list[SharedVector]) -> GroupResult:
    """Common tail once rows sit in (e, g0, g1) lexicographic order.

    For all-sum/count queries the running aggregate is replaced by local
    suffix sums on the first-of-group rows; party 1 finishes by subtracting
    adjacent revealed rows.
    """
    n = len(e_s)
    suffix = all(fn in ("sum", "count") for _, _, fn in q.aggs)
    limbs = [e_s] + [g for g in (g0_s, g1_s) if g is not None]
    with sess.phase("flag"):
        c = ob.adjacent_same_flags(sess, limbs)
        if suffix:
            f = sh.and_bits(sess, e_s, sh.not_bits(c))  # first of its group
        else:
            nxt = np.minimum(np.arange(1, n + 1), n - 1)
            c_next = c.gather(nxt)
            tail_fix = np.zeros(n, dtype=np.uint64)
            tail_fix[n - 1] = 1  # last row always ends its group
            c_next = SharedVector(BINARY, 1, c_next.shares[0] & ~tail_fix,
                                  c_next.shares[1] & ~tail_fix)
            f = sh.and_bits(sess, e_s, sh.not_bits(c_next))
    with sess.phase("aggregate"):
        results = []
        for (_side, _col, fn), v in zip(q.aggs, values):
            if suffix:
                r0 = np.cumsum(v.shares[0][::-1])[::-1].copy()
                r1 = np.cumsum(v.shares[1][::-1])[::-1].copy()
                results.append(SharedVector(ARITH, 64, r0, r1))
            else:
                out, _ = ob.trav_flags(sess, c, v, fn)
                results.append(out)
    with sess.phase("mask"):
        fa = sh.b2a(sess, f)
        g0m = _mask_bits(sess, f, g0_s) if g0_s is not None else None
        g1m = _mask_bits(sess, f, g1_s) if g1_s is not None else None
        masked = [sh.mul(sess, fa, r) if r.flavor == ARITH
                  else _mask_bits(sess, f, r) for r in results]
    with sess.phase("shuffle"):
        alpha = sess.parties[0].draw_perm(n)
        cols = [f] + [g for g in (g0m, g1m) if g is not None] + masked
        cols = ob.osn_shared(sess, 0, alpha, cols)
    with sess.phase("reveal"):
        opened = [sh.open_vec(sess, cvec, to=1) for cvec in cols]
    fv = opened[0]
    pos = 1
    g0v = g1v = None
    if g0m is not None:
        g0v, pos = opened[pos], pos + 1
    if g1m is not None:
        g1v, pos = opened[pos], pos + 1
    aggv = opened[pos:]
    rows = [(int(g0v[i]) if g0v is not None else None,
             int(g1v[i]) if g1v is not None else None,
             *[int(a[i]) for a in aggv])
            for i in range(n) if fv[i]]
    rows = _canon(rows)
    if suffix:
        fixed = []
        for idx, row in enumerate(rows):
            vals = []
            for a in range(len(q.aggs)):
                cur = row[2 + a]
                nxt_v = rows[idx + 1][2 + a] if idx + 1 < len(rows) else 0
                vals.append((cur - nxt_v) % _MOD)
            fixed.append((row[0], row[1], *vals))
        rows = fixed
    return GroupResult(rows)


# ---------------------------------------------------------------------------
# sorting-based protocols
# ---------------------------------------------------------------------------

def ga_sorting(sess: Session, view0, view1, q: JgaQuery) -> GroupResult:
    """First-attempt baseline: full shared permutation after the stable sort."""
    t = _Table(view0, view1)
    n = t.n
    if n == 0:
        return _empty_result()
    g1_plain = t.p1_col(q.group1) if q.group1 else np.zeros(n, dtype=np.uint64)
    sigma_b = _local_sort_perm(g1_plain)

    values: list[SharedVector | None] = [None] * len(q.aggs)
    with sess.phase("share"):
        g1_s = sh.share_vec(sess, 1, g1_plain[sigma_b - 1], BINARY) \
            if q.group1 else None
        for i, (side, col, fn) in enumerate(q.aggs):
            if fn == "count":
                values[i] = SharedVector.public(np.ones(n, dtype=np.uint64))
            elif side == 1:
                values[i] = sh.share_vec(sess, 1, t.p1_col(col)[sigma_b - 1],
                                         _value_flavor(fn))
    with sess.phase("osn"):
        move: list = [t.e]
        if q.group0:
            move.append(t.p0_shared(q.group0) if t.pkfk
                        else PlainColumn(t.p0_plain(q.group0), BINARY))
        v0_slots = [i for i in range(len(q.aggs)) if values[i] is None]
        for i in v0_slots:
            col, fn = q.aggs[i][1], q.aggs[i][2]
            move.append(t.p0_shared(col) if t.pkfk
                        else PlainColumn(t.p0_plain(col), _value_flavor(fn)))
        moved = ob.osn_shared(sess, 1, sigma_b, move)
        e_m = moved[0]
        g0_m = moved[1] if q.group0 else None
        for i, mv in zip(v0_slots, moved[(2 if q.group0 else 1):]):
            values[i] = mv
    with sess.phase("convert"):
        if g0_m is not None and g0_m.flavor != BINARY:
            g0_m = sh.a2b(sess, g0_m)
        values = _convert_values(sess, q, values)

    with sess.phase("sort"):
        pi, sorted_keys, _ = ob.stable_sort(
            sess, [e_m] + ([g0_m] if g0_m is not None else []))
        e_s = sorted_keys[0]
        g0_s = sorted_keys[1] if g0_m is not None else None
    with sess.phase("perm"):
        rest = ([g1_s] if g1_s is not None else []) + values
        rest = ob.perm_shared(sess, pi, rest)
        if g1_s is not None:
            g1_s, values = rest[0], rest[1:]
        else:
            values = rest
    return _grouped_tail(sess, q, e_s, g0_s, g1_s, values)


def ga_osorting(sess: Session, view0, view1, q: JgaQuery) -> GroupResult:
    """Optimized sorting: plain-vector permutation application where possible."""
    t = _Table(view0, view1)
    n = t.n
    if n == 0:
        return _empty_result()
    g1_plain = t.p1_col(q.group1) if q.group1 else np.zeros(n, dtype=np.uint64)
    sigma_b = _local_sort_perm(g1_plain)

    with sess.phase("osn"):
        move: list = [t.e]
        if q.group0:
            move.append(t.p0_shared(q.group0) if t.pkfk
                        else PlainColumn(t.p0_plain(q.group0), BINARY))
        moved = ob.osn_shared(sess, 1, sigma_b, move)
        e_m = moved[0]
        g0_m = moved[1] if q.group0 else None
    with sess.phase("convert"):
        if g0_m is not None and g0_m.flavor != BINARY:
            g0_m = sh.a2b(sess, g0_m)
    with sess.phase("sort"):
        pi, sorted_keys, _ = ob.stable_sort(
            sess, [e_m] + ([g0_m] if g0_m is not None else []))
        e_s = sorted_keys[0]
        g0_s = sorted_keys[1] if g0_m is not None else None

    values: list[SharedVector | None] = [None] * len(q.aggs)
    with sess.phase("carry-p1"):
        carry: list[PlainColumn] = []
        slots = []
        if q.group1:
            carry.append(PlainColumn(g1_plain[sigma_b - 1], BINARY))
        for i, (side, col, fn) in enumerate(q.aggs):
            if fn == "count":
                values[i] = SharedVector.public(np.ones(n, dtype=np.uint64))
            elif side == 1:
                carry.append(PlainColumn(t.p1_col(col)[sigma_b - 1],
                                         _value_flavor(fn)))
                slots.append(i)
        carry.append(PlainColumn(sigma_b, ARITH))
        out = ob.perm_plain(sess, pi, 1, carry)
        pos = 0
        g1_s = None
        if q.group1:
            g1_s, pos = out[0], 1
        for i in slots:
            values[i] = out[pos]
            pos += 1
        rho = out[pos]
    with sess.phase("carry-p0"):
        p0_slots = [i for i in range(len(q.aggs)) if values[i] is None]
        if p0_slots:
            if t.pkfk:
                out = ob.perm_shared(sess, rho,
                                     [t.p0_shared(q.aggs[i][1]) for i in p0_slots])
            else:
                out = ob.perm_plain(sess, rho, 0,
                                    [PlainColumn(t.p0_plain(q.aggs[i][1]),
                                                 _value_flavor(q.aggs[i][2]))
                                     for i in p0_slots])
            for i, mv in zip(p0_slots, out):
                values[i] = mv
    with sess.phase("convert"):
        values = _convert_values(sess, q, values)
    return _grouped_tail(sess, q, e_s, g0_s, g1_s, values)


# ---------------------------------------------------------------------------
# bitmap-assisted protocols
# ---------------------------------------------------------------------------

def _p0_bitmap_bits(sess, t: _Table, q: JgaQuery, dom0: list,
                    mask_with_e: bool) -> list[SharedVector]:
    """Per-domain-value 1-bit membership vectors of g0, optionally e-masked."""
    n, d0 = t.n, len(dom0)
    if q.group0 is None:
        ones = np.ones(n, dtype=np.uint64)
        cat = SharedVector(BINARY, 1, ones, np.zeros(n, dtype=np.uint64))
        if mask_with_e:
            cat = sh.and_bits(sess, t.e, cat)
        return [cat]
    if t.pkfk:
        cols = _concat([t.p0_shared(f"__bm:{q.group0}:{j}") for j in range(d0)])
        cat = _arith_to_bit(sess, cols)
        if mask_with_e:
            cat = sh.and_bits(sess, _tile(t.e, d0), cat)
    else:
        g0 = t.p0_plain(q.group0)
        bits = np.concatenate([(g0 == _U64(v)).astype(np.uint64) for v in dom0])
        if mask_with_e:
            # e is shared, the bitmap is P0's plaintext:
            # e AND b = (e0 AND b, locally at P0) xor (e1 AND b, one transfer)
            e0 = np.tile(t.e.shares[0], d0)
            e1 = np.tile(t.e.shares[1], d0)
            term = sh.asym_mul(sess, 1, e1, bits, BINARY, 1)
            cat = SharedVector(BINARY, 1, (e0 & bits) ^ term.shares[0],
                               term.shares[1])
        else:
            cat = SharedVector(BINARY, 1, bits,
                               np.zeros(n * d0, dtype=np.uint64))
    return [cat.slice(j * n, (j + 1) * n) for j in range(d0)]


def ga_bsorting(sess: Session, view0, view1, q: JgaQuery) -> GroupResult:
    """Bitmap-assisted sorting: bitSort replaces the comparison-based sort."""
    t = _Table(view0, view1)
    n = t.n
    if n == 0:
        return _empty_result()
    dom0 = _sorted_domain(q.dom0, t.p0_plain(q.group0) if not t.pkfk else None) \
        if q.group0 else [None]
    if len(dom0) > BITMAP_SORT_CAP:
        raise DomainTooLarge(f"d0 = {len(dom0)} exceeds {BITMAP_SORT_CAP}")
    g1_plain = t.p1_col(q.group1) if q.group1 else np.zeros(n, dtype=np.uint64)
    sigma_b = _local_sort_perm(g1_plain)

    with sess.phase("bitmap-mask"):
        bits = _p0_bitmap_bits(sess, t, q, dom0, mask_with_e=True)
    with sess.phase("osn-bitmap"):
        bits = ob.osn_shared(sess, 1, sigma_b, bits)
    with sess.phase("bitsort"):
        pi = ob.bit_sort(sess, bits)

    values: list[SharedVector | None] = [None] * len(q.aggs)
    with sess.phase("carry-p1"):
        carry: list[PlainColumn] = []
        slots = []
        if q.group1:
            carry.append(PlainColumn(g1_plain[sigma_b - 1], BINARY))
        for i, (side, col, fn) in enumerate(q.aggs):
            if fn == "count":
                values[i] = SharedVector.public(np.ones(n, dtype=np.uint64))
            elif side == 1:
                carry.append(PlainColumn(t.p1_col(col)[sigma_b - 1],
                                         _value_flavor(fn)))
                slots.append(i)
        carry.append(PlainColumn(sigma_b, ARITH))
        out = ob.invp_plain(sess, pi, 1, carry)
        pos = 0
        g1_s = None
        if q.group1:
            g1_s, pos = out[0], 1
        for i in slots:
            values[i] = out[pos]
            pos += 1
        rho = out[pos]
    with sess.phase("carry-p0"):
        p0_slots = [i for i in range(len(q.aggs)) if values[i] is None]
        g0_s = None
        if t.pkfk:
            cols = ([t.p0_shared(q.group0)] if q.group0 else []) + \
                [t.p0_shared(q.aggs[i][1]) for i in p0_slots]
            out = ob.perm_shared(sess, rho, cols) if cols else []
        else:
            cols = ([PlainColumn(t.p0_plain(q.group0), BINARY)]
                    if q.group0 else []) + \
                [PlainColumn(t.p0_plain(q.aggs[i][1]),
                             _value_flavor(q.aggs[i][2])) for i in p0_slots]
            out = ob.perm_plain(sess, rho, 0, cols) if cols else []
        if q.group0:
            g0_s, out = out[0], out[1:]
        for i, mv in zip(p0_slots, out):
            values[i] = mv
    with sess.phase("perm-e"):
        e_s = ob.perm_shared(sess, rho, [t.e])[0]
    with sess.phase("convert"):
        if g0_s is not None and g0_s.flavor != BINARY:
            g0_s = sh.a2b(sess, g0_s)
        values = _convert_values(sess, q, values)
    return _grouped_tail(sess, q, e_s, g0_s, g1_s, values)


def ga_mix(sess: Session, view0, view1, q: JgaQuery) -> GroupResult:
    """Bitmap on g0 plus local sorting on g1; no oblivious sort at all."""
    t = _Table(view0, view1)
    n = t.n
    if n == 0:
        return _empty_result()
    dom0 = _sorted_domain(q.dom0, t.p0_plain(q.group0) if not t.pkfk else None) \
        if q.group0 else [None]
    d0 = len(dom0)
    if d0 > BITMAP_SORT_CAP:
        raise DomainTooLarge(f"d0 = {d0} exceeds {BITMAP_SORT_CAP}")
    g1_plain = t.p1_col(q.group1) if q.group1 else np.zeros(n, dtype=np.uint64)
    sigma_b = _local_sort_perm(g1_plain)
    g1_sorted = g1_plain[sigma_b - 1]

    same = np.zeros(n, dtype=np.uint64)
    bound = np.zeros(n, dtype=np.uint64)
    if n > 1:
        same[1:] = (g1_sorted[1:] == g1_sorted[:-1]).astype(np.uint64)
        bound[:-1] = (g1_sorted[:-1] != g1_sorted[1:]).astype(np.uint64)
    bound[n - 1] = 1  # the final row always ends its group

    values: list[SharedVector | None] = [None] * len(q.aggs)
    with sess.phase("flag"):
        run = sh.share_vec(sess, 1, same, BINARY, 1)
        c_bound = sh.share_vec(sess, 1, bound, BINARY, 1)
    with sess.phase("share"):
        for i, (side, col, fn) in enumerate(q.aggs):
            if fn == "count":
                values[i] = SharedVector.public(np.ones(n, dtype=np.uint64))
            elif side == 1:
                values[i] = sh.share_vec(sess, 1, t.p1_col(col)[sigma_b - 1],
                                         _value_flavor(fn))
    with sess.phase("osn"):
        bits = _p0_bitmap_bits(sess, t, q, dom0, mask_with_e=False)
        v0_slots = [i for i in range(len(q.aggs)) if values[i] is None]
        move: list = [t.e] + bits
        for i in v0_slots:
            col, fn = q.aggs[i][1], q.aggs[i][2]
            move.append(t.p0_shared(col) if t.pkfk
                        else PlainColumn(t.p0_plain(col), _value_flavor(fn)))
        moved = ob.osn_shared(sess, 1, sigma_b, move)
        e_m = moved[0]
        bits = moved[1:1 + d0]
        for i, mv in zip(v0_slots, moved[1 + d0:]):
            values[i] = mv
    with sess.phase("convert"):
        values = _convert_values(sess, q, values)
    with sess.phase("mask"):
        valid = sh.and_bits(sess, _tile(e_m, d0), _concat(bits))
        masked_per_agg = []
        for (side, col, fn), v in zip(q.aggs, values):
            ident = SharedVector.public(
                np.full(n * d0, AGG_IDENTITY[fn], dtype=np.uint64), v.flavor)
            masked_per_agg.append(sh.mux(sess, valid, _tile(v, d0), ident))
    with sess.phase("aggregate"):
        run_t = _tile(run, d0)
        outs, t_out = [], None
        for (side, col, fn), a in zip(q.aggs, masked_per_agg):
            r, tv = ob.trav_flags(sess, run_t, a, fn,
                                  validity=valid if t_out is None else None)
            if tv is not None:
                t_out = tv
            outs.append(r)
    with sess.phase("mask-bound"):
        t_fin = sh.and_bits(sess, _tile(c_bound, d0), t_out)
        fa = sh.b2a(sess, t_fin)
        masked_out = [sh.mul(sess, fa, r) if r.flavor == ARITH
                      else _mask_bits(sess, t_fin, r) for r in outs]
    with sess.phase("reveal"):
        t_open = sh.open_vec(sess, t_fin, to=1)
        r_open = [sh.open_vec(sess, r, to=1) for r in masked_out]
    rows = []
    for j in range(d0):
        for i in range(n):
            if t_open[j * n + i]:
                rows.append((dom0[j] if q.group0 else None,
                             int(g1_sorted[i]) if q.group1 else None,
                             *[int(r[j * n + i]) for r in r_open]))
    return GroupResult(_canon(rows))


# ---------------------------------------------------------------------------
# bitmap protocol
# ---------------------------------------------------------------------------

def ga_bitmap(sess: Session, view0, view1, q: JgaQuery) -> GroupResult:
    """Both group columns as bitmaps: one aggregation per domain-value pair."""
    t = _Table(view0, view1)
    n = t.n
    if n == 0:
        return _empty_result()
    dom0 = (_sorted_domain(q.dom0, t.p0_plain(q.group0) if not t.pkfk else None)
            if q.group0 else [None])
    dom1 = _sorted_domain(q.dom1, t.p1_col(q.group1)) if q.group1 else [None]
    d0, d1 = len(dom0), len(dom1)
    if d0 * d1 > BITMAP_PAIR_CAP:
        raise DomainTooLarge(f"d0*d1 = {d0 * d1} exceeds {BITMAP_PAIR_CAP}")

    b0_plain = b0_arith = None
    if q.group0 is None:
        b0_plain = [np.ones(n, dtype=np.uint64)]
    elif t.pkfk:
        b0_arith = [t.p0_shared(f"__bm:{q.group0}:{j}") for j in range(d0)]
    else:
        g0 = t.p0_plain(q.group0)
        b0_plain = [(g0 == _U64(v)).astype(np.uint64) for v in dom0]
    g1 = t.p1_col(q.group1) if q.group1 else None
    b1_plain = [(g1 == _U64(v)).astype(np.uint64) for v in dom1] \
        if q.group1 else [np.ones(n, dtype=np.uint64)]

    pairs = [(j, p) for j in range(d0) for p in range(d1)]
    need_tree = any(fn in ("max", "min") for _, _, fn in q.aggs)

    # One batched gate call per product family: every bucket pair's rows are
    # concatenated so their messages share rounds.
    def cat0(arrs):  # P0-held plain bits per pair
        return np.concatenate([arrs[j] for j, _ in pairs])

    def cat1(arrs):
        return np.concatenate([arrs[p] for _, p in pairs])

    with sess.phase("products"):
        if b0_plain is not None:
            witness = sh.asym_mul(sess, 0, cat0(b0_plain), cat1(b1_plain),
                                  ARITH, 64)
        else:
            b0_cat = _concat([b0_arith[j] for j, _ in pairs])
            witness = sh.mul(sess, b0_cat,
                             SharedVector.public(cat1(b1_plain)))
        qvecs = []
        for side, col, fn in q.aggs:
            flavor = _value_flavor(fn)
            if fn == "count":
                qvecs.append(witness)
            elif side == 1:
                x = cat1([b1_plain[p] * t.p1_col(col) for p in range(d1)])
                if b0_plain is not None:
                    qvecs.append(sh.asym_mul(sess, 0, cat0(b0_plain), x,
                                             flavor, 64))
                else:
                    prod = sh.mul(sess, b0_cat, sh.share_vec(sess, 1, x, ARITH))
                    qvecs.append(prod if flavor == ARITH
                                 else sh.a2b(sess, prod))
            else:
                if b0_plain is not None:
                    x = cat0([b0_plain[j] * t.p0_plain(col) for j in range(d0)])
                    qvecs.append(sh.asym_mul(sess, 1, cat1(b1_plain), x,
                                             flavor, 64))
                else:
                    v0 = sh.mul(sess, b0_cat,
                                _concat([t.p0_shared(col)] * len(pairs)))
                    gate = sh.b2a(sess, sh.share_vec(
                        sess, 1, cat1(b1_plain), BINARY, 1))
                    gated = sh.mul(sess, gate, v0)
                    qvecs.append(gated if flavor == ARITH
                                 else sh.a2b(sess, gated))
        if need_tree:
            if b0_plain is not None:
                bb = sh.asym_mul(sess, 0, cat0(b0_plain), cat1(b1_plain),
                                 BINARY, 1)
            else:
                bb = _arith_to_bit(sess, witness)

    e_t = _tile(t.e, len(pairs))
    with sess.phase("aggregate"):
        ea = sh.b2a(sess, e_t)

        def bucket_sums(vec: SharedVector) -> SharedVector:
            g = sh.mul(sess, ea, vec)
            return SharedVector(
                ARITH, 64,
                g.shares[0].reshape(len(pairs), n).sum(axis=1, dtype=np.uint64),
                g.shares[1].reshape(len(pairs), n).sum(axis=1, dtype=np.uint64))

        cnt = bucket_sums(witness)
        agg_out = []
        tbits = None
        for (side, col, fn), qv in zip(q.aggs, qvecs):
            if fn in ("sum", "count"):
                agg_out.append(bucket_sums(qv))
            else:
                if tbits is None:
                    tbits = sh.and_bits(sess, e_t, bb)
                agg_out.append(_tree_reduce(sess, tbits, qv, len(pairs), fn))
    with sess.phase("reveal"):
        cnt_open = sh.open_vec(sess, cnt, to=1)
        opened = [sh.open_vec(sess, a, to=1) for a in agg_out]
    rows = []
    for idx, (j, p) in enumerate(pairs):
        if int(cnt_open[idx]) == 0:
            continue
        rows.append((dom0[j] if q.group0 else None,
                     dom1[p] if q.group1 else None,
                     *[int(a[idx]) for a in opened]))
    return GroupResult(_canon(rows))


def _tree_reduce(sess: Session, validity: SharedVector, values: SharedVector,
                 buckets: int, fn: str) -> SharedVector:
    """Per-bucket max/min over (validity, value) rows, log-depth.

    Buckets are contiguous equal-length segments; each level pads to even
    length with invalid sentinels and halves.
    """
    length = len(values) // buckets
    t, v = validity, values
    while length > 1:
        if length % 2 == 1:
            # append one invalid row per bucket
            idx = []
            for b in range(buckets):
                idx.extend(range(b * length, (b + 1) * length))
                idx.append(-1)
            pad_t = SharedVector(BINARY, 1, np.zeros(1, np.uint64),
                                 np.zeros(1, np.uint64))
            pad_v = SharedVector(v.flavor, v.width, np.zeros(1, np.uint64),
                                 np.zeros(1, np.uint64))
            t = _concat([t, pad_t]).gather(np.array(idx))
            v = _concat([v, pad_v]).gather(np.array(idx))
            length += 1
        half = length // 2
        sel_a, sel_b = [], []
        for b in range(buckets):
            base = b * length
            sel_a.extend(range(base, base + half))
            sel_b.extend(range(base + half, base + length))
        sel_a = np.array(sel_a, dtype=np.int64)
        sel_b = np.array(sel_b, dtype=np.int64)
        ta, tb = t.gather(sel_a), t.gather(sel_b)
        va, vb = v.gather(sel_a), v.gather(sel_b)
        g = sh.gt(sess, vb, va) if fn == "max" else sh.gt(sess, va, vb)
        blocked = sh.and_bits(sess, ta, sh.not_bits(g))
        pick_b = sh.and_bits(sess, tb, sh.not_bits(blocked))
        v = sh.mux(sess, pick_b, vb, va)
        t = sh.or_bits(sess, ta, tb)
        length = half
    return v


# ---------------------------------------------------------------------------
# one-side case
# ---------------------------------------------------------------------------

def ga_oneside(sess: Session, view0, view1, q: JgaQuery) -> GroupResult:
    """Grouping entirely on one party: local sort plus one switching pass."""
    t = _Table(view0, view1)
    n = t.n
    if n == 0:
        return _empty_result()
    if not q.one_side():
        raise SizeMismatch("ga_oneside needs grouping columns on one side only")
    sorter = 1 if q.group1 else 0
    if sorter == 0 and t.pkfk:
        raise SizeMismatch("one-side grouping on the PK side of a PK-FK view "
                           "is not supported (its transcript is secret-shared)")
    gcol = t.p1_col(q.group1) if sorter == 1 else t.p0_plain(q.group0)
    sigma = _local_sort_perm(gcol)
    g_sorted = gcol[sigma - 1]
    same = np.zeros(n, dtype=np.uint64)
    bound = np.zeros(n, dtype=np.uint64)
    if n > 1:
        same[1:] = (g_sorted[1:] == g_sorted[:-1]).astype(np.uint64)
        bound[:-1] = (g_sorted[:-1] != g_sorted[1:]).astype(np.uint64)
    bound[n - 1] = 1

    values: list[SharedVector | None] = [None] * len(q.aggs)
    with sess.phase("share"):
        run = sh.share_vec(sess, sorter, same, BINARY, 1)
        last = sh.share_vec(sess, sorter, bound, BINARY, 1)
        g_s = sh.share_vec(sess, sorter, g_sorted, BINARY)
        for i, (side, col, fn) in enumerate(q.aggs):
            if fn == "count":
                values[i] = SharedVector.public(np.ones(n, dtype=np.uint64))
            elif side == sorter and not (side == 0 and t.pkfk):
                vals = (t.p1_col(col) if side == 1 else t.p0_plain(col))[sigma - 1]
                values[i] = sh.share_vec(sess, side, vals, _value_flavor(fn))
    with sess.phase("osn"):
        move, slots = [t.e], []
        for i, (side, col, fn) in enumerate(q.aggs):
            if values[i] is None:
                if side == 1:
                    move.append(PlainColumn(t.p1_col(col), _value_flavor(fn)))
                elif t.pkfk:
                    move.append(t.p0_shared(col))
                else:
                    move.append(PlainColumn(t.p0_plain(col), _value_flavor(fn)))
                slots.append(i)
        moved = ob.osn_shared(sess, sorter, sigma, move)
        e_m = moved[0]
        for i, mv in zip(slots, moved[1:]):
            values[i] = mv
    with sess.phase("convert"):
        values = _convert_values(sess, q, values)
    with sess.phase("aggregate"):
        outs, t_out = [], None
        for (side, col, fn), v in zip(q.aggs, values):
            ident = SharedVector.public(
                np.full(n, AGG_IDENTITY[fn], dtype=np.uint64), v.flavor)
            a = sh.mux(sess, e_m, v, ident)
            r, tv = ob.trav_flags(sess, run, a, fn,
                                  validity=e_m if t_out is None else None)
            if tv is not None:
                t_out = tv
            outs.append(r)
    with sess.phase("flag"):
        f = sh.and_bits(sess, last, t_out)
    with sess.phase("mask"):
        fa = sh.b2a(sess, f)
        gm = _mask_bits(sess, f, g_s)
        masked = [sh.mul(sess, fa, r) if r.flavor == ARITH
                  else _mask_bits(sess, f, r) for r in outs]
    with sess.phase("shuffle"):
        alpha = sess.parties[0].draw_perm(n)
        cols = ob.osn_shared(sess, 0, alpha, [f, gm] + masked)
    with sess.phase("reveal"):
        opened = [sh.open_vec(sess, cvec, to=1) for cvec in cols]
    fv, gv, aggv = opened[0], opened[1], opened[2:]
    rows = []
    for i in range(n):
        if fv[i]:
            g_val = int(gv[i])
            rows.append((g_val if sorter == 0 else None,
                         g_val if sorter == 1 else None,
                         *[int(a[i]) for a in aggv]))
    return GroupResult(_canon(rows))


PROTOCOLS = {
    "sorting": ga_sorting,
    "osorting": ga_osorting,
    "bsorting": ga_bsorting,
    "mix": ga_mix,
    "bitmap": ga_bitmap,
    "oneside": ga_oneside,
}


def run_query(sess: Session, view0, view1, q: JgaQuery) -> GroupResult:
    name = q.protocol
    if name == "auto":
        t = _Table(view0, view1)
        if q.group0:
            try:
                d0 = len(_sorted_domain(
                    q.dom0, t.p0_plain(q.group0) if not t.pkfk else None))
            except DomainTooLarge:
                d0 = 1 << 32
        else:
            d0 = 1
        d1 = len(_sorted_domain(q.dom1, t.p1_col(q.group1))) if q.group1 else 1
        name = select_protocol(t.n, d0, d1, q.aggs, one_side=q.one_side())
    return PROTOCOLS[name](sess, view0, view1, q)
