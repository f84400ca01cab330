"""Reference semantics computed in the clear.

Everything the secure engine produces is checked against these functions:
the full join-group-aggregate evaluation and plaintext twins of each
oblivious primitive.
"""
from __future__ import annotations

import numpy as np

from .errors import DuplicatePrimaryKey, UnknownPrimitive
from .views import Relation

_MOD = 1 << 64


def _agg_reduce(fn: str, values: list[int]) -> int:
    if fn == "sum":
        return sum(values) % _MOD
    if fn == "count":
        return len(values)
    if fn == "max":
        return max(values)
    if fn == "min":
        return min(values)
    if fn == "xor":
        acc = 0
        for v in values:
            acc ^= v
        return acc
    raise UnknownPrimitive(f"unknown aggregate {fn!r}")


def eval_jga(r0: Relation, r1: Relation, query) -> list[tuple]:
    """Inner equi-join, group by (g_0, g_1), aggregate; canonical row order.

    FK fan-out expands rows. Rows are (g0-or-None, g1-or-None, agg values...)
    sorted lexicographically on the present group columns.
    """
    if len(np.unique(r0.keys)) != r0.n:
        raise DuplicatePrimaryKey(f"relation {r0.name} is not a primary key table")
    by_key = {int(k): i for i, k in enumerate(r0.keys)}
    groups: dict[tuple, list[tuple[int, int]]] = {}
    for j, k in enumerate(r1.keys):
        i = by_key.get(int(k))
        if i is None:
            continue
        g0 = int(r0.columns[query.group0][i]) if query.group0 else None
        g1 = int(r1.columns[query.group1][j]) if query.group1 else None
        groups.setdefault((g0, g1), []).append((i, j))
    rows = []
    for (g0, g1), pairs in groups.items():
        vals = []
        for side, col, fn in query.aggs:
            if fn == "count":
                picked = [1] * len(pairs)
            elif side == 0:
                picked = [int(r0.columns[col][i]) for i, _ in pairs]
            else:
                picked = [int(r1.columns[col][j]) for _, j in pairs]
            vals.append(_agg_reduce(fn, picked))
        rows.append((g0, g1, *vals))
    rows.sort(key=lambda r: tuple(v for v in r[:2] if v is not None))
    return rows


# ---------------------------------------------------------------------------
# plaintext twins of the oblivious primitives
# ---------------------------------------------------------------------------

def _apply(pi, x):
    pi = np.asarray(pi, dtype=np.int64)
    x = list(x)
    return [x[t - 1] for t in pi]


def _invert(pi):
    pi = np.asarray(pi, dtype=np.int64)
    inv = np.empty(len(pi), dtype=np.int64)
    inv[pi - 1] = np.arange(1, len(pi) + 1)
    return inv


def _per_gen(v):
    rank, out, n = 1, [0] * len(v), len(v)
    for want in (0, 1):
        for i in range(n):
            if v[i] == want:
                out[i] = rank
                rank += 1
    return out


def _bit_sort(bvecs):
    n = len(bvecs[0])
    comp = [1 - max(b[i] for b in bvecs) for i in range(n)]
    out, rank = [0] * n, 1
    for bucket in [comp] + [list(b) for b in bvecs]:
        for i in range(n):
            if bucket[i]:
                out[i] = rank
                rank += 1
    return out


def _stable_sort(keys):
    order = sorted(range(len(keys)), key=lambda i: (keys[i], i))
    pi = [i + 1 for i in order]
    return pi, [keys[i] for i in order]


def _trav(keys, vals, agg):
    out = []
    for i in range(len(keys)):
        j = i
        while j > 0 and keys[j - 1] == keys[i]:
            j -= 1
        out.append(_agg_reduce(agg, [int(v) for v in vals[j:i + 1]]))
    return out


def _cpsi(x, y, payload=None):
    pos = {int(k): j for j, k in enumerate(y)}
    e, z = [], []
    for k in x:
        j = pos.get(int(k))
        e.append(0 if j is None else 1)
        z.append(0 if (j is None or payload is None) else int(payload[j]))
    return e, z


def oracle_primitive(name: str, *args):
    """Plaintext twin of a named oblivious primitive."""
    if name in ("osn", "shuffle-with-known-pi", "perm"):
        pi, x = args
        return _apply(pi, x)
    if name == "invp":
        pi, x = args
        return _apply(_invert(pi), x)
    if name == "per_gen":
        return _per_gen(list(args[0]))
    if name == "bit_sort":
        return _bit_sort([list(b) for b in args[0]])
    if name == "stable_sort":
        return _stable_sort(list(args[0]))
    if name == "trav":
        keys, vals, agg = args
        return _trav(list(keys), list(vals), agg)
    if name == "cpsi":
        return _cpsi(*args)
    if name == "psi":
        x, y = args
        return sorted(set(int(v) for v in x) & set(int(v) for v in y))
    if name == "pid-size":
        x, y = args
        return len(set(int(v) for v in x) | set(int(v) for v in y))
    raise UnknownPrimitive(name)
