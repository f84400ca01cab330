"""Dealer-emulated ideal functionalities for private set operations.

PSI, private-ID and circuit-PSI are consumed by the view generators exactly
through these interfaces; the dealer computes the plaintext functionality and
hands each party its prescribed output (plaintext or share half). Nothing
crosses the wire here: all delivered volume lands on the hybrid ledger.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeMismatch
from .ring import BINARY, ARITH, as_ring
from .session import Session
from .sharing import SharedVector

_U64 = np.uint64


@dataclass
class PidOutput:
    """One party's private-ID output: own-key mapping plus the union's ids."""

    mapping: dict[int, int]
    ri_star: np.ndarray


def _check_distinct(keys: np.ndarray, who: str):
    if len(np.unique(keys)) != len(keys):
        raise SizeMismatch(f"{who} key set contains duplicates")


def f_psi(sess: Session, x_keys, y_keys) -> np.ndarray:
    """Both parties learn the (sorted) intersection, nothing else."""
    x = as_ring(x_keys)
    y = as_ring(y_keys)
    _check_distinct(x, "P0")
    _check_distinct(y, "P1")
    inter = np.intersect1d(x, y)
    sess.dealer.deliver(2 * 64 * len(inter))
    return inter


def f_pid(sess: Session, x_keys, y_keys) -> tuple[PidOutput, PidOutput]:
    """Random identifiers for the union; each party learns only its own mapping."""
    x = as_ring(x_keys)
    y = as_ring(y_keys)
    _check_distinct(x, "P0")
    _check_distinct(y, "P1")
    union = np.union1d(x, y)
    m = len(union)
    ids = np.array([], dtype=np.uint64)
    while len(ids) < m:
        cand = sess.dealer.rng.integers(0, 1 << 64, size=m - len(ids) + 8,
                                        dtype=np.uint64)
        ids = np.unique(np.concatenate([ids, cand]))[:m] if len(ids) else \
            np.unique(cand)[:m]
    assign = sess.dealer.rng.permutation(m)
    full_map = {int(k): int(ids[assign[i]]) for i, k in enumerate(union)}
    ri_star = np.sort(ids)
    out0 = PidOutput({int(k): full_map[int(k)] for k in x}, ri_star.copy())
    out1 = PidOutput({int(k): full_map[int(k)] for k in y}, ri_star.copy())
    sess.dealer.deliver(2 * 64 * m + 128 * (len(x) + len(y)))
    return out0, out1


def f_cpsi(sess: Session, receiver: int, recv_keys, send_keys,
           payload=None) -> tuple[SharedVector, SharedVector | None]:
    """Circuit PSI with payload.

    Per receiver index i: e_i = 1 and z_i = payload_j if some sender key j
    equals recv key i, else e_i = 0, z_i = 0 (the reserved null). Outputs are
    dealer-sampled share pairs; with payload absent only E is produced.
    """
    xs = as_ring(recv_keys)
    ys = as_ring(send_keys)
    _check_distinct(xs, "receiver")
    _check_distinct(ys, "sender")
    if payload is not None and len(payload) != len(ys):
        raise SizeMismatch("payload length differs from sender key count")
    n = len(xs)
    lookup = {int(k): j for j, k in enumerate(ys)}
    e = np.zeros(n, dtype=np.uint64)
    z = np.zeros(n, dtype=np.uint64)
    pay = as_ring(payload) if payload is not None else None
    for i, k in enumerate(xs):
        j = lookup.get(int(k))
        if j is not None:
            e[i] = 1
            if pay is not None:
                z[i] = pay[j]
    e0, e1 = sess.dealer._split(e, True, 1)
    e_sv = SharedVector(BINARY, 1, e0, e1)
    sess.dealer.deliver(2 * 1 * n)
    if payload is None:
        return e_sv, None
    z0, z1 = sess.dealer._split(z, False)
    sess.dealer.deliver(2 * 64 * n)
    return e_sv, SharedVector(ARITH, 64, z0, z1)
