"""Beneš switching network: routing a permutation into switch control bits.

Networks are built for power-of-two sizes only; callers pad. A program is a
list of layers, each layer a batch of 2x2 switches given as (top positions,
bottom positions, control bits). Applying a switch with control 1 swaps its
two slots; applying the whole program to the identity sequence reproduces the
permutation it was routed for (0-based gather convention: out[i] = in[perm[i]]).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SwitchProgram:
    size: int
    layers: list[tuple[np.ndarray, np.ndarray, np.ndarray]]

    @property
    def num_switches(self) -> int:
        return sum(len(a) for a, _, _ in self.layers)

    def controls(self) -> np.ndarray:
        if not self.layers:
            return np.zeros(0, dtype=np.uint64)
        return np.concatenate([c for _, _, c in self.layers]).astype(np.uint64)

    def apply(self, values: list) -> list:
        """Route a plaintext list through the network (reference semantics)."""
        v = list(values)
        for a_idx, b_idx, ctrl in self.layers:
            for a, b, c in zip(a_idx, b_idx, ctrl):
                if c:
                    v[a], v[b] = v[b], v[a]
        return v


def expected_switches(m: int) -> int:
    if m < 2:
        return 0
    k = m.bit_length() - 1
    return m * k - m // 2


def build_program(perm: np.ndarray) -> SwitchProgram:
    """Route `perm` (0-based, out[i] = in[perm[i]]) through a Beneš network."""
    m = len(perm)
    assert m & (m - 1) == 0, "network size must be a power of two"
    depth = 2 * (m.bit_length() - 1) - 1 if m >= 2 else 0
    layer_pairs: list[list[tuple[int, int, int]]] = [[] for _ in range(max(depth, 0))]
    if m >= 2:
        _route(np.asarray(perm, dtype=np.int64),
               np.arange(m, dtype=np.int64), layer_pairs, 0, depth)
    layers = []
    for pairs in layer_pairs:
        if pairs:
            arr = np.array(pairs, dtype=np.int64)
            layers.append((arr[:, 0], arr[:, 1], arr[:, 2].astype(np.uint64)))
        else:
            z = np.zeros(0, dtype=np.int64)
            layers.append((z, z, np.zeros(0, dtype=np.uint64)))
    return SwitchProgram(m, layers)


def _route(perm, positions, layer_pairs, depth_lo, depth_hi):
    m = len(perm)
    mid = (depth_lo + depth_hi) // 2
    if m == 2:
        layer_pairs[mid].append((int(positions[0]), int(positions[1]),
                                 int(perm[0] == 1)))
        return
    half = m // 2
    opos = np.empty(m, dtype=np.int64)
    opos[perm] = np.arange(m)
    # 2-color inputs: siblings (i, i^1) split top/bottom, and so do the two
    # sources of every output pair.
    color = np.full(m, -1, dtype=np.int64)
    for start in range(m):
        if color[start] != -1:
            continue
        i, c = start, 0
        while True:
            color[i] = c
            sib = i ^ 1
            if color[sib] != -1:
                break
            color[sib] = 1 - c
            j = int(perm[opos[sib] ^ 1])
            if color[j] != -1:
                break
            i, c = j, c
    in_sw = color[0::2]
    out_sw = color[perm[0::2]]
    for s in range(half):
        layer_pairs[depth_lo].append((int(positions[2 * s]),
                                      int(positions[2 * s + 1]), int(in_sw[s])))
    for t in range(half):
        layer_pairs[depth_hi - 1].append((int(positions[2 * t]),
                                          int(positions[2 * t + 1]), int(out_sw[t])))
    # sub-permutations: output pair t needs its top-colored source from the
    # top subnet's slot src//2, same for bottom.
    top_perm = np.empty(half, dtype=np.int64)
    bot_perm = np.empty(half, dtype=np.int64)
    for t in range(half):
        src_a, src_b = int(perm[2 * t]), int(perm[2 * t + 1])
        if color[src_a] == 0:
            top_perm[t], bot_perm[t] = src_a // 2, src_b // 2
        else:
            top_perm[t], bot_perm[t] = src_b // 2, src_a // 2
    _route(top_perm, positions[0::2], layer_pairs, depth_lo + 1, depth_hi - 1)
    _route(bot_perm, positions[1::2], layer_pairs, depth_lo + 1, depth_hi - 1)
