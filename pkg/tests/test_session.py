"""Channel, transcript ledger, determinism and leakage shape."""
import numpy as np
import pytest

from secjoin import sharing as sh
from secjoin import views as vw
from secjoin.errors import ProtocolDesync
from secjoin.session import Session
from secjoin.views import Relation


def _mul_program(sess):
    # inputs are pre-shared: the program is exactly one multiplication gate
    x = sh.SharedVector(sh.ARITH, 64, np.array([1], dtype=np.uint64),
                        np.array([2], dtype=np.uint64))
    y = sh.SharedVector(sh.ARITH, 64, np.array([3], dtype=np.uint64),
                        np.array([1], dtype=np.uint64))
    return sh.mul(sess, x, y)


def test_run_protocol_mul_single_round():
    sess = Session(1, 2, 3)
    out, t = sess.run_protocol(_mul_program)
    assert out.reconstruct()[0] == 12
    assert t.wire_rounds == 1


def test_zero_message_program_zero_bits():
    sess = Session(1, 2, 3)

    def local_only(s):
        a = sh.SharedVector.public([1, 2, 3])
        return sh.add(a, a)

    _, t = sess.run_protocol(local_only)
    assert t.wire_bits == 0 and t.wire_rounds == 0


def _demo_relations(payloads=(1, 2, 3, 4), keys=(10, 20, 30, 40),
                    keys1=(30, 10, 60)):
    r0 = Relation("A", {"k": list(keys), "v": list(payloads)}, "k")
    r1 = Relation("B", {"k": list(keys1), "w": [7, 8, 9]}, "k")
    return r0, r1


def test_secv_determinism_replay():
    r0, r1 = _demo_relations()
    digests = []
    for _ in range(2):
        sess = Session(41, 42, 43)
        vw.gen_secv(sess, r0, r1)
        digests.append((sess.transcript.digest(),
                        sess.transcript.wire_bits,
                        sess.transcript.wire_rounds,
                        tuple(sess.transcript.phase_shapes())))
    assert digests[0] == digests[1]


def test_secv_different_seed_different_transcript():
    r0, r1 = _demo_relations()
    s1 = Session(41, 42, 43)
    vw.gen_secv(s1, r0, r1)
    s2 = Session(41, 42, 99)
    vw.gen_secv(s2, r0, r1)
    assert s1.transcript.digest() != s2.transcript.digest()


def test_phases_partition_total_bits():
    sess = Session(5, 6, 7)
    with sess.phase("a"):
        sh.share_vec(sess, 0, [1, 2, 3])
    with sess.phase("b"):
        x = sh.share_vec(sess, 0, [5])
        y = sh.share_vec(sess, 1, [6])
        sh.mul(sess, x, y)
    t = sess.transcript
    assert sum(sum(p.wire_bits) for p in t.phases) == t.wire_bits


def test_empty_phase_contributes_zero():
    sess = Session(5, 6, 7)
    with sess.phase("idle"):
        pass
    rec = sess.transcript.phases[-1]
    assert rec.wire_bits == (0, 0) and rec.wire_rounds == 0
    assert rec.hybrid_bits == 0


def test_nested_phase_paths():
    sess = Session(5, 6, 7)
    with sess.phase("outer"):
        with sess.phase("inner"):
            sh.share_vec(sess, 0, [1])
    labels = [p.label for p in sess.transcript.phases]
    assert "outer.inner" in labels and "outer" in labels
    inner = next(p for p in sess.transcript.phases if p.label == "outer.inner")
    outer = next(p for p in sess.transcript.phases if p.label == "outer")
    assert inner.wire_bits == outer.wire_bits  # all traffic inside the child


def test_secv_phase_labels():
    r0, r1 = _demo_relations()
    sess = Session(11, 12, 13)
    vw.gen_secv(sess, r0, r1)
    assert set(sess.transcript.phase_labels()) == {
        "cpsi-1", "osn", "cpsi-2", "shuffle", "sorting", "mux"}


def test_protocol_desync_on_missing_message():
    sess = Session(1, 2, 3)
    with pytest.raises(ProtocolDesync):
        sess.take(0)


def test_protocol_desync_on_leftover_message():
    sess = Session(1, 2, 3)

    def bad(s):
        s.post(0, np.zeros(1, dtype=np.uint64), 64)
        return None

    with pytest.raises(ProtocolDesync):
        sess.run_protocol(bad)


def test_leakage_shape_same_sizes_different_contents():
    # level-2 pre-check: equal (n_x, n_y), different data => identical
    # per-phase (bits, rounds) sequences
    shapes = []
    for keys0, keys1 in (((10, 20, 30, 40), (30, 10, 60)),
                         ((1, 2, 3, 4), (5, 6, 7))):
        r0 = Relation("A", {"k": list(keys0), "v": [9, 9, 9, 9]}, "k")
        r1 = Relation("B", {"k": list(keys1), "w": [1, 2, 3]}, "k")
        sess = Session(21, 22, 23)
        vw.gen_secv(sess, r0, r1)
        shapes.append([(p.label, p.wire_bits, p.wire_rounds)
                       for p in sess.transcript.phases])
    assert shapes[0] == shapes[1]
