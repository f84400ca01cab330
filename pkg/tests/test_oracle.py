"""Plaintext reference semantics."""
import pytest

from secjoin import oracle
from secjoin.errors import DuplicatePrimaryKey, UnknownPrimitive
from secjoin.ga import JgaQuery
from secjoin.views import Relation


def test_single_matching_row():
    r0 = Relation("A", {"k": [1, 2], "g0": [7, 8], "v0": [5, 6]}, "k")
    r1 = Relation("B", {"k": [2, 3], "g1": [1, 1], "v1": [10, 11]}, "k")
    q = JgaQuery("g0", "g1", [(0, "v0", "sum"), (1, "v1", "max")])
    assert oracle.eval_jga(r0, r1, q) == [(8, 1, 6, 10)]


def test_mapping_example_count_by_hand():
    # keys (a,b,c,d) join (c,a,f): two joined rows, unit payloads
    r0 = Relation("A", {"k": [10, 20, 30, 40], "g0": [1, 1, 2, 2],
                        "v0": [1, 1, 1, 1]}, "k")
    r1 = Relation("B", {"k": [30, 10, 60], "g1": [5, 5, 5],
                        "v1": [1, 1, 1]}, "k")
    q = JgaQuery("g0", "g1", [(0, None, "count")])
    # joined rows: key 30 -> (g0=2, g1=5), key 10 -> (g0=1, g1=5)
    assert oracle.eval_jga(r0, r1, q) == [(1, 5, 1), (2, 5, 1)]


def test_fk_fanout_three_sum():
    r0 = Relation("P", {"k": [5], "g0": [1], "v0": [7]}, "k", "pk")
    r1 = Relation("F", {"k": [5, 5, 5], "g1": [2, 2, 2],
                        "v1": [1, 1, 1]}, "k", "fk")
    q = JgaQuery("g0", "g1", [(0, "v0", "sum")])
    assert oracle.eval_jga(r0, r1, q) == [(1, 2, 21)]


def test_duplicate_primary_key_raises():
    r1 = Relation("F", {"k": [5, 5], "v1": [1, 1]}, "k", "fk")
    q = JgaQuery(None, None, [(1, "v1", "sum")])
    with pytest.raises(DuplicatePrimaryKey):
        oracle.eval_jga(r1, r1, q)


def test_primitive_trav_first_semantics():
    # first(X, 4) = 3 on X = (b,b,a,a,a,b,b)
    keys = [1, 1, 0, 0, 0, 1, 1]
    got = oracle.oracle_primitive("trav", keys, [1] * 7, "sum")
    assert got == [1, 2, 1, 2, 3, 1, 2]


def test_primitive_per_gen_example():
    assert oracle.oracle_primitive("per_gen", [1, 0, 1, 0]) == [3, 1, 4, 2]


def test_primitive_osn_identity_fixed_point():
    assert oracle.oracle_primitive("osn", [1, 2, 3], [9, 8, 7]) == [9, 8, 7]


def test_primitive_misc():
    assert oracle.oracle_primitive("psi", [1, 2, 3], [3, 4]) == [3]
    assert oracle.oracle_primitive("pid-size", [1, 2], [2, 9]) == 3
    e, z = oracle.oracle_primitive("cpsi", [10, 20], [20], [5])
    assert e == [0, 1] and z == [0, 5]
    pi, sorted_keys = oracle.oracle_primitive("stable_sort", [3, 1, 3])
    assert sorted_keys == [1, 3, 3] and pi == [2, 1, 3]
    assert oracle.oracle_primitive("invp", [2, 1], ["x", "y"]) == ["y", "x"]


def test_unknown_primitive():
    with pytest.raises(UnknownPrimitive):
        oracle.oracle_primitive("nope")


def test_oracle_deterministic():
    r0 = Relation("A", {"k": [1, 2, 3], "g0": [0, 0, 1], "v0": [4, 5, 6]}, "k")
    r1 = Relation("B", {"k": [3, 2], "g1": [9, 9], "v1": [1, 2]}, "k")
    q = JgaQuery("g0", "g1", [(0, "v0", "min"), (1, "v1", "count")])
    assert oracle.eval_jga(r0, r1, q) == oracle.eval_jga(r0, r1, q)
