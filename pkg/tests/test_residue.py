import json
from math import gcd

import pytest

from henseldef.ffield import FieldError, FqPoly, is_squarefree, make_field, monic_polys, parse_poly, residue_no_root
from henseldef.residue import (CoverageRecord, c_bound, check_T_coverage,
                               find_coverage_counterexample, product, q_power)
from oracles import OracleField

PP = {4: (2, 2), 8: (2, 3), 9: (3, 2), 16: (2, 4), 25: (5, 2), 27: (3, 3), 32: (2, 5),
      49: (7, 2), 64: (2, 6), 81: (3, 4), 121: (11, 2), 125: (5, 3), 128: (2, 7)}


def field(q):
    return make_field(*PP.get(q, (q, 1)))


def test_c_bound():
    assert (c_bound(1), c_bound(2), c_bound(3)) == (1, 81, 625)
    with pytest.raises(ValueError):
        c_bound(0)


def test_q_power_examples():
    F4 = make_field(2, 2)
    r = check_T_coverage(q_power(2), F4)
    assert r.covered and r.missing == () and r.poly == "X^4-X"
    r1 = check_T_coverage(q_power(1), F4)
    assert not r1.covered and r1.missing == (2, 3)
    with pytest.raises(ValueError):
        q_power(0)


@pytest.mark.parametrize("p", [2, 3])
@pytest.mark.parametrize("n", range(1, 7))
@pytest.mark.parametrize("k", range(1, 7))
def test_q_power_coverage_iff_n_divides_k(p, n, k):
    F = make_field(p, n)
    r = check_T_coverage(q_power(k), F)
    assert r.covered == (k % n == 0)
    assert F.q - len(r.missing) == p ** gcd(k, n)


@pytest.mark.parametrize("p,n,k", [(2, 2, 1), (2, 3, 2), (3, 2, 1), (2, 4, 2)])
def test_q_power_reached_set_against_oracle(p, n, k):
    F = make_field(p, n)
    O = OracleField(p, F.modulus)
    fixed = set()
    for x in O.elements():
        y = x
        for _ in range(k):
            acc = O.from_code(1)
            for _ in range(p):
                acc = O.mul(acc, y)
            y = acc
        if y == x:
            fixed.add(O.code(x))
    r = check_T_coverage(q_power(k), F)
    assert set(range(F.q)) - set(r.missing) == fixed


def test_product_examples():
    F83 = make_field(83)
    assert check_T_coverage(product(parse_poly("X^2-2", F83)), F83).covered
    F3 = make_field(3)
    r = check_T_coverage(product(parse_poly("X^3+2*X+1", F3)), F3)
    assert not r.covered and r.missing == (2,)
    F2 = make_field(2)
    assert check_T_coverage(product(parse_poly("X^2+X+1", F2)), F2).covered


def test_product_reached_set_against_brute_force():
    for q in (3, 4, 5, 7, 9):
        F = field(q)
        for f in monic_polys(F, 2):
            vals = {f(x).code for x in range(q)} - {0}
            inv = {F.inv(v) for v in vals}
            reached = {F.mul(a, b) for a in inv for b in inv} | {0}
            r = check_T_coverage(product(f), F)
            assert set(range(q)) - set(r.missing) == reached


def test_product_guards():
    F = make_field(2, 15)
    with pytest.raises(FieldError):
        check_T_coverage(product(FqPoly(F, (0, 1))), F)
    F5 = make_field(5)
    with pytest.raises(FieldError):
        check_T_coverage(product(FqPoly(F5, (1,))), F5)


def test_record_invariant():
    with pytest.raises(ValueError):
        CoverageRecord(4, "x", "X", True, (1,), 4)
    r = check_T_coverage(q_power(1), make_field(2, 2))
    assert json.loads(r.to_json())["missing"] == [2, 3]


@pytest.mark.slow
@pytest.mark.parametrize("q", [83, 89, 97, 101, 103, 107, 109, 113, 121, 125, 127, 128])
def test_quadratics_cover_above_bound(q):
    assert q > c_bound(2)
    F = field(q)
    for f in monic_polys(F, 2):
        if residue_no_root(f, F) and is_squarefree(f):
            assert check_T_coverage(product(f), F).covered, f


def test_counterexample_search_basics():
    assert find_coverage_counterexample(2, []) is None
    assert find_coverage_counterexample(2, range(83, 90)) is None
    q, f = find_coverage_counterexample(3, range(3, 10))
    assert (q, str(f)) == (3, "X^3+2*X+1")
    with pytest.raises(ValueError):
        find_coverage_counterexample(2, [2])
    with pytest.raises(ValueError):
        find_coverage_counterexample(2, [5000])


@pytest.mark.slow
def test_counterexample_fixture(golden):
    found = find_coverage_counterexample(2, range(3, 82))
    record = {"d": 2, "q_min": 3, "q_max": 81, "found": found is not None}
    if found is not None:
        record.update(q=found[0], f=str(found[1]))
    golden("counterexample.json", json.dumps(record, indent=1, sort_keys=True) + "\n")
