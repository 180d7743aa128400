from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from henseldef.ffield import (FieldDesc, FieldError, FqPoly, find_nonroot_poly, find_trace_poly,
                              format_poly, is_squarefree, legendre, make_field, monic_polys,
                              parse_elem, parse_poly, poly_is_irreducible, product_cover_check,
                              residue_no_root, smallest_nondivisor)
from henseldef.residue import find_coverage_counterexample
from oracles import (OracleField, legendre_by_squares, primes_upto, rabin_irreducible,
                     roots_in_prime_field)

SMALL_FIELDS = [(2, 1), (2, 2), (2, 3), (2, 4), (3, 1), (3, 2), (5, 1), (7, 1), (13, 1)]


def P(text, field):
    return parse_poly(text, field)


# --- make_field -----------------------------------------------------------------

def test_prime_field_modulus_is_x():
    F = make_field(2, 1)
    assert F.modulus == (0, 1) and F.q == 2 and F.is_prime_field


def test_f4_modulus():
    assert format_poly(make_field(2, 2).modulus) == "X^2+X+1"


def test_f9_modulus():
    assert format_poly(make_field(3, 2).modulus) == "X^2+1"


@pytest.mark.parametrize("p,n", [(2, 2), (2, 3), (2, 5), (3, 2), (3, 3), (5, 2), (7, 2)])
def test_modulus_is_lexicographically_first_irreducible(p, n):
    F = make_field(p, n)
    assert rabin_irreducible(list(F.modulus), p)
    # enumerate in the same order: highest non-leading coefficient most significant
    for k in range(p**n):
        lower = [(k // p**i) % p for i in range(n)]
        cand = lower + [1]
        if rabin_irreducible(cand, p):
            assert tuple(cand) == F.modulus
            break


def test_make_field_rejects_composite_and_size():
    with pytest.raises(FieldError):
        make_field(4, 1)
    with pytest.raises(FieldError):
        make_field(2, 21)


def test_fielddesc_rejects_reducible_modulus():
    with pytest.raises(FieldError):
        FieldDesc(2, 2, (1, 0, 1))


# --- arithmetic against the coordinate-vector oracle ---------------------------

@pytest.mark.parametrize("p,n", [(2, 2), (2, 3), (2, 4), (3, 2)])
def test_field_tables_exhaustive(p, n):
    F = make_field(p, n)
    O = OracleField(p, F.modulus)
    for a, b in product(range(F.q), repeat=2):
        ca, cb = O.from_code(a), O.from_code(b)
        assert F.add(a, b) == O.code(O.add(ca, cb))
        assert F.mul(a, b) == O.code(O.mul(ca, cb))


@pytest.mark.parametrize("p,n", SMALL_FIELDS)
def test_field_axioms_exhaustive(p, n):
    F = make_field(p, n)
    els = range(F.q)
    for a in els:
        assert F.add(a, F.neg(a)) == 0
        assert F.mul(a, 1) == a
        if a:
            assert F.mul(a, F.inv(a)) == 1
        for b in els:
            assert F.add(a, b) == F.add(b, a)
            assert F.mul(a, b) == F.mul(b, a)
    if F.q <= 16:
        for a, b, c in product(els, repeat=3):
            assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
            assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))


def test_vectorised_ops_match_scalar():
    F = make_field(3, 3)
    a = np.arange(F.q)
    b = (a * 7 + 3) % F.q
    assert [F.mul(int(x), int(y)) for x, y in zip(a, b)] == F.vmul(a, b).tolist()
    assert [F.add(int(x), int(y)) for x, y in zip(a, b)] == F.vadd(a, b).tolist()


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
def test_large_field_axioms_randomised(a, b, c):
    F = make_field(2, 16)
    assert F.mul(a, F.add(b, c)) == F.add(F.mul(a, b), F.mul(a, c))
    assert F.mul(F.mul(a, b), c) == F.mul(a, F.mul(b, c))
    if a:
        assert F.mul(a, F.inv(a)) == 1
        assert F.pow(a, F.q - 1) == 1


def test_elem_text_round_trip():
    F = make_field(3, 2)
    for e in F.elements():
        assert parse_elem(str(e), F) == e
    assert str(F.elem(5)) == "[2,1]"


# --- polynomials ------------------------------------------------------------------

def test_irreducible_examples():
    F2, F3 = make_field(2), make_field(3)
    assert poly_is_irreducible(P("X^2+X+1", F2))
    assert not poly_is_irreducible(P("X^2+1", F2))
    assert poly_is_irreducible(P("X^2+X+2", F3))


def test_irreducible_rejects_non_monic():
    with pytest.raises(FieldError):
        poly_is_irreducible(P("2*X^2+1", make_field(3)))


@pytest.mark.parametrize("p,d", [(2, 1), (2, 2), (2, 3), (2, 4), (2, 5), (3, 2), (3, 3), (5, 2), (5, 3)])
def test_irreducible_agrees_with_rabin(p, d):
    F = make_field(p)
    for f in monic_polys(F, d):
        assert poly_is_irreducible(f) == rabin_irreducible(list(f.coeffs), p), f


def test_trace_poly_examples():
    assert str(find_trace_poly(2, 2)) == "X^2+X+1"
    assert str(find_trace_poly(3, 2)) == "X^2+X+2"
    assert str(find_trace_poly(2, 3)) == "X^3+X+1"


@pytest.mark.parametrize("p", [2, 3, 5, 7])
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_trace_poly_properties(p, m):
    f = find_trace_poly(p, m)
    assert f.degree == m and f.is_monic
    assert f.derivative()(0).code != 0
    assert rabin_irreducible(list(f.coeffs), p)


def test_smallest_nondivisor():
    assert [smallest_nondivisor(n) for n in (1, 2, 6, 12, 60)] == [2, 3, 4, 5, 7]


@pytest.mark.parametrize("p,n,m", [(2, 1, 2), (2, 2, 3), (2, 6, 4), (3, 2, 3), (5, 1, 2)])
def test_nonroot_poly(p, n, m):
    F = make_field(p, n)
    f, a = find_nonroot_poly(F)
    assert f.degree == m and a == F.zero
    assert residue_no_root(f, F)
    assert f.derivative()(0).code != 0
    O = OracleField(p, F.modulus)
    assert all(O.eval_codes(f.coeffs, x) != (0,) * n for x in O.elements())


def test_residue_no_root_examples():
    F2, F4, F5 = make_field(2), make_field(2, 2), make_field(5)
    assert residue_no_root(P("X^2+X+1", F2), F2)
    assert not residue_no_root(P("X^2+X+1", F2), F4)
    assert residue_no_root(P("X^2-2", F5), F5)
    with pytest.raises(FieldError):
        residue_no_root(FqPoly(F2, ()), F2)


@pytest.mark.parametrize("p", [2, 3, 5, 7])
def test_residue_no_root_matches_root_scan(p):
    F = make_field(p)
    for f in monic_polys(F, 2):
        assert residue_no_root(f, F) == (not roots_in_prime_field(f.coeffs, p))


def test_squarefree_examples():
    assert is_squarefree(P("X^2-2", make_field(5)))
    assert not is_squarefree(P("X^2+2*X+1", make_field(3)))
    assert not is_squarefree(P("X^2+1", make_field(2)))


def test_product_cover_examples():
    F83 = make_field(83)
    assert product_cover_check(P("X^2-2", F83), F83)
    for q in (2, 3, 4, 9, 16):
        F = make_field(*{2: (2, 1), 3: (3, 1), 4: (2, 2), 9: (3, 2), 16: (2, 4)}[q])
        assert product_cover_check(FqPoly(F, (0, 1)), F)


def test_product_cover_failure_instance():
    # a square-free rootless cubic over F_3 whose values are all 1
    F3 = make_field(3)
    f = P("X^3+2*X+1", F3)
    assert residue_no_root(f, F3) and is_squarefree(f)
    assert {f(x).code for x in range(3)} == {1}
    assert not product_cover_check(f, F3)
    assert find_coverage_counterexample(3, range(3, 10)) == (3, f)


def test_product_cover_size_guard():
    F = make_field(2, 15)
    with pytest.raises(FieldError):
        product_cover_check(FqPoly(F, (0, 1)), F)


def _brute_cover(f, F):
    vals = {f(x).code for x in range(F.q)} - {0}
    prods = {F.mul(a, b) for a in vals for b in vals} | {0}
    return prods == set(range(F.q))


@pytest.mark.parametrize("p,n", [(2, 2), (3, 1), (3, 2), (5, 1), (7, 1), (2, 3)])
def test_product_cover_matches_pairwise_scan(p, n):
    F = make_field(p, n)
    for deg in (2, 3):
        for f in monic_polys(F, deg):
            assert product_cover_check(f, F) == _brute_cover(f, F), f


@pytest.mark.parametrize("q", [83, 89, 97, 101, 103])
def test_rootless_squarefree_quadratics_cover_above_81(q):
    F = make_field(q)
    for f in monic_polys(F, 2):
        if residue_no_root(f, F) and is_squarefree(f):
            assert product_cover_check(f, F)


# --- Legendre --------------------------------------------------------------------

def test_legendre_examples():
    assert legendre(2, 7) == 1
    assert legendre(3, 7) == -1
    assert legendre(7, 7) == 0
    with pytest.raises(FieldError):
        legendre(3, 2)
    with pytest.raises(FieldError):
        legendre(3, 9)


@given(st.sampled_from(primes_upto(200)[1:]), st.integers(-500, 500), st.integers(-500, 500))
def test_legendre_multiplicative_and_periodic(p, a, b):
    assert legendre(a * b, p) == legendre(a, p) * legendre(b, p)
    assert legendre(a + p, p) == legendre(a, p)
    assert legendre(a, p) == legendre_by_squares(a, p)


# --- text forms --------------------------------------------------------------------

@pytest.mark.parametrize("text", ["X^2+X+1", "X^3+2*X+1", "X", "1", "X^5+X^2"])
def test_poly_round_trip_prime_field(text):
    F = make_field(3)
    assert str(P(text, F)) == text


def test_poly_round_trip_integer_and_extension():
    assert parse_poly("X^2-2") == (-2, 0, 1)
    assert format_poly((-2, 0, 1)) == "X^2-2"
    assert format_poly((-3, -1, 1)) == "X^2-X-3"
    F4 = make_field(2, 2)
    f = FqPoly(F4, (2, 3, 1))
    assert str(f) == "X^2+[1,1]*X+[0,1]"
    assert parse_poly(str(f), F4) == f


@given(st.lists(st.integers(-9, 9), min_size=1, max_size=6).filter(lambda c: c[-1] != 0))
def test_integer_poly_round_trip(coeffs):
    assert parse_poly(format_poly(coeffs)) == tuple(coeffs)


def test_parse_poly_errors():
    with pytest.raises(FieldError):
        parse_poly("")
    with pytest.raises(FieldError):
        parse_poly("X^^2")
