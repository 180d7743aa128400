import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from henseldef.evaluate import Definition, SamplePlan, verify_definition
from henseldef.localfield import laurent, padic
from henseldef.uniform import (MAX_X, build_M, build_Pn, choose_N, legendre_vec, odd_primes,
                               union_density)
from oracles import legendre_by_squares, primes_upto


def test_odd_primes_against_trial_division():
    assert odd_primes(1000).tolist() == primes_upto(1000)[1:]
    assert odd_primes(2).tolist() == []
    with pytest.raises(ValueError):
        odd_primes(MAX_X + 1)


def test_legendre_vec_against_squares():
    ps = odd_primes(400)
    for n in range(-5, 30):
        assert legendre_vec(n, ps).tolist() == [legendre_by_squares(n, int(p)) for p in ps]


def test_build_Pn_examples():
    # 2 is a non-residue exactly for p = 3, 5 (mod 8); 19 = 3 (mod 8) qualifies too
    assert build_Pn(2, 20).primes == (3, 5, 11, 13, 19)
    assert [p for p in primes_upto(20)[1:] if legendre_by_squares(2, p) == -1] == [3, 5, 11, 13, 19]
    assert build_Pn(4, 100).primes == ()
    assert build_Pn(2, 2).primes == ()
    assert 83 in build_Pn(2, 100)
    with pytest.raises(ValueError):
        build_Pn(1, 10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60))
def test_family_members_are_non_residues(n):
    fam = build_Pn(n, 3000)
    assert list(fam.primes) == sorted(fam.primes)
    assert fam.primes == tuple(p for p in primes_upto(3000)[1:] if legendre_by_squares(n, p) == -1)


@pytest.mark.parametrize("n", [4, 9, 16, 25, 36, 49])
def test_square_n_gives_empty_family(n):
    assert build_Pn(n, 10**5).primes == ()


def test_density_examples():
    d2, d3, d7 = (union_density(N, 10**6) for N in (2, 3, 7))
    assert abs(d2.density - 0.5) < 0.01
    assert abs(d3.density - 0.75) < 0.01
    assert abs(d7.density - 15 / 16) < 0.01
    assert d2.total == len(odd_primes(10**6))


def test_density_monotone_in_N():
    ds = [union_density(N, 10**5).density for N in range(2, 20)]
    assert all(a <= b for a, b in zip(ds, ds[1:]))
    assert all(0 <= d <= 1 for d in ds)


def test_density_marginals_and_union_agree_with_families():
    X = 5000
    rep = union_density(5, X)
    fams = [set(build_Pn(n, X).primes) for n in range(2, 6)]
    assert rep.covered == len(set().union(*fams))
    for n, fam in zip(range(2, 6), fams):
        assert rep.marginals[n] == pytest.approx(len(fam) / rep.total)


def test_choose_N():
    assert choose_N(0.6).N == 2
    assert choose_N(0.3).N == 3
    r = choose_N(0.1)
    assert r.N == 7 and r.achieved and r.density > 0.9
    with pytest.raises(ValueError):
        choose_N(1e-9, X=1000, cap=5)
    with pytest.raises(ValueError):
        choose_N(1.5)


def test_density_report_serialisation():
    r = union_density(3, 100, epsilon=0.5)
    d = json.loads(r.to_json())
    assert d["version"] == 1 and d["achieved"] == (r.density > 0.5)
    assert union_density(3, 100).achieved is None
    assert "density" in r.summary()


def test_build_M_examples():
    assert build_M(2, 2) == [1, 3, 5]
    assert build_M(3, 2) == [1, 3]
    assert build_M(13, 2) == [1]


def test_laurent_model_success_implies_padic_success():
    # among sampled primes in P, whenever the F_p((t)) run confirms the set O,
    # the Q_p run must confirm it as well
    rng = np.random.default_rng(5)
    cands = [p for p in build_Pn(2, 2000).primes if p > 81]
    plan = SamplePlan(V=2, max_leads=20, refute_per_val=0)
    checked = 0
    for p in sorted(rng.choice(cands, size=4, replace=False).tolist()):
        d = Definition.uniform(4)
        lrep = verify_definition(d, laurent(p, precision=5, window=2), plan)
        if lrep.verdict == "PASS":
            checked += 1
            assert verify_definition(d, padic(p, precision=5, window=2), plan).verdict == "PASS"
    assert checked > 0
