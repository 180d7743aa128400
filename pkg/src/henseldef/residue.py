"""Exhaustive residue-field checks behind the witness constructions:
which residue classes a candidate set T of representatives actually hits."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .ffield import (MAX_COVER_SIZE, FieldDesc, FieldError, FqPoly, format_poly, image_logs,
                     is_squarefree, make_field, monic_polys, prime_power, product_set_covers,
                     residue_no_root)
from .formula import c_bound

__all__ = ["CoverageRecord", "c_bound", "check_T_coverage", "find_coverage_counterexample",
           "q_power", "product"]


@dataclass(frozen=True)
class CoverageRecord:
    q: int
    kind: str
    poly: str
    covered: bool
    missing: tuple[int, ...]
    scan_size: int

    def __post_init__(self):
        if self.covered != (not self.missing):
            raise ValueError("covered must hold exactly when nothing is missing")

    def to_dict(self) -> dict:
        return {"q": self.q, "kind": self.kind, "poly": self.poly, "covered": self.covered,
                "missing": list(self.missing), "scan_size": self.scan_size}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass(frozen=True)
class _QPower:
    k: int


@dataclass(frozen=True)
class _Product:
    f: FqPoly


def q_power(k: int) -> _QPower:
    """T = roots of X^(p^k) - X."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return _QPower(k)


def product(f: FqPoly) -> _Product:
    """T = f(K)^-1 f(K)^-1 together with 0."""
    return _Product(f)


def check_T_coverage(kind: _QPower | _Product, field: FieldDesc) -> CoverageRecord:
    """Which residues of ``field`` the set T reaches.

    q-power kind: roots of X^(p^k) - X reduce onto the subfield F_(p^gcd(k,n)),
    computed here by evaluating x^(p^k) - x on every element.  Product kind:
    the residues of T are 0 and the inverses of f(y) f(z); since inversion
    permutes F^x, that is all of F exactly when f(F) f(F) covers F^x.
    """
    q = field.q
    if isinstance(kind, _QPower):
        xs = np.arange(q, dtype=np.int64)
        fx = xs.copy()
        for _ in range(kind.k):
            fx = _vpow(field, fx, field.p)
        missing = tuple(int(c) for c in np.flatnonzero(fx != xs))
        return CoverageRecord(q, f"q_power(k={kind.k})",
                              f"X^{field.p ** kind.k}-X", not missing, missing, q)
    f = kind.f
    if q > MAX_COVER_SIZE:
        raise FieldError(f"q = {q} exceeds the coverage scan bound {MAX_COVER_SIZE}")
    if f.degree < 1:
        raise FieldError("product coverage needs a non-constant polynomial")
    if q == 2:
        hit = bool(np.any(field.veval(f.embed(field).coeffs) == 1))
        missing = () if hit else (1,)
    else:
        logs, _ = image_logs(f, field)
        mask = product_set_covers(logs, q - 1)
        exp = field._tables[0]
        # residue of t is the inverse of a product value: log -> -log
        reached = np.zeros(q, dtype=bool)
        reached[0] = True
        reached[exp[(-np.flatnonzero(mask)) % (q - 1)]] = True
        missing = tuple(int(c) for c in np.flatnonzero(~reached))
    return CoverageRecord(q, "product", format_poly(f), not missing, missing, q * q)


def _vpow(field: FieldDesc, xs: np.ndarray, e: int) -> np.ndarray:
    out = np.ones_like(xs)
    base = xs
    while e:
        if e & 1:
            out = field.vmul(out, base)
        e >>= 1
        if e:
            base = field.vmul(base, base)
    return out


def find_coverage_counterexample(d: int = 2, q_range: Iterable[int] = range(3, 82)
                                 ) -> tuple[int, FqPoly] | None:
    """First (q, f) with f monic of degree d, square-free and rootless over
    F_q whose product set f(F) f(F) misses some nonzero element.

    Non-prime-powers in the range are skipped.
    """
    for q in q_range:
        if not 2 < q <= 2**12:
            raise ValueError(f"q = {q} outside the scan range (2, 4096]")
        pp = prime_power(q)
        if pp is None:
            continue
        F = make_field(*pp)
        for f in monic_polys(F, d):
            if not residue_no_root(f, F) or not is_squarefree(f):
                continue
            if not check_T_coverage(product(f), F).covered:
                return q, f
    return None
