"""Truncated models of the henselian fields F_q((t)) and Q_p.

An element is stored leading-normalised: a valuation, the first ``prec``
digits of its unit part (leading digit nonzero), and nothing else.  Digits
are residue-field codes for Laurent series and base-p digits for p-adics.
Whatever lies beyond ``prec`` digits is unknown, so cancellation in a sum
shows up as a loss of known digits rather than as silent garbage.

Arithmetic comes in two flavours.  The public operators raise
:class:`PrecisionExhausted` when a result has no trustworthy digit left.
Passing ``strict=False`` instead yields a *vanished* element: zero modulo
``t^val`` with ``prec == 0``.  Formula evaluation and Newton iteration work
with the non-strict flavour, where "indistinguishable from zero" is the
expected outcome of checking an equation.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field as dc_field
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Sequence, Union

from .ffield import FieldDesc, FieldError, FqElem, is_prime, make_field


class PrecisionExhausted(ArithmeticError):
    """No trustworthy digit is left; rerun at a higher precision."""


class HenselError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    pass


# --- field descriptors -----------------------------------------------------

@dataclass(frozen=True)
class LocalFieldDesc:
    precision: int = 8
    window: int = 4

    def __post_init__(self):
        if self.precision < 1:
            raise ValueError("precision must be >= 1")
        if self.window < 0:
            raise ValueError("window must be >= 0")

    # subclasses provide the unit-part ring Z_p/p^k or F_q[t]/t^k through
    # the _u_* methods; units are ints (p-adic) or code lists (Laurent)

    @property
    def residue_field(self) -> FieldDesc:
        raise NotImplementedError

    @property
    def q(self) -> int:
        return self.residue_field.q

    @property
    def p(self) -> int:
        return self.residue_field.p

    def elem(self, val: int, digits: Sequence[int], prec: int | None = None) -> LocalElem:
        digits = tuple(digits)
        if prec is None:
            prec = len(digits)
        digits = digits[:prec]
        if len(digits) < prec:
            raise ValueError("fewer digits than the stated precision")
        if prec < 1 or digits[0] == 0:
            raise ValueError("leading digit must be nonzero")
        if any(not 0 <= d < self.q for d in digits):
            raise ValueError(f"digit out of range for residue field of size {self.q}")
        return LocalElem(self, val, digits, prec)

    @cached_property
    def zero(self) -> LocalElem:
        return LocalElem(self, None, (), 0)

    @cached_property
    def one(self) -> LocalElem:
        return self.from_int(1)

    def vanished(self, absprec: int) -> LocalElem:
        return LocalElem(self, absprec, (), 0)

    def _normalise(self, v0: int, unit, k: int) -> LocalElem:
        """Strip leading zero digits of a unit-part representative."""
        s, unit = self._u_strip(unit, k)
        if s >= k:
            return self.vanished(v0 + k)
        return LocalElem(self, v0 + s, self._u_digits(unit, k - s), k - s)


@dataclass(frozen=True)
class LaurentField(LocalFieldDesc):
    """F_q((t)) truncated to ``precision`` digits past the valuation."""

    residue: FieldDesc = dc_field(default_factory=lambda: make_field(2))

    kind = "laurent"

    def __str__(self):
        return f"F_{self.residue.q}((t))[N={self.precision}]"

    @property
    def residue_field(self) -> FieldDesc:
        return self.residue

    def from_int(self, n: int, prec: int | None = None) -> LocalElem:
        c = n % self.residue.p
        if c == 0:
            return self.zero
        k = self.precision if prec is None else prec
        return LocalElem(self, 0, (c,) + (0,) * (k - 1), k)

    def constant(self, code: int, prec: int | None = None) -> LocalElem:
        if code == 0:
            return self.zero
        k = self.precision if prec is None else prec
        return LocalElem(self, 0, (code,) + (0,) * (k - 1), k)

    def _u(self, x: LocalElem) -> list[int]:
        return list(x.digits)

    def _u_digits(self, u: list[int], k: int) -> tuple[int, ...]:
        return tuple(u[:k]) + (0,) * (k - len(u))

    def _u_strip(self, u: list[int], k: int) -> tuple[int, list[int]]:
        s = 0
        while s < k and s < len(u) and u[s] == 0:
            s += 1
        if s >= min(k, len(u)):
            return k, []
        return s, u[s:]

    def _u_shift_add(self, a: list[int], da: int, b: list[int], db: int, k: int) -> list[int]:
        F = self.residue
        out = [0] * k
        for i, c in enumerate(a):
            if i + da < k:
                out[i + da] = c
        for i, c in enumerate(b):
            if i + db < k:
                out[i + db] = F.add(out[i + db], c)
        return out

    def _u_mul(self, a: list[int], b: list[int], k: int) -> list[int]:
        F = self.residue
        out = [0] * k
        for i in range(min(k, len(a))):
            ai = a[i]
            if ai:
                for j in range(min(k - i, len(b))):
                    if b[j]:
                        out[i + j] = F.add(out[i + j], F.mul(ai, b[j]))
        return out

    def _u_neg(self, a: list[int], k: int) -> list[int]:
        return [self.residue.neg(c) for c in a[:k]]

    def _u_inv(self, a: list[int], k: int) -> list[int]:
        # power-series long division: w_0 = a_0^-1, w_i = -a_0^-1 * sum a_j w_{i-j}
        F = self.residue
        a0 = F.inv(a[0])
        w = [a0]
        for i in range(1, k):
            acc = 0
            for j in range(1, min(i, len(a) - 1) + 1):
                acc = F.add(acc, F.mul(a[j], w[i - j]))
            w.append(F.neg(F.mul(a0, acc)))
        return w

    def digit_str(self, d: int) -> str:
        return str(d) if self.residue.is_prime_field else str(self.residue.elem(d))


@dataclass(frozen=True)
class PadicField(LocalFieldDesc):
    """Q_p truncated to ``precision`` base-p digits past the valuation."""

    prime: int = 3
    allow_even: bool = False

    kind = "padic"

    def __post_init__(self):
        super().__post_init__()
        if not is_prime(self.prime):
            raise FieldError(f"{self.prime} is not prime")
        if self.prime == 2 and not self.allow_even:
            raise FieldError("Q_2 must be requested explicitly with allow_even=True")

    def __str__(self):
        return f"Q_{self.prime}[N={self.precision}]"

    @cached_property
    def residue_field(self) -> FieldDesc:
        return make_field(self.prime)

    def from_int(self, n: int, prec: int | None = None) -> LocalElem:
        if n == 0:
            return self.zero
        p = self.prime
        v = 0
        while n % p == 0:
            n //= p
            v += 1
        k = self.precision if prec is None else prec
        return self._normalise(v, n % p**k, k)

    def constant(self, code: int, prec: int | None = None) -> LocalElem:
        return self.from_int(code, prec) if code else self.zero

    def _u(self, x: LocalElem) -> int:
        p, u = self.prime, 0
        for d in reversed(x.digits):
            u = u * p + d
        return u

    def _u_digits(self, u: int, k: int) -> tuple[int, ...]:
        out = []
        for _ in range(k):
            u, r = divmod(u, self.prime)
            out.append(r)
        return tuple(out)

    def _u_strip(self, u: int, k: int) -> tuple[int, int]:
        p = self.prime
        u %= p**k
        if u == 0:
            return k, 0
        s = 0
        while u % p == 0:
            u //= p
            s += 1
        return s, u

    def _u_shift_add(self, a: int, da: int, b: int, db: int, k: int) -> int:
        p = self.prime
        return (a * p**da + b * p**db) % p**k

    def _u_mul(self, a: int, b: int, k: int) -> int:
        return a * b % self.prime**k

    def _u_neg(self, a: int, k: int) -> int:
        return (-a) % self.prime**k

    def _u_inv(self, a: int, k: int) -> int:
        return pow(a, -1, self.prime**k)

    def digit_str(self, d: int) -> str:
        return str(d)

    def to_rational(self, x: LocalElem):
        """Exact rational value of the stored digits."""
        from fractions import Fraction
        if x.is_zero:
            return Fraction(0)
        return Fraction(self._u(x)) * Fraction(self.prime) ** x.val


def laurent(residue: FieldDesc | int, precision: int = 8, window: int = 4) -> LaurentField:
    """F_q((t)); ``residue`` is a FieldDesc or a prime power q."""
    if isinstance(residue, int):
        from .ffield import prime_power
        pn = prime_power(residue)
        if pn is None:
            raise FieldError(f"{residue} is not a prime power")
        residue = make_field(*pn)
    return LaurentField(precision=precision, window=window, residue=residue)


def padic(p: int, precision: int = 8, window: int = 4, allow_even: bool = False) -> PadicField:
    return PadicField(precision=precision, window=window, prime=p, allow_even=allow_even)


# --- elements --------------------------------------------------------------

@dataclass(frozen=True)
class LocalElem:
    """``t^val * (d0 + d1 t + ...)`` with ``prec`` known digits.

    ``val is None`` marks the exact zero.  ``prec == 0`` (only produced by
    non-strict arithmetic) marks a value that vanishes modulo ``t^val``.
    """

    field: LocalFieldDesc = dc_field(repr=False)
    val: int | None
    digits: tuple[int, ...]
    prec: int

    @property
    def is_zero(self) -> bool:
        return self.val is None

    @property
    def is_vanished(self) -> bool:
        return self.val is not None and self.prec == 0

    @property
    def absprec(self) -> float:
        """Absolute precision: the value is known modulo t^absprec."""
        if self.val is None:
            return float("inf")
        return self.val + self.prec

    @property
    def in_ring(self) -> bool:
        return self.is_zero or self.val >= 0

    @property
    def in_ideal(self) -> bool:
        return self.is_zero or self.val >= 1

    def __add__(self, other):
        return add(self, _coerce(self.field, other))

    def __radd__(self, other):
        return add(_coerce(self.field, other), self)

    def __sub__(self, other):
        return sub(self, _coerce(self.field, other))

    def __rsub__(self, other):
        return sub(_coerce(self.field, other), self)

    def __mul__(self, other):
        return mul(self, _coerce(self.field, other))

    def __rmul__(self, other):
        return mul(_coerce(self.field, other), self)

    def __truediv__(self, other):
        return mul(self, inv(_coerce(self.field, other)))

    def __neg__(self):
        return neg(self)

    def __pow__(self, e: int):
        return power(self, e)

    def __str__(self):
        return format_elem(self)


Coeff = Union[int, LocalElem]


def _coerce(K: LocalFieldDesc, v) -> LocalElem:
    if isinstance(v, LocalElem):
        if v.field is not K and v.field != K:
            raise ValueError("elements of different local fields")
        return v
    if isinstance(v, int):
        return K.from_int(v)
    return NotImplemented


def _check(x: LocalElem, strict: bool) -> LocalElem:
    if strict and x.is_vanished:
        raise PrecisionExhausted(f"result vanishes modulo t^{x.val}")
    return x


def add(x: LocalElem, y: LocalElem, strict: bool = True) -> LocalElem:
    if x.field is not y.field and x.field != y.field:
        raise ValueError("elements of different local fields")
    if x.is_zero:
        return _check(y, strict)
    if y.is_zero:
        return _check(x, strict)
    K = x.field
    v0 = min(x.val, y.val)
    A = min(x.absprec, y.absprec)
    k = A - v0
    if k <= 0:
        return _check(K.vanished(A), strict)
    u = K._u_shift_add(K._u(x) if x.prec else _empty(K), x.val - v0,
                       K._u(y) if y.prec else _empty(K), y.val - v0, k)
    return _check(K._normalise(v0, u, k), strict)


def _empty(K):
    return 0 if isinstance(K, PadicField) else []


def neg(x: LocalElem, strict: bool = True) -> LocalElem:
    if x.is_zero or x.is_vanished:
        return _check(x, strict)
    K = x.field
    return K._normalise(x.val, K._u_neg(K._u(x), x.prec), x.prec)


def sub(x: LocalElem, y: LocalElem, strict: bool = True) -> LocalElem:
    return add(x, neg(y, strict=False), strict)


def mul(x: LocalElem, y: LocalElem, strict: bool = True) -> LocalElem:
    if x.field is not y.field and x.field != y.field:
        raise ValueError("elements of different local fields")
    K = x.field
    if x.is_zero or y.is_zero:
        return K.zero
    k = min(x.prec, y.prec)
    v = x.val + y.val
    if k == 0:
        return _check(K.vanished(v), strict)
    return K._normalise(v, K._u_mul(K._u(x), K._u(y), k), k)


def inv(x: LocalElem) -> LocalElem:
    if x.is_zero:
        raise ZeroDivisionError("inverse of exact zero")
    if x.is_vanished:
        raise PrecisionExhausted("inverse of a value indistinguishable from zero")
    K = x.field
    return K._normalise(-x.val, K._u_inv(K._u(x), x.prec), x.prec)


def div(x: LocalElem, y: LocalElem, strict: bool = True) -> LocalElem:
    return mul(x, inv(y), strict)


def power(x: LocalElem, e: int, strict: bool = True) -> LocalElem:
    if e < 0:
        return power(inv(x), -e, strict)
    result = x.field.one
    base = x
    while e:
        if e & 1:
            result = mul(result, base, strict=False)
        e >>= 1
        if e:
            base = mul(base, base, strict=False)
    return _check(result, strict)


def defect(x: LocalElem, y: LocalElem) -> float:
    """How far ``x == y`` holds: val(x - y), or the absolute precision at
    which the difference vanishes (inf for an exact match)."""
    d = sub(x, y, strict=False)
    return float("inf") if d.is_zero else float(d.val)


def agrees(x: LocalElem, y: LocalElem) -> bool:
    """True when x and y coincide on every digit both of them know."""
    d = sub(x, y, strict=False)
    return d.is_zero or d.is_vanished


def truncate(x: LocalElem, prec: int) -> LocalElem:
    if x.is_zero or x.prec <= prec:
        return x
    return LocalElem(x.field, x.val, x.digits[:prec], prec)


# --- polynomials ----------------------------------------------------------

def _as_elem(K: LocalFieldDesc, c: Coeff) -> LocalElem:
    return c if isinstance(c, LocalElem) else K.from_int(c)


def eval_poly(f: Sequence[Coeff], x: LocalElem, strict: bool = True) -> LocalElem:
    """Horner evaluation of a polynomial (coefficients lowest degree first,
    ints or elements of x's field) under tracked precision."""
    if not any((c != 0) if isinstance(c, int) else not c.is_zero for c in f):
        raise ValueError("eval_poly needs a nonzero polynomial")
    K = x.field
    nonzero = [i for i, c in enumerate(f) if not (isinstance(c, int) and c == 0)]
    if len(f) > 8 and len(nonzero) * 4 < len(f):
        # sparse (e.g. X^q - X): sum of monomials by repeated squaring
        acc = K.zero
        for i in nonzero:
            acc = add(acc, mul(_as_elem(K, f[i]), power(x, i, strict=False), strict=False),
                      strict=False)
        return _check(acc, strict)
    acc = K.zero
    for c in reversed(f):
        acc = add(mul(acc, x, strict=False), _as_elem(K, c), strict=False)
    return _check(acc, strict)


def poly_derivative(f: Sequence[Coeff]) -> list[Coeff]:
    out: list[Coeff] = []
    for i, c in enumerate(f[1:], start=1):
        if isinstance(c, int):
            out.append(i * c)
        else:
            out.append(mul(c, c.field.from_int(i), strict=False))
    return out or [0]


def hensel_solve(g: Sequence[Coeff], a: LocalElem, max_iter: int = 64,
                 target: int | None = None) -> LocalElem:
    """Newton-lift an approximate simple root ``a`` of ``g`` to a root known
    to the field's working precision.

    Requires ``val(g(a)) >= 1`` and ``val(g'(a)) == 0``; returns ``b`` with
    ``val(g(b)) >= N`` and ``val(b - a) >= 1``.  ``target`` lowers N when the
    coefficients of g are themselves known to fewer digits.
    """
    K = a.field
    N = K.precision if target is None else min(target, K.precision)
    if not a.in_ring:
        raise HenselError("starting point must lie in the valuation ring")
    dg = poly_derivative(g)
    ga = eval_poly(g, a, strict=False)
    if not (ga.is_zero or ga.val >= 1):
        raise HenselError("g(a) is not in the maximal ideal")
    dga = eval_poly(dg, a, strict=False)
    if dga.is_zero or dga.is_vanished or dga.val != 0:
        raise HenselError("g'(a) is not a unit")
    b = a
    for _ in range(max_iter):
        gb = eval_poly(g, b, strict=False)
        if gb.is_zero or gb.val >= N:
            break
        if gb.is_vanished:
            raise PrecisionExhausted(
                f"g(b) only known modulo t^{gb.val}, below the working precision {N}")
        step = mul(gb, inv(eval_poly(dg, b, strict=False)), strict=False)
        b = sub(b, step, strict=False)
        if b.is_vanished:
            raise PrecisionExhausted("Newton iterate collapsed to an unknown small value")
    else:
        raise HenselError("Newton iteration did not converge")
    if not sub(b, a, strict=False).in_ideal:
        raise HenselError("lifted root left the residue class of a")
    return b


# --- residues ---------------------------------------------------------------

def residue(x: LocalElem) -> FqElem | int:
    """Residue class of an integral element: FqElem for F_q((t)), int for Q_p."""
    K = x.field
    if not x.in_ring:
        raise ValueError("residue of an element of negative valuation")
    if x.is_vanished and x.val <= 0:
        raise PrecisionExhausted("residue is not determined at this precision")
    code = 0 if (x.is_zero or x.val > 0 or x.is_vanished) else x.digits[0]
    if isinstance(K, PadicField):
        return code
    return K.residue.elem(code)


def residue_code(x: LocalElem) -> int:
    r = residue(x)
    return r.code if isinstance(r, FqElem) else r


def lift_residue(K: LocalFieldDesc, r: FqElem | int) -> LocalElem:
    """Naive constant lift of a residue class."""
    code = r.code if isinstance(r, FqElem) else int(r)
    if not 0 <= code < K.q:
        raise ValueError(f"residue {r} not in the residue field of {K}")
    return K.constant(code)


# --- enumeration ------------------------------------------------------------

def count_elements(K: LocalFieldDesc, vals: Sequence[int], prec: int) -> int:
    return len(vals) * (K.q - 1) * K.q**prec + 1


def enum_elements(K: LocalFieldDesc, vals: Iterable[int], prec: int,
                  budget: int | None = 10**6, per_class: int | None = None,
                  seed: int | None = None) -> Iterator[LocalElem]:
    """Zero, then every element ``t^v (d0 + d1 t + ... + d_prec t^prec)`` with
    ``v`` in ``vals`` and ``d0 != 0``.

    ``prec`` counts the digits past the leading one.  In sampling mode
    (``per_class`` given) each (valuation, leading digit) class receives
    ``per_class`` seeded random tails instead of all ``q**prec`` of them.
    """
    vals = list(vals)
    q = K.q
    yield K.zero
    if per_class is None:
        total = count_elements(K, vals, prec)
        if budget is not None and total > budget:
            raise BudgetExceeded(f"{total} elements exceed the enumeration budget {budget}")
        for v in vals:
            for lead in range(1, q):
                for tail in product(range(q), repeat=prec):
                    yield LocalElem(K, v, (lead,) + tail, prec + 1)
        return
    if seed is None:
        raise ValueError("sampling mode needs an explicit seed")
    rng = random.Random(seed)
    for v in vals:
        for lead in range(1, q):
            for _ in range(per_class):
                tail = tuple(rng.randrange(q) for _ in range(prec))
                yield LocalElem(K, v, (lead,) + tail, prec + 1)


# --- text form ---------------------------------------------------------------

def format_elem(x: LocalElem) -> str:
    """``t^v*(c0+c1*t+...)`` or ``p^v*(d0+d1*p+...)``; every known digit is
    printed so that the precision survives a round trip."""
    if x.is_zero:
        return "0"
    K = x.field
    if x.is_vanished:
        raise PrecisionExhausted("vanished values have no printed form")
    base = "t" if isinstance(K, LaurentField) else str(K.prime)
    terms = []
    for i, d in enumerate(x.digits):
        c = K.digit_str(d)
        terms.append(c if i == 0 else (f"{c}*{base}" if i == 1 else f"{c}*{base}^{i}"))
    return f"{base}^{x.val}*(" + "+".join(terms) + ")"


_ELEM = re.compile(r"^(t|\d+)\^(-?\d+)\*\((.*)\)$")
_DIGIT = re.compile(r"^(\d+|\[[\d,]*\])(?:\*(t|\d+)(?:\^(\d+))?)?$")


def parse_elem(text: str, K: LocalFieldDesc) -> LocalElem:
    s = text.replace(" ", "")
    if s == "0":
        return K.zero
    m = _ELEM.match(s)
    base = "t" if isinstance(K, LaurentField) else str(K.prime)
    if not m or m.group(1) != base:
        raise ValueError(f"cannot parse {text!r} as an element of {K}")
    val = int(m.group(2))
    digits = []
    for i, term in enumerate(_split_terms(m.group(3))):
        dm = _DIGIT.match(term)
        if not dm:
            raise ValueError(f"bad term {term!r} in {text!r}")
        c, b, e = dm.groups()
        power_ = 0 if b is None else (1 if e is None else int(e))
        if power_ != i or (b is not None and b != base):
            raise ValueError(f"term {term!r} out of order in {text!r}")
        if c.startswith("["):
            from .ffield import parse_elem as parse_fq
            digits.append(parse_fq(c, K.residue_field).code)
        else:
            digits.append(int(c))
    return K.elem(val, digits)


def _split_terms(body: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "+" and depth == 0:
            out.append(cur)
            cur = ""
        else:
            cur += ch
    out.append(cur)
    return out
