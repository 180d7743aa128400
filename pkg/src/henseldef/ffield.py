"""Finite fields F_{p^n}, polynomials over them, and the constructive
polynomial-existence searches used by the definability constructions.

Field elements are stored as integer *codes*: the coordinates
``(c0, ..., c_{n-1})`` with respect to the power basis of the modulus are
packed as ``c0 + c1*p + ... + c_{n-1}*p^(n-1)``.  A prime-subfield constant
``c`` therefore has code ``c`` in every extension.  The public wrapper types
:class:`FqElem` and :class:`FqPoly` carry the field along; the heavy scans
work on codes and numpy arrays directly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Iterable, Iterator, Sequence

import numpy as np

MAX_FIELD_SIZE = 2**20
MAX_COVER_SIZE = 2**14


class FieldError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def prime_factors(n: int) -> list[int]:
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def prime_power(q: int) -> tuple[int, int] | None:
    """Return ``(p, n)`` with ``q == p**n``, or None if q is not a prime power."""
    if q < 2:
        return None
    for p in prime_factors(q)[:1]:
        n = 0
        while q % p == 0:
            q //= p
            n += 1
        return (p, n) if q == 1 else None
    return None


# --- raw polynomial helpers over F_p (coefficient lists, lowest first) -----

def _trim(c: list[int]) -> list[int]:
    while c and c[-1] == 0:
        c.pop()
    return c


def _monic_candidates(q: int, degree: int) -> Iterator[list[int]]:
    """Monic polynomials of the given degree with coefficient codes in [0, q),
    in lexicographic order (highest non-leading coefficient most significant)."""
    for k in range(q**degree):
        coeffs = []
        for _ in range(degree):
            k, r = divmod(k, q)
            coeffs.append(r)
        yield coeffs + [1]


@dataclass(frozen=True)
class FieldDesc:
    """The finite field F_p[X]/(modulus) of size q = p**n."""

    p: int
    n: int
    modulus: tuple[int, ...]

    def __post_init__(self):
        if not is_prime(self.p):
            raise FieldError(f"{self.p} is not prime")
        if self.n < 1 or len(self.modulus) != self.n + 1 or self.modulus[-1] != 1:
            raise FieldError("modulus must be monic of degree n")
        if self.p**self.n > MAX_FIELD_SIZE:
            raise FieldError(f"field size {self.p}^{self.n} exceeds {MAX_FIELD_SIZE}")
        if self.n > 1 and not _irreducible_raw(list(self.modulus), self.p):
            raise FieldError(f"modulus {self.modulus} is reducible over F_{self.p}")

    def __repr__(self):
        return f"FieldDesc(F_{self.q})"

    def __str__(self):
        return f"F_{self.q}"

    @property
    def q(self) -> int:
        return self.p**self.n

    @property
    def is_prime_field(self) -> bool:
        return self.n == 1

    # --- codes <-> coordinates ------------------------------------------

    def coords(self, a: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.n):
            a, r = divmod(a, self.p)
            out.append(r)
        return tuple(out)

    def code(self, coords: Sequence[int]) -> int:
        if len(coords) != self.n:
            raise FieldError(f"expected {self.n} coordinates, got {len(coords)}")
        a = 0
        for c in reversed(coords):
            a = a * self.p + (c % self.p)
        return a

    def elem(self, value) -> FqElem:
        """Build an element from a code, a coordinate sequence or an FqElem."""
        if isinstance(value, FqElem):
            return FqElem(self, value.coeffs)
        if isinstance(value, int):
            if not 0 <= value < self.q:
                raise FieldError(f"code {value} out of range for {self}")
            return FqElem(self, self.coords(value))
        return FqElem(self, tuple(int(c) % self.p for c in value))

    def elements(self) -> list[FqElem]:
        return [self.elem(a) for a in range(self.q)]

    @property
    def zero(self) -> FqElem:
        return self.elem(0)

    @property
    def one(self) -> FqElem:
        return self.elem(1)

    # --- scalar arithmetic on codes --------------------------------------

    def add(self, a: int, b: int) -> int:
        if self.n == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        p, out, scale = self.p, 0, 1
        while a or b:
            a, ra = divmod(a, p)
            b, rb = divmod(b, p)
            out += ((ra + rb) % p) * scale
            scale *= p
        return out

    def neg(self, a: int) -> int:
        if self.n == 1:
            return (-a) % self.p
        if self.p == 2:
            return a
        p, out, scale = self.p, 0, 1
        while a:
            a, r = divmod(a, p)
            out += ((-r) % p) * scale
            scale *= p
        return out

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.n == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        exp, log = self._tables
        return int(exp[(log[a] + log[b]) % (self.q - 1)])

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.n == 1:
            return pow(a, -1, self.p)
        exp, log = self._tables
        return int(exp[(-log[a]) % (self.q - 1)])

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return self.pow(self.inv(a), -e)
        if a == 0:
            return 1 if e == 0 else 0
        if self.n == 1:
            return pow(a, e, self.p)
        exp, log = self._tables
        return int(exp[(log[a] * e) % (self.q - 1)])

    def _slow_mul(self, a: int, b: int) -> int:
        """Schoolbook multiplication modulo the modulus; builds the log tables."""
        p, n, mod = self.p, self.n, self.modulus
        x, y = self.coords(a), self.coords(b)
        prod = [0] * (2 * n - 1)
        for i, xi in enumerate(x):
            if xi:
                for j, yj in enumerate(y):
                    prod[i + j] = (prod[i + j] + xi * yj) % p
        for d in range(2 * n - 2, n - 1, -1):
            c = prod[d]
            if c:
                for i in range(n + 1):
                    prod[d - n + i] = (prod[d - n + i] - c * mod[i]) % p
        return self.code(prod[:n])

    def _slow_pow(self, a: int, e: int) -> int:
        result = 1
        while e:
            if e & 1:
                result = self._slow_mul(result, a)
            a = self._slow_mul(a, a)
            e >>= 1
        return result

    @cached_property
    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        q, p, n = self.q, self.p, self.n
        order = q - 1
        if q == 2:
            return np.array([1], dtype=np.int64), np.array([-1, 0], dtype=np.int64)
        cofactors = [order // r for r in prime_factors(order)]
        g = next(c for c in range(2, q)
                 if all(self._slow_pow(c, e) != 1 for e in cofactors))
        # powers g^0..g^(B-1) sequentially, then whole blocks by the linear map
        # "multiply by g^B" acting on coordinate vectors
        block = max(1, int(order**0.5))
        first = [1]
        for _ in range(block - 1):
            first.append(self._slow_mul(first[-1], g))
        weights = p ** np.arange(n, dtype=np.int64)
        digits = np.array([self.coords(c) for c in first], dtype=np.int64)
        gb = self._slow_mul(first[-1], g)
        mat = np.array([self.coords(self._slow_mul(gb, p**i)) for i in range(n)],
                       dtype=np.int64)
        chunks = [digits @ weights]
        done = block
        while done < order:
            digits = (digits @ mat) % p
            chunks.append(digits @ weights)
            done += block
        exp = np.concatenate(chunks)[:order]
        log = np.full(q, -1, dtype=np.int64)
        log[exp] = np.arange(order, dtype=np.int64)
        return exp, log

    # --- vectorised arithmetic on code arrays -----------------------------

    def vadd(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.n == 1:
            return (a + b) % self.p
        if self.p == 2:
            return a ^ b
        out = np.zeros(np.broadcast(a, b).shape, dtype=np.int64)
        scale = 1
        for _ in range(self.n):
            out += ((a // scale % self.p + b // scale % self.p) % self.p) * scale
            scale *= self.p
        return out

    def vmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        if self.n == 1:
            return a * b % self.p
        exp, log = self._tables
        a, b = np.broadcast_arrays(a, b)
        out = exp[(log[a] + log[b]) % (self.q - 1)]
        return np.where((a == 0) | (b == 0), 0, out)

    def veval(self, coeffs: Sequence[int], xs: np.ndarray | None = None) -> np.ndarray:
        """Evaluate a polynomial (coefficient codes, lowest first) at every
        element of ``xs`` (default: the whole field)."""
        if xs is None:
            xs = np.arange(self.q, dtype=np.int64)
        acc = np.zeros_like(xs)
        for c in reversed(coeffs):
            acc = self.vadd(self.vmul(acc, xs), np.full_like(xs, c))
        return acc


@dataclass(frozen=True)
class FqElem:
    field: FieldDesc
    coeffs: tuple[int, ...]

    def __post_init__(self):
        if len(self.coeffs) != self.field.n or any(
                not 0 <= c < self.field.p for c in self.coeffs):
            raise FieldError(f"bad coordinates {self.coeffs} for {self.field}")

    @property
    def code(self) -> int:
        return self.field.code(self.coeffs)

    def _other(self, other) -> int:
        if isinstance(other, FqElem):
            if other.field != self.field:
                raise FieldError("elements of different fields")
            return other.code
        if isinstance(other, int):
            return other % self.field.p
        return NotImplemented

    def _wrap(self, code: int) -> FqElem:
        return FqElem(self.field, self.field.coords(code))

    def __add__(self, other):
        return self._wrap(self.field.add(self.code, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.field.sub(self.code, self._other(other)))

    def __rsub__(self, other):
        return self._wrap(self.field.sub(self._other(other), self.code))

    def __mul__(self, other):
        return self._wrap(self.field.mul(self.code, self._other(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.field.mul(self.code, self.field.inv(self._other(other))))

    def __neg__(self):
        return self._wrap(self.field.neg(self.code))

    def __pow__(self, e: int):
        return self._wrap(self.field.pow(self.code, e))

    def inverse(self) -> FqElem:
        return self._wrap(self.field.inv(self.code))

    def __bool__(self):
        return any(self.coeffs)

    def __str__(self):
        return "[" + ",".join(map(str, self.coeffs)) + "]"


def parse_elem(text: str, field: FieldDesc) -> FqElem:
    m = re.fullmatch(r"\s*\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]\s*", text)
    if not m:
        raise FieldError(f"cannot parse field element {text!r}")
    return FqElem(field, tuple(int(c) for c in m.group(1).split(",")))


@dataclass(frozen=True)
class FqPoly:
    """Polynomial over a finite field, coefficients lowest degree first."""

    field: FieldDesc
    coeffs: tuple[int, ...]  # codes; trailing zeros stripped

    def __post_init__(self):
        c = list(self.coeffs)
        _trim(c)
        object.__setattr__(self, "coeffs", tuple(c))

    @classmethod
    def from_elems(cls, elems: Sequence[FqElem]) -> FqPoly:
        if not elems:
            raise FieldError("cannot infer the field of an empty coefficient list")
        field = elems[0].field
        if any(e.field != field for e in elems):
            raise FieldError("coefficients from different fields")
        return cls(field, tuple(e.code for e in elems))

    @property
    def elems(self) -> list[FqElem]:
        return [self.field.elem(c) for c in self.coeffs]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return bool(self.coeffs) and self.coeffs[-1] == 1

    def __call__(self, x: FqElem | int) -> FqElem:
        a = x.code if isinstance(x, FqElem) else x
        return self.field.elem(_peval(self.coeffs, a, self.field))

    def derivative(self) -> FqPoly:
        F = self.field
        return FqPoly(F, tuple(F.mul(c, i % F.p) for i, c in enumerate(self.coeffs))[1:])

    def embed(self, field: FieldDesc) -> FqPoly:
        """View a prime-field polynomial as a polynomial over an extension."""
        if field == self.field:
            return self
        if not self.field.is_prime_field or self.field.p != field.p:
            raise FieldError(f"cannot embed {self.field} into {field}")
        return FqPoly(field, self.coeffs)

    def __str__(self):
        return format_poly(self)


def _peval(coeffs: Sequence[int], a: int, F: FieldDesc) -> int:
    acc = 0
    for c in reversed(coeffs):
        acc = F.add(F.mul(acc, a), c)
    return acc


def _pdivmod(a: Sequence[int], b: Sequence[int], F: FieldDesc) -> tuple[list[int], list[int]]:
    r = list(a)
    _trim(r)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    db = len(b) - 1
    lead_inv = F.inv(b[-1])
    quot = [0] * max(0, len(r) - db)
    while len(r) - 1 >= db and r:
        shift = len(r) - 1 - db
        c = F.mul(r[-1], lead_inv)
        quot[shift] = c
        for i, bi in enumerate(b):
            r[shift + i] = F.sub(r[shift + i], F.mul(c, bi))
        _trim(r)
    return quot, r


def _pgcd(a: Sequence[int], b: Sequence[int], F: FieldDesc) -> list[int]:
    a, b = _trim(list(a)), _trim(list(b))
    while b:
        a, b = b, _pdivmod(a, b, F)[1]
    return a


def _irreducible_raw(coeffs: list[int], p: int) -> bool:
    F = FieldDesc(p, 1, (0, 1))
    return _irreducible_codes(coeffs, F)


def _irreducible_codes(coeffs: Sequence[int], F: FieldDesc) -> bool:
    deg = len(coeffs) - 1
    for d in range(1, deg // 2 + 1):
        for g in _monic_candidates(F.q, d):
            if not _pdivmod(coeffs, g, F)[1]:
                return False
    return True


def poly_is_irreducible(f: FqPoly) -> bool:
    """Trial division by every monic polynomial of degree <= deg(f)/2."""
    if not f.is_monic:
        raise FieldError("poly_is_irreducible expects a monic polynomial")
    if f.degree < 1:
        raise FieldError("constant polynomials are neither irreducible nor reducible")
    return _irreducible_codes(f.coeffs, f.field)


def make_field(p: int, n: int = 1) -> FieldDesc:
    """F_{p^n} with the lexicographically smallest monic irreducible modulus."""
    if not is_prime(p):
        raise FieldError(f"{p} is not prime")
    if n < 1:
        raise FieldError("extension degree must be >= 1")
    if p**n > MAX_FIELD_SIZE:
        raise FieldError(f"field size {p}^{n} exceeds {MAX_FIELD_SIZE}")
    if n == 1:
        return FieldDesc(p, 1, (0, 1))
    for cand in _monic_candidates(p, n):
        if _irreducible_raw(cand, p):
            return FieldDesc(p, n, tuple(cand))
    raise AssertionError("unreachable: irreducible polynomials exist in every degree")


def find_trace_poly(p: int, m: int) -> FqPoly:
    """First monic irreducible f of degree m over F_p (lexicographic order)
    with f'(0) != 0, i.e. with nonzero linear coefficient."""
    if not is_prime(p):
        raise FieldError(f"{p} is not prime")
    if m < 1:
        raise FieldError("degree must be >= 1")
    F = make_field(p)
    for cand in _monic_candidates(p, m):
        if (m == 1 or cand[1] != 0) and _irreducible_codes(cand, F):
            return FqPoly(F, tuple(cand))
    raise AssertionError("unreachable: a normal basis always exists")


def smallest_nondivisor(n: int) -> int:
    m = 2
    while n % m == 0:
        m += 1
    return m


def find_nonroot_poly(field: FieldDesc) -> tuple[FqPoly, FqElem]:
    """An irreducible f over the prime field without roots in ``field``, and
    a = 0 with f'(a) != 0."""
    m = smallest_nondivisor(field.n)
    return find_trace_poly(field.p, m), field.zero


def residue_no_root(f: FqPoly, field: FieldDesc) -> bool:
    if not f.coeffs:
        raise FieldError("the zero polynomial has every element as a root")
    f = f.embed(field)
    return not np.any(field.veval(f.coeffs) == 0)


def is_squarefree(f: FqPoly) -> bool:
    if f.degree < 1:
        raise FieldError("is_squarefree expects a non-constant polynomial")
    df = f.derivative()
    if not df.coeffs:
        return False
    return len(_pgcd(f.coeffs, df.coeffs, f.field)) == 1


def image_logs(f: FqPoly, field: FieldDesc) -> tuple[np.ndarray, bool]:
    """Discrete logs of the nonzero values of f on ``field`` and whether 0 is a value."""
    vals = field.veval(f.embed(field).coeffs)
    nz = np.unique(vals[vals != 0])
    # prime fields skip the log tables for scalar work; built here on demand
    log = field._tables[1]
    return np.unique(log[nz]), bool(np.any(vals == 0))


def product_set_covers(logs: np.ndarray, order: int) -> np.ndarray:
    """Boolean mask over Z/order marking sums of two logs, i.e. the nonzero
    elements of the product set."""
    hit = np.zeros(order, dtype=bool)
    if len(logs) == 0:
        return hit
    if len(logs) ** 2 <= 4_000_000:
        hit[np.add.outer(logs, logs).ravel() % order] = True
        return hit
    for a in logs:
        hit[(logs + a) % order] = True
        if hit.all():
            break
    return hit


def product_cover_check(f: FqPoly, field: FieldDesc) -> bool:
    """Exhaustively decide whether f(F)*f(F) together with 0 is all of F."""
    if f.degree < 1:
        raise FieldError("product_cover_check expects a non-constant polynomial")
    if field.q > MAX_COVER_SIZE:
        raise FieldError(f"q = {field.q} exceeds the coverage scan bound {MAX_COVER_SIZE}")
    if field.q == 2:
        # F^x = {1}
        return bool(np.any(field.veval(f.embed(field).coeffs) == 1))
    logs, _ = image_logs(f, field)
    return bool(product_set_covers(logs, field.q - 1).all())


def legendre(n: int, p: int) -> int:
    if p == 2 or not is_prime(p):
        raise FieldError(f"legendre symbol needs an odd prime, got {p}")
    r = pow(n % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


# --- text form -----------------------------------------------------------

def _format_coeff(field: FieldDesc | None, c: int) -> str:
    if field is None or field.is_prime_field:
        return str(c)
    return str(field.elem(c))


def format_poly(f: FqPoly | Sequence[int], field: FieldDesc | None = None) -> str:
    """Render as e.g. ``X^2+X+1``; integer sequences are treated as Z[X]."""
    if isinstance(f, FqPoly):
        field, coeffs = f.field, f.coeffs
    else:
        coeffs = list(f)
        _trim(coeffs)
    if not coeffs:
        return "0"
    parts = []
    for i in range(len(coeffs) - 1, -1, -1):
        c = coeffs[i]
        if c == 0:
            continue
        mono = "" if i == 0 else ("X" if i == 1 else f"X^{i}")
        neg = field is None and c < 0
        mag = -c if neg else c
        if mono and mag == 1:
            body = mono
        else:
            body = _format_coeff(field, mag) + ("*" + mono if mono else "")
        sign = "-" if neg else "+"
        parts.append((sign, body))
    head_sign, head = parts[0]
    out = ("-" if head_sign == "-" else "") + head
    for sign, body in parts[1:]:
        out += sign + body
    return out


_TERM = re.compile(r"([+-]?)(?:(\d+|\[[\d,\s]*\])\s*\*?\s*)?(X(?:\^(\d+))?)?")


def parse_poly(text: str, field: FieldDesc | None = None) -> FqPoly | tuple[int, ...]:
    """Inverse of :func:`format_poly`.  Without a field the result is an
    integer coefficient tuple (lowest degree first)."""
    s = text.replace(" ", "")
    if not s:
        raise FieldError("empty polynomial")
    coeffs: dict[int, int] = {}
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise FieldError(f"cannot parse polynomial {text!r} at position {pos}")
        sign, c, mono, e = m.groups()
        if c is None:
            val = 1
        elif c.startswith("["):
            if field is None:
                raise FieldError("vector coefficients need a field")
            val = parse_elem(c, field).code
        else:
            val = int(c) if field is None else int(c) % field.p
        deg = 0 if mono is None else (1 if e is None else int(e))
        if field is None:
            coeffs[deg] = coeffs.get(deg, 0) + (-val if sign == "-" else val)
        else:
            v = field.neg(val) if sign == "-" else val
            coeffs[deg] = field.add(coeffs.get(deg, 0), v)
        pos = m.end()
    out = [0] * (max(coeffs) + 1)
    for d, c in coeffs.items():
        out[d] = c
    if field is None:
        return tuple(_trim(out)) or (0,)
    return FqPoly(field, tuple(out))


def monic_polys(field: FieldDesc, degree: int) -> Iterable[FqPoly]:
    for c in product(range(field.q), repeat=degree):
        yield FqPoly(field, tuple(reversed(c)) + (1,))
