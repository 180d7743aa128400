"""Existential-positive formulas in the ring language and the templates
that define valuation rings.

Terms are built from variables, integer constants, ``add``, ``sub`` and
``mul``; formulas from ``=``, ``and``, ``or`` and ``exists``.  Every
template below has exactly one free variable, ``x``.

Composite templates rename bound variables by appending the name of the
slot they are plugged into (``y`` inside the ``u`` slot becomes ``y_u``),
and whole disjuncts/conjuncts get a further suffix (``_f``, ``_k3``,
``_n2``).  The witness builders in :mod:`henseldef.evaluate` rely on this
scheme.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from .ffield import FieldError, FqPoly, format_poly


# --- terms ----------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Add:
    left: Term
    right: Term


@dataclass(frozen=True)
class Sub:
    left: Term
    right: Term


@dataclass(frozen=True)
class Mul:
    left: Term
    right: Term


Term = Union[Var, Const, Add, Sub, Mul]


# --- formulas -------------------------------------------------------------

@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class And:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or:
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Exists:
    vars: tuple[str, ...]
    body: Formula


Formula = Union[Eq, And, Or, Exists]

MAX_EXPONENT = 2**16


class ParseError(ValueError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


def power(term: Term, e: int) -> Term:
    """``term**e`` as a repeated-squaring DAG of Mul nodes (O(log e) nodes)."""
    if e < 1:
        raise ValueError("exponent must be >= 1")
    if e > MAX_EXPONENT:
        raise ValueError(f"exponent {e} exceeds the term-size budget {MAX_EXPONENT}")
    result = None
    base = term
    while e:
        if e & 1:
            result = base if result is None else Mul(result, base)
        e >>= 1
        if e:
            base = Mul(base, base)
    return result


def poly_term(f: Sequence[int], var: str) -> Term:
    """Integer polynomial (lowest degree first) as a term in ``var``, highest
    monomial first: X^2+X+1 -> (add (add (mul y y) y) 1)."""
    v = Var(var)
    out: Term | None = None
    for i in range(len(f) - 1, -1, -1):
        c = f[i]
        if c == 0:
            continue
        mag = abs(c)
        if i == 0:
            mono: Term = Const(mag)
        else:
            mono = power(v, i)
            if mag != 1:
                mono = Mul(Const(mag), mono)
        if out is None:
            out = mono if c > 0 else Sub(Const(0), mono)
        else:
            out = Add(out, mono) if c > 0 else Sub(out, mono)
    if out is None:
        return Const(0)
    return out


# --- structural queries -----------------------------------------------------

def term_vars(t: Term, _memo: dict | None = None) -> frozenset[str]:
    memo = {} if _memo is None else _memo
    key = id(t)
    if key in memo:
        return memo[key]
    if isinstance(t, Var):
        out = frozenset((t.name,))
    elif isinstance(t, Const):
        out = frozenset()
    else:
        out = term_vars(t.left, memo) | term_vars(t.right, memo)
    memo[key] = out
    return out


def free_vars(phi: Formula) -> frozenset[str]:
    if isinstance(phi, Eq):
        return term_vars(phi.left) | term_vars(phi.right)
    if isinstance(phi, (And, Or)):
        out = frozenset()
        for a in phi.args:
            out |= free_vars(a)
        return out
    if isinstance(phi, Exists):
        return free_vars(phi.body) - frozenset(phi.vars)
    raise TypeError(f"not a formula: {phi!r}")


def bound_vars(phi: Formula) -> list[str]:
    if isinstance(phi, Eq):
        return []
    if isinstance(phi, (And, Or)):
        return [v for a in phi.args for v in bound_vars(a)]
    return list(phi.vars) + bound_vars(phi.body)


def is_existential_positive(phi) -> bool:
    if isinstance(phi, Eq):
        return True
    if isinstance(phi, (And, Or)):
        return all(is_existential_positive(a) for a in phi.args)
    if isinstance(phi, Exists):
        return is_existential_positive(phi.body)
    return False


def exists_depth(phi: Formula) -> int:
    """Maximal nesting depth of existential blocks."""
    if isinstance(phi, Eq):
        return 0
    if isinstance(phi, (And, Or)):
        return max(exists_depth(a) for a in phi.args)
    return 1 + exists_depth(phi.body)


def _map_term(t: Term, fn, memo: dict) -> Term:
    key = id(t)
    if key in memo:
        return memo[key]
    if isinstance(t, Var):
        out = fn(t)
    elif isinstance(t, Const):
        out = t
    else:
        out = type(t)(_map_term(t.left, fn, memo), _map_term(t.right, fn, memo))
    memo[key] = out
    return out


def rename(phi: Formula, mapping: dict[str, str]) -> Formula:
    """Rename free occurrences of variables (capture is the caller's problem)."""
    def go(f, shadow):
        if isinstance(f, Eq):
            fn = lambda v: Var(mapping[v.name]) if v.name in mapping and v.name not in shadow else v  # noqa: E731
            return Eq(_map_term(f.left, fn, {}), _map_term(f.right, fn, {}))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(go(a, shadow) for a in f.args))
        return Exists(f.vars, go(f.body, shadow | set(f.vars)))

    return go(phi, frozenset())


def suffix_bound(phi: Formula, suffix: str) -> Formula:
    """Append ``suffix`` to every bound variable (binder and occurrences)."""
    def go(f, env):
        if isinstance(f, Eq):
            fn = lambda v: Var(env[v.name]) if v.name in env else v  # noqa: E731
            memo: dict = {}
            return Eq(_map_term(f.left, fn, memo), _map_term(f.right, fn, memo))
        if isinstance(f, (And, Or)):
            return type(f)(tuple(go(a, env) for a in f.args))
        inner = dict(env)
        inner.update({v: v + suffix for v in f.vars})
        return Exists(tuple(v + suffix for v in f.vars), go(f.body, inner))

    return go(phi, {})


def plug(phi: Formula, slot: str) -> Formula:
    """Instantiate a one-variable template at the variable ``slot``."""
    return rename(suffix_bound(phi, "_" + slot), {"x": slot})


# --- templates ---------------------------------------------------------------

X = Var("x")


def _check_monic(f: Sequence[int]):
    if len(f) < 2 or f[-1] != 1:
        raise ValueError(f"expected a monic polynomial of degree >= 1, got {format_poly(f)}")


def lift_poly(f: FqPoly) -> tuple[int, ...]:
    """Monic integer lift with coefficients in [0, p)."""
    if not f.field.is_prime_field:
        raise FieldError("lift_poly needs a polynomial over a prime field")
    if not f.is_monic:
        raise FieldError("lift_poly needs a monic polynomial")
    return tuple(f.coeffs)


def _inverse_pair(f: Sequence[int]) -> list[Formula]:
    return [Eq(Mul(Var("y1"), poly_term(f, "y")), Const(1)),
            Eq(Mul(Var("z1"), poly_term(f, "z")), Const(1))]


def phi_f(f: Sequence[int]) -> Formula:
    """exists y,z,y1,z1: x = y1 - z1 and y1 f(y) = 1 and z1 f(z) = 1."""
    _check_monic(f)
    y1, z1 = Var("y1"), Var("z1")
    return Exists(("y", "z", "y1", "z1"),
                  And((Eq(X, Sub(y1, z1)), *_inverse_pair(f))))


def psi_f(f: Sequence[int]) -> Formula:
    """exists y,z,y1,z1: x = 0 or (x = y1 z1 and y1 f(y) = 1 and z1 f(z) = 1)."""
    _check_monic(f)
    y1, z1 = Var("y1"), Var("z1")
    return Exists(("y", "z", "y1", "z1"),
                  Or((Eq(X, Const(0)),
                      And((Eq(X, Mul(y1, z1)), *_inverse_pair(f))))))


def eta(phi: Formula, psi: Formula) -> Formula:
    """exists u,t: x = u + t and phi(u) and psi(t)."""
    u, t = Var("u"), Var("t")
    return Exists(("u", "t"), And((Eq(X, Add(u, t)), plug(phi, "u"), plug(psi, "t"))))


def eta_f(f: Sequence[int]) -> Formula:
    return eta(phi_f(f), psi_f(f))


def psi_q_power(q: int) -> Formula:
    """x^q - x = 0."""
    if q < 2:
        raise ValueError("q must be >= 2")
    return Eq(Sub(power(X, q), X), Const(0))


def psi_k(p: int, k: int) -> Formula:
    if k < 1:
        raise ValueError("k must be >= 1")
    if p**k > MAX_EXPONENT:
        raise ValueError(f"p^k = {p}^{k} exceeds the term-size budget {MAX_EXPONENT}")
    return psi_q_power(p**k)


def eta_k(p: int, k: int, f: Sequence[int]) -> Formula:
    return eta(phi_f(f), psi_k(p, k))


def finite_formula(q: int, f: Sequence[int]) -> Formula:
    if q > MAX_EXPONENT:
        raise ValueError(f"q = {q} exceeds the term-size budget {MAX_EXPONENT}")
    return eta(phi_f(f), psi_q_power(q))


def c_bound(d: int) -> int:
    """Field-size threshold (2d-1)^4 above which product coverage is guaranteed."""
    if d < 1:
        raise ValueError("degree must be >= 1")
    return (2 * d - 1) ** 4


def build_M(p: int, m: int) -> list[int]:
    """Exponents k with m not dividing k and p^k <= c(m)."""
    if m < 2:
        raise ValueError("m must be >= 2")
    bound = c_bound(m)
    out, k = [], 1
    while p**k <= bound:
        if k % m:
            out.append(k)
        k += 1
    return out


def uniformk_formula(p: int, m: int) -> Formula:
    """eta_{f~} or the disjunction of eta_k over k in M."""
    from .ffield import find_trace_poly
    f = lift_poly(find_trace_poly(p, m))
    disjuncts = [suffix_bound(eta_f(f), "_f")]
    disjuncts += [suffix_bound(eta_k(p, k, f), f"_k{k}") for k in build_M(p, m)]
    return Or(tuple(disjuncts))


def f_n(n: int) -> tuple[int, ...]:
    """X^2 - n."""
    return (-n, 0, 1)


def phi_n(n: int) -> Formula:
    """(exists y: y^2 = n) or eta_{X^2 - n}(x)."""
    if n < 2:
        raise ValueError("n must be >= 2")
    y = Var("y")
    return Or((Exists(("y",), Eq(Mul(y, y), Const(n))), eta_f(f_n(n))))


def uniform_formula(N: int) -> Formula:
    if N < 2:
        raise ValueError("N must be >= 2")
    return And(tuple(suffix_bound(phi_n(n), f"_n{n}") for n in range(2, N + 1)))


# --- S-expressions -----------------------------------------------------------

def term_to_sexpr(t: Term) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Const):
        return str(t.value)
    op = {Add: "add", Sub: "sub", Mul: "mul"}[type(t)]
    return f"({op} {term_to_sexpr(t.left)} {term_to_sexpr(t.right)})"


def to_sexpr(phi: Formula) -> str:
    if isinstance(phi, Eq):
        return f"(= {term_to_sexpr(phi.left)} {term_to_sexpr(phi.right)})"
    if isinstance(phi, (And, Or)):
        op = "and" if isinstance(phi, And) else "or"
        return f"({op} " + " ".join(to_sexpr(a) for a in phi.args) + ")"
    if isinstance(phi, Exists):
        return f"(exists ({' '.join(phi.vars)}) {to_sexpr(phi.body)})"
    raise TypeError(f"not a formula: {phi!r}")


_TOKEN = re.compile(r"\s*(?:(\()|(\))|(-?\d+)|([A-Za-z_][A-Za-z0-9_]*)|(=))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}",
                             pos + len(text[pos:]) - len(text[pos:].lstrip()))
        start = m.start(m.lastindex)
        kind = ["(", ")", "int", "sym", "sym"][m.lastindex - 1]
        out.append((kind, m.group(m.lastindex), start))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        if self.i >= len(self.toks):
            raise ParseError("unexpected end of input", len(self.text))
        return self.toks[self.i]

    def take(self, kind: str | None = None, value: str | None = None):
        tok = self.peek()
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            raise ParseError(f"expected {value or kind}, found {tok[1]!r}", tok[2])
        self.i += 1
        return tok

    def term(self) -> Term:
        kind, val, pos = self.peek()
        if kind == "int":
            self.i += 1
            return Const(int(val))
        if kind == "sym":
            if val in ("add", "sub", "mul", "and", "or", "exists", "="):
                raise ParseError(f"keyword {val!r} used as a variable", pos)
            self.i += 1
            return Var(val)
        self.take("(")
        _, op, pos = self.take("sym")
        cls = {"add": Add, "sub": Sub, "mul": Mul}.get(op)
        if cls is None:
            raise ParseError(f"unknown term operator {op!r}", pos)
        left = self.term()
        right = self.term()
        self.take(")")
        return cls(left, right)

    def formula(self) -> Formula:
        self.take("(")
        _, op, pos = self.take("sym")
        if op == "=":
            out: Formula = Eq(self.term(), self.term())
        elif op in ("and", "or"):
            args = []
            while self.peek()[0] != ")":
                args.append(self.formula())
            if not args:
                raise ParseError(f"empty {op}", pos)
            out = (And if op == "and" else Or)(tuple(args))
        elif op == "exists":
            self.take("(")
            names = []
            while self.peek()[0] != ")":
                names.append(self.take("sym")[1])
            if not names:
                raise ParseError("empty variable list", pos)
            self.take(")")
            out = Exists(tuple(names), self.formula())
        else:
            raise ParseError(f"unknown formula operator {op!r}", pos)
        self.take(")")
        return out


def parse(text: str) -> Formula:
    p = _Parser(text)
    phi = p.formula()
    if p.i != len(p.toks):
        raise ParseError("trailing input", p.toks[p.i][2])
    return phi
