"""Membership of local-field elements in formula-defined sets.

Two asymmetric directions:

* ``O`` is contained in the defined set: shown point by point by building an
  explicit assignment of every bound variable (:func:`construct_witness`)
  and re-evaluating every equation under it.
* The defined set is contained in ``O``: shown once by a residue-level
  certificate (:func:`soundness_certificate`) and cross-checked by a
  bounded brute-force search over a finite pool of truncated elements
  (:func:`bounded_refute`).
"""

from __future__ import annotations

import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass, field as dc_field
from functools import cached_property, lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from . import formula as fm
from .ffield import (FieldDesc, FqPoly, find_nonroot_poly, find_trace_poly, format_poly,
                     is_squarefree, make_field, residue_no_root)
from .localfield import (BudgetExceeded, HenselError, LocalElem, LocalFieldDesc,
                         PadicField, PrecisionExhausted, add, agrees, count_elements, defect,
                         enum_elements, eval_poly, format_elem, hensel_solve, inv, lift_residue,
                         mul, residue_code, sub)

INF = float("inf")
REPORT_VERSION = 1


class CoverageFailure(ValueError):
    """No witness exists at residue level for the requested class."""


# --- term and formula evaluation -------------------------------------------------

def eval_term(t: fm.Term, env: dict[str, LocalElem], K: LocalFieldDesc,
              memo: dict | None = None) -> LocalElem:
    """Value of ``t`` under ``env`` (non-strict: may return a vanished value)."""
    memo = {} if memo is None else memo
    key = id(t)
    hit = memo.get(key)
    if hit is not None:
        return hit
    if isinstance(t, fm.Var):
        out = env[t.name]
    elif isinstance(t, fm.Const):
        out = K.from_int(t.value)
    else:
        a = eval_term(t.left, env, K, memo)
        b = eval_term(t.right, env, K, memo)
        if isinstance(t, fm.Add):
            out = add(a, b, strict=False)
        elif isinstance(t, fm.Sub):
            out = sub(a, b, strict=False)
        else:
            out = mul(a, b, strict=False)
    memo[key] = out
    return out


def residual(phi: fm.Formula, env: dict[str, LocalElem], K: LocalFieldDesc) -> float:
    """Absolute precision to which ``phi`` holds under the (total) assignment.

    Equations score the valuation of ``left - right``; ``and`` takes the
    minimum, ``or`` the maximum, and existential blocks read their bound
    variables from ``env``.  Atoms with unassigned variables score -inf.
    """
    memo: dict = {}

    def go(f):
        if isinstance(f, fm.Eq):
            try:
                return defect(eval_term(f.left, env, K, memo), eval_term(f.right, env, K, memo))
            except KeyError:
                return -INF
        if isinstance(f, fm.And):
            return min(go(a) for a in f.args)
        if isinstance(f, fm.Or):
            return max(go(a) for a in f.args)
        return go(f.body)

    return go(phi)


# --- definitions ---------------------------------------------------------------

@dataclass(frozen=True)
class Definition:
    """A named formula template together with its parameters.

    kinds: ``finite`` (q, f), ``eta_f`` (f), ``eta_k`` (p, k, f),
    ``uniformk`` (p, m) and ``uniform`` (N).
    """

    kind: str
    f: tuple[int, ...] | None = None
    q: int | None = None
    p: int | None = None
    k: int | None = None
    m: int | None = None
    N: int | None = None

    @classmethod
    def finite(cls, q: int, f: Sequence[int] | None = None) -> Definition:
        if f is None:
            f = fm.lift_poly(find_nonroot_poly(_field_of_size(q))[0])
        return cls("finite", f=tuple(f), q=q)

    @classmethod
    def eta_f(cls, f: Sequence[int]) -> Definition:
        return cls("eta_f", f=tuple(f))

    @classmethod
    def eta_k(cls, p: int, k: int, f: Sequence[int]) -> Definition:
        return cls("eta_k", f=tuple(f), p=p, k=k)

    @classmethod
    def uniformk(cls, p: int, m: int) -> Definition:
        return cls("uniformk", f=fm.lift_poly(find_trace_poly(p, m)), p=p, m=m)

    @classmethod
    def uniform(cls, N: int) -> Definition:
        return cls("uniform", N=N)

    @cached_property
    def formula(self) -> fm.Formula:
        if self.kind == "finite":
            return fm.finite_formula(self.q, self.f)
        if self.kind == "eta_f":
            return fm.eta_f(self.f)
        if self.kind == "eta_k":
            return fm.eta_k(self.p, self.k, self.f)
        if self.kind == "uniformk":
            return fm.uniformk_formula(self.p, self.m)
        if self.kind == "uniform":
            return fm.uniform_formula(self.N)
        raise ValueError(f"unknown definition kind {self.kind!r}")

    @property
    def ident(self) -> str:
        fs = format_poly(self.f) if self.f else None
        if self.kind == "finite":
            return f"finite(q={self.q},f={fs})"
        if self.kind == "eta_f":
            return f"eta_f(f={fs})"
        if self.kind == "eta_k":
            return f"eta_k(p={self.p},k={self.k},f={fs})"
        if self.kind == "uniformk":
            return f"uniformk(p={self.p},m={self.m})"
        return f"uniform(N={self.N})"

    @property
    def M(self) -> list[int]:
        return fm.build_M(self.p, self.m)


def _field_of_size(q: int) -> FieldDesc:
    from .ffield import prime_power
    pp = prime_power(q)
    if pp is None:
        raise ValueError(f"{q} is not a prime power")
    return make_field(*pp)


# --- residue-level helpers --------------------------------------------------------

def reduce_poly(f: Sequence[int], K: LocalFieldDesc) -> FqPoly:
    """Reduction of an integer polynomial into the residue field of K."""
    p = K.p
    return FqPoly(make_field(p), tuple(c % p for c in f)).embed(K.residue_field)


def first_simple_point(f: Sequence[int], K: LocalFieldDesc) -> int:
    """Smallest residue code a with f'(a) != 0 in the residue field."""
    F = K.residue_field
    df = reduce_poly(f, K).derivative()
    if not df.coeffs:
        raise HenselError(f"{format_poly(f)} has zero derivative modulo {K.p}")
    nz = np.flatnonzero(F.veval(df.coeffs))
    if len(nz) == 0:
        raise HenselError(f"the derivative of {format_poly(f)} vanishes on the residue field")
    return int(nz[0])


class ProductSolver:
    """Lexicographically first residue pair (y, z) with f(y) f(z) = r^-1."""

    def __init__(self, f: Sequence[int], F: FieldDesc, fbar: FqPoly):
        self.F = F
        self.vals = F.veval(fbar.coeffs)
        first: dict[int, int] = {}
        for code in range(F.q):
            v = int(self.vals[code])
            if v and v not in first:
                first[v] = code
        self.first = first
        self._order = [c for c in range(F.q) if self.vals[c]]

    def pair(self, r: int) -> tuple[int, int]:
        if r == 0:
            raise ValueError("the zero residue is covered by the x = 0 disjunct")
        F = self.F
        target = F.inv(r)
        for y in self._order:
            z = self.first.get(F.mul(target, F.inv(int(self.vals[y]))))
            if z is not None:
                return y, z
        raise CoverageFailure(
            f"residue {F.elem(r)} is not of the form (f(y) f(z))^-1 over {F}")


@lru_cache(maxsize=256)
def _product_solver(f: tuple[int, ...], K: LocalFieldDesc) -> ProductSolver:
    return ProductSolver(f, K.residue_field, reduce_poly(f, K))


# --- certificates ---------------------------------------------------------------

@dataclass(frozen=True)
class SoundnessCert:
    """Residue-level evidence that f(K)^-1 lies in the valuation ring."""

    f: tuple[int, ...]
    field: FieldDesc
    monic: bool
    no_root_scan: bool
    squarefree: bool
    conclusion: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return self.monic and self.no_root_scan

    def to_dict(self) -> dict:
        return {"f": format_poly(self.f), "residue_field": str(self.field),
                "monic": self.monic, "no_root_scan": self.no_root_scan,
                "squarefree": self.squarefree, "valid": self.valid,
                "conclusion": list(self.conclusion)}


def soundness_certificate(f: Sequence[int], K: LocalFieldDesc) -> SoundnessCert:
    f = tuple(f)
    if len(f) < 2 or f[-1] != 1:
        raise ValueError(f"soundness certificates need a monic polynomial, got {format_poly(f)}")
    F = K.residue_field
    fbar = reduce_poly(f, K)
    no_root = residue_no_root(fbar, F)
    sqf = is_squarefree(FqPoly(make_field(K.p), tuple(c % K.p for c in f)))
    concl: tuple[str, ...] = ()
    if no_root:
        # monic f with no residue root: f(K) misses the maximal ideal, so
        # inverses of values are integral, hence so are their sums/products
        concl = ("f(K) misses the maximal ideal", "f(K)^-1 in O", "phi_f(K) in O",
                 "psi_f(K) in O", "eta_f(K) in O")
    return SoundnessCert(f, F, True, no_root, sqf, concl)


@dataclass
class WitnessCert:
    formula_id: str
    assignment: dict[str, LocalElem]
    residual: float
    precision: int
    note: str = ""

    @property
    def valid(self) -> bool:
        return self.residual >= self.precision

    def to_dict(self) -> dict:
        return {"formula": self.formula_id, "residual": _num(self.residual),
                "valid": self.valid, "note": self.note,
                "assignment": {k: format_elem(v) for k, v in sorted(self.assignment.items())}}


def _num(v: float):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return int(v) if float(v).is_integer() else v


# --- witness construction ---------------------------------------------------------

def witness_u_in_m(f: Sequence[int], a: LocalElem, u: LocalElem) -> dict[str, LocalElem]:
    """Witness for phi_f(u) with u in the maximal ideal.

    z = a and z1 = f(a)^-1; y1 = z1 + u is still an inverse value because
    f - y1^-1 has the simple residue root a, which lifts to y = b.
    """
    K = a.field
    if not u.in_ideal and not u.is_vanished:
        raise ValueError("u must lie in the maximal ideal")
    fa = eval_poly(f, a)
    z1 = inv(fa)
    if u.is_zero or u.is_vanished:
        return {"y": a, "z": a, "y1": z1, "z1": z1}
    y1 = add(z1, u)
    g = [sub(K.from_int(f[0]), inv(y1))] + list(f[1:])
    b = hensel_solve(g, a, target=int(min(K.precision, y1.absprec)))
    return {"y": b, "z": a, "y1": inv(eval_poly(f, b)), "z1": z1}


def witness_t_residue(f: Sequence[int], r: int, K: LocalFieldDesc) -> dict[str, LocalElem]:
    """Witness for psi_f(t) with t of residue code r != 0; includes ``t``."""
    y, z = _product_solver(tuple(f), K).pair(r)
    ly, lz = lift_residue(K, y), lift_residue(K, z)
    y1 = inv(eval_poly(f, ly))
    z1 = inv(eval_poly(f, lz))
    return {"y": ly, "z": lz, "y1": y1, "z1": z1, "t": mul(y1, z1)}


def q_power_root(Q: int, r: int, K: LocalFieldDesc) -> LocalElem:
    """Root of X^Q - X in the residue class r (Hensel lift of the constant)."""
    if r == 0:
        return K.zero
    g = [0, -1] + [0] * (Q - 2) + [1]
    try:
        return hensel_solve(g, lift_residue(K, r))
    except HenselError as e:
        raise CoverageFailure(f"residue {r} has no root of X^{Q} - X above it") from e


def _eta_assignment(f, x, t, t_extra, K) -> dict[str, LocalElem]:
    u = sub(x, t, strict=False)
    if u.is_vanished:
        u = K.zero
    a = K.constant(first_simple_point(f, K))
    out = {"u": u, "t": t}
    out.update({k + "_u": v for k, v in witness_u_in_m(f, a, u).items()})
    out.update({k + "_t": v for k, v in t_extra.items()})
    return out


def eta_q_witness(f, Q: int, x: LocalElem) -> dict[str, LocalElem]:
    """Assignment for eta(phi_f, X^Q - X = 0) at integral x."""
    K = x.field
    r = residue_code(x)
    return _eta_assignment(f, x, q_power_root(Q, r, K), {}, K)


def eta_f_witness(f, x: LocalElem) -> dict[str, LocalElem]:
    """Assignment for eta_f at integral x."""
    K = x.field
    r = residue_code(x)
    if r == 0:
        return _eta_assignment(f, x, K.zero, {}, K)
    tw = witness_t_residue(f, r, K)
    t = tw.pop("t")
    return _eta_assignment(f, x, t, tw, K)


def _suffixed(assign: dict, suffix: str) -> dict:
    return {k + suffix: v for k, v in assign.items()}


@lru_cache(maxsize=1024)
def square_root(n: int, K: LocalFieldDesc) -> LocalElem | None:
    """A y in K with y^2 = n (to working precision), or None if n is not a square."""
    nK = K.from_int(n)
    if nK.is_zero:
        return K.zero
    if K.p == 2:
        raise ValueError("square roots are decided only for odd residue characteristic")
    F = K.residue_field
    # n = p^s * unit in Q_p; in F_q((t)) integers are constants
    s = nK.val
    if s % 2:
        return None
    m = n // K.p**s if isinstance(K, PadicField) else n
    mbar = m % K.p
    sq = F.vmul(np.arange(F.q), np.arange(F.q))
    hits = np.flatnonzero(sq == mbar)
    if len(hits) == 0:
        return None
    root = hensel_solve([-m, 0, 1], K.constant(int(hits[0])))
    if s:
        root = mul(root, K.elem(s // 2, (1,) + (0,) * (K.precision - 1)))
    return root


def uniformk_plan(defn: Definition, K: LocalFieldDesc) -> list[tuple[str, str]]:
    """Disjuncts of the uniform-in-k formula in the order witnesses are tried,
    responsible one first: (suffix, description)."""
    n = K.residue_field.n
    M = defn.M
    plan = [(f"_k{k}", f"eta_{k}") for k in M]
    plan.insert(0, ("_f", "eta_f"))
    if n in M:
        plan.sort(key=lambda e: e[0] != f"_k{n}")
    return plan


def construct_witness(defn: Definition, x: LocalElem) -> WitnessCert:
    """Explicit assignment showing x satisfies the definition; x must be integral."""
    K = x.field
    if not x.in_ring:
        raise ValueError("construct_witness needs an element of the valuation ring")
    note = ""
    if defn.kind == "finite":
        assign = eta_q_witness(defn.f, defn.q, x)
    elif defn.kind == "eta_k":
        assign = eta_q_witness(defn.f, defn.p**defn.k, x)
    elif defn.kind == "eta_f":
        assign = eta_f_witness(defn.f, x)
    elif defn.kind == "uniformk":
        assign, errors = None, []
        for suffix, desc in uniformk_plan(defn, K):
            try:
                if suffix == "_f":
                    part = eta_f_witness(defn.f, x)
                else:
                    part = eta_q_witness(defn.f, defn.p ** int(suffix[2:]), x)
            except (CoverageFailure, HenselError) as e:
                errors.append(f"{desc}: {e}")
                continue
            assign, note = _suffixed(part, suffix), f"disjunct {desc}"
            break
        if assign is None:
            raise CoverageFailure("; ".join(errors))
    elif defn.kind == "uniform":
        assign, parts = {}, []
        for n in range(2, defn.N + 1):
            y = square_root(n, K)
            if y is not None:
                assign[f"y_n{n}"] = y
                parts.append(f"n={n}:square")
            else:
                assign.update(_suffixed(eta_f_witness(fm.f_n(n), x), f"_n{n}"))
                parts.append(f"n={n}:eta")
        note = ",".join(parts)
    else:
        raise ValueError(f"unknown definition kind {defn.kind!r}")
    env = dict(assign)
    env["x"] = x
    target = int(min(K.precision, x.absprec))
    return WitnessCert(defn.ident, assign, residual(defn.formula, env, K), target, note)


# --- bounded search -------------------------------------------------------------

Rel = tuple[tuple[str, ...], set]
DEFAULT_DOMAIN_CAP = 120


def default_domain(K: LocalFieldDesc, vals: Sequence[int] = range(-2, 3), tail: int = 2,
                   cap: int = DEFAULT_DOMAIN_CAP, seed: int = 0) -> tuple[list[LocalElem], bool]:
    """Pool of candidate values for bound variables and whether it is exhaustive.

    Every element with valuation in ``vals`` and ``tail`` digits past the
    leading one when that fits under ``cap``; otherwise zero, constant lifts
    of residues and seeded samples from every (valuation, leading digit)
    class, cut down to ``cap`` at random.
    """
    vals = list(vals)
    if count_elements(K, vals, tail) <= cap:
        return list(enum_elements(K, vals, tail, budget=None)), True
    pad = (0,) * tail
    consts = [LocalElem(K, 0, (c,) + pad, tail + 1) for c in range(1, K.q)]
    classes = len(vals) * (K.q - 1)
    per_class = max(1, -(-cap // classes))
    rest = [e for e in enum_elements(K, vals, tail, per_class=per_class, seed=seed)
            if not e.is_zero]
    rng = random.Random(seed)
    keep_consts = consts if len(consts) <= cap // 2 else rng.sample(consts, cap // 2)
    # seeded tails can collide, so drop repeats
    seen = {(e.val, e.digits) for e in keep_consts}
    unique = []
    for e in rest:
        if (e.val, e.digits) not in seen:
            seen.add((e.val, e.digits))
            unique.append(e)
    rest = unique
    room = cap - 1 - len(keep_consts)
    if len(rest) > room:
        rest = rng.sample(rest, room)
    pool = [K.zero] + keep_consts + rest
    return sorted(pool, key=_elem_order), False


def _elem_order(e: LocalElem):
    return (-math.inf, ()) if e.is_zero else (e.val, e.digits)


class BoundedSearch:
    """Brute-force satisfiability of a formula with the free variable ``x``
    fixed, every bound variable ranging over a finite pool.

    Evaluation is bottom-up over relations (sets of pool-index tuples).
    Existential blocks project early; conjunctions join their parts and
    handle atoms of three or more variables by filtering, or by solving an
    equation of the form ``v = term`` through an index of the pool.
    Results not mentioning ``x`` are cached across calls.
    """

    def __init__(self, K: LocalFieldDesc, pool: Sequence[LocalElem], budget: int = 10**6):
        self.K = K
        self.D = list(pool)
        self.budget = budget
        self.evals = 0
        self._fv: dict[int, frozenset] = {}
        self._canon: dict[int, tuple] = {}
        self._shared: dict = {}
        self._local: dict = {}
        self._keep_alive: list = []
        buckets: dict = defaultdict(list)
        self.zero_idx = None
        for i, e in enumerate(self.D):
            if e.is_zero:
                self.zero_idx = i
            else:
                buckets[(e.val, e.digits[0])].append(i)
        self.buckets = dict(buckets)
        self._consts: dict[int, LocalElem] = {}

    # ---- bookkeeping
    def _tick(self, k: int = 1):
        self.evals += k
        if self.evals > self.budget:
            raise BudgetExceeded(f"search budget of {self.budget} evaluations exhausted")

    def fv(self, phi) -> frozenset:
        key = id(phi)
        hit = self._fv.get(key)
        if hit is None:
            if isinstance(phi, fm.Eq):
                hit = fm.term_vars(phi.left) | fm.term_vars(phi.right)
            elif isinstance(phi, (fm.And, fm.Or)):
                hit = frozenset().union(*(self.fv(a) for a in phi.args))
            else:
                hit = self.fv(phi.body) - frozenset(phi.vars)
            self._fv[key] = hit
            self._keep_alive.append(phi)
        return hit

    def canon(self, phi) -> tuple[str, dict[str, str]]:
        """S-expression with non-x variables renamed by first occurrence."""
        key = id(phi)
        hit = self._canon.get(key)
        if hit is None:
            toks = fm.to_sexpr(phi).replace("(", " ( ").replace(")", " ) ").split()
            names: dict[str, str] = {}
            out = []
            for tok in toks:
                if tok[0].isalpha() and tok not in _KEYWORDS and tok != "x":
                    tok = names.setdefault(tok, f"v{len(names)}")
                out.append(tok)
            hit = (" ".join(out), names)
            self._canon[key] = hit
        return hit

    # ---- values
    def term(self, t, env: dict, memo: dict) -> LocalElem:
        return eval_term(t, env, self.K, memo)

    def holds(self, atom: fm.Eq, env: dict) -> bool:
        self._tick()
        memo: dict = {}
        return agrees(self.term(atom.left, env, memo), self.term(atom.right, env, memo))

    def matches(self, value: LocalElem) -> list[int]:
        """Pool indices of elements agreeing with ``value``."""
        if value.is_zero:
            return [] if self.zero_idx is None else [self.zero_idx]
        if value.is_vanished:
            out = [] if self.zero_idx is None else [self.zero_idx]
            return out + [i for i, e in enumerate(self.D) if not e.is_zero and e.val >= value.val]
        return [i for i in self.buckets.get((value.val, value.digits[0]), ())
                if agrees(self.D[i], value)]

    # ---- relations
    def run(self, phi: fm.Formula, x: LocalElem) -> bool:
        self.x = x
        self._local = {}
        _, rows = self.eval(phi, frozenset())
        return bool(rows)

    def eval(self, phi, keep: frozenset) -> Rel:
        fv = self.fv(phi) - {"x"}
        keep = keep & fv
        uses_x = "x" in self.fv(phi)
        if uses_x:
            key = (id(phi), keep)
            hit = self._local.get(key)
            if hit is None:
                hit = self._eval(phi, keep)
                self._local[key] = hit
            return hit
        text, names = self.canon(phi)
        ckeep = tuple(sorted(names[v] for v in keep))
        skey = (text, ckeep)
        hit = self._shared.get(skey)
        if hit is None:
            hit = self._eval(phi, keep)
            back = {v: c for v, c in names.items()}
            cvars = tuple(back[v] for v in hit[0])
            order = sorted(range(len(cvars)), key=lambda i: cvars[i])
            self._shared[skey] = (tuple(cvars[i] for i in order),
                                  {tuple(r[i] for i in order) for r in hit[1]})
            return hit
        cvars, crows = hit
        inv_names = {c: v for v, c in names.items()}
        real = [inv_names[c] for c in cvars]
        order = sorted(range(len(real)), key=lambda i: real[i])
        return tuple(real[i] for i in order), {tuple(r[i] for i in order) for r in crows}

    def _eval(self, phi, keep: frozenset) -> Rel:
        if isinstance(phi, fm.Eq):
            return self._atom_rel(phi, keep)
        if isinstance(phi, fm.Exists):
            return self.eval(phi.body, keep - frozenset(phi.vars))
        if isinstance(phi, fm.Or):
            target = tuple(sorted(keep))
            rows: set = set()
            for a in phi.args:
                rel = self.eval(a, keep)
                if not target:
                    if rel[1]:
                        return (), {()}
                    continue
                rows |= self._pad(rel, target)[1]
            return target, rows
        return self._and(phi, keep)

    def _atom_rel(self, atom: fm.Eq, keep: frozenset) -> Rel:
        vs = tuple(sorted(self.fv(atom) - {"x"}))
        n = len(self.D)
        if n ** len(vs) > self.budget:
            raise BudgetExceeded(f"atom over {len(vs)} variables exceeds the search budget")
        rows = set()
        for idx in product(range(n), repeat=len(vs)):
            env = {v: self.D[i] for v, i in zip(vs, idx)}
            env["x"] = getattr(self, "x", None)
            if self.holds(atom, env):
                rows.add(idx)
        return self._project((vs, rows), keep)

    def _and(self, phi: fm.And, keep: frozenset) -> Rel:
        args = list(phi.args)
        fvs = [self.fv(a) - {"x"} for a in args]
        needed = []
        for i, a in enumerate(args):
            others = frozenset().union(*(fvs[j] for j in range(len(args)) if j != i))
            needed.append(fvs[i] & (keep | others))
        rels: list[Rel] = []
        covered: set = set()
        deferred = []
        for i, a in enumerate(args):
            if not isinstance(a, fm.Eq):
                rel = self.eval(a, needed[i])
                if not rel[1]:
                    return tuple(sorted(keep)), set()
                rels.append(rel)
                covered |= set(rel[0])
        for i, a in enumerate(args):
            if isinstance(a, fm.Eq):
                if fvs[i] <= covered or len(fvs[i]) > 2:
                    deferred.append(a)
                else:
                    rel = self.eval(a, fvs[i])
                    if not rel[1]:
                        return tuple(sorted(keep)), set()
                    rels.append(rel)
                    covered |= set(rel[0])
        rel = self._join_all(rels)
        for atom in deferred:
            rel = self._apply(rel, atom)
            if not rel[1]:
                return tuple(sorted(keep)), set()
        return self._project(rel, keep)

    def _join_all(self, rels: list[Rel]) -> Rel:
        if not rels:
            return (), {()}
        rels = sorted(rels, key=lambda r: len(r[1]))
        acc = rels.pop(0)
        while rels:
            shared = [i for i, r in enumerate(rels) if set(r[0]) & set(acc[0])]
            j = shared[0] if shared else 0
            acc = self._join(acc, rels.pop(j))
            if not acc[1]:
                break
        return acc

    def _join(self, a: Rel, b: Rel) -> Rel:
        shared = [v for v in a[0] if v in b[0]]
        out_vars = tuple(sorted(set(a[0]) | set(b[0])))
        ia = [a[0].index(v) for v in shared]
        ib = [b[0].index(v) for v in shared]
        index = defaultdict(list)
        for r in b[1]:
            index[tuple(r[i] for i in ib)].append(r)
        if len(a[1]) * max((len(v) for v in index.values()), default=0) > self.budget:
            raise BudgetExceeded("join exceeds the search budget")
        rows = set()
        for r in a[1]:
            for s in index.get(tuple(r[i] for i in ia), ()):
                env = dict(zip(a[0], r))
                env.update(zip(b[0], s))
                rows.add(tuple(env[v] for v in out_vars))
        return out_vars, rows

    def _apply(self, rel: Rel, atom: fm.Eq) -> Rel:
        """Filter by (or solve for) an atom whose variables may be partly unbound."""
        avars = self.fv(atom) - {"x"}
        bound = set(rel[0])
        free = sorted(avars - bound)
        solve = None
        if len(free) == 1:
            v = free[0]
            if isinstance(atom.left, fm.Var) and atom.left.name == v \
                    and v not in fm.term_vars(atom.right):
                solve = atom.right
            elif isinstance(atom.right, fm.Var) and atom.right.name == v \
                    and v not in fm.term_vars(atom.left):
                solve = atom.left
        out_vars = tuple(sorted(bound | avars))
        rows = set()
        if solve is not None:
            self._tick(len(rel[1]))
            for r in rel[1]:
                env = {v: self.D[i] for v, i in zip(rel[0], r)}
                env["x"] = self.x
                for j in self.matches(self.term(solve, env, {})):
                    full = dict(zip(rel[0], r))
                    full[free[0]] = j
                    rows.add(tuple(full[w] for w in out_vars))
            return out_vars, rows
        if free:
            rel = self._pad(rel, out_vars)
        for r in rel[1]:
            env = {v: self.D[i] for v, i in zip(rel[0], r)}
            env["x"] = self.x
            if self.holds(atom, env):
                rows.add(r)
        return rel[0], rows

    def _pad(self, rel: Rel, target: tuple[str, ...]) -> Rel:
        missing = [v for v in target if v not in rel[0]]
        if not missing:
            return self._project(rel, frozenset(target))
        size = len(rel[1]) * len(self.D) ** len(missing)
        if size > self.budget:
            raise BudgetExceeded("padding a disjunct exceeds the search budget")
        self._tick(size)
        rows = set()
        for r in rel[1]:
            base = dict(zip(rel[0], r))
            for extra in product(range(len(self.D)), repeat=len(missing)):
                base.update(zip(missing, extra))
                rows.add(tuple(base[v] for v in target))
        return target, rows

    @staticmethod
    def _project(rel: Rel, keep: frozenset) -> Rel:
        vs = tuple(v for v in rel[0] if v in keep)
        if vs == rel[0]:
            return rel
        idx = [rel[0].index(v) for v in vs]
        return vs, {tuple(r[i] for i in idx) for r in rel[1]}


_KEYWORDS = frozenset({"exists", "and", "or", "add", "sub", "mul"})


@dataclass
class RefutationRecord:
    x: str
    pool_size: int
    exhaustive: bool
    found: bool
    budget_exhausted: bool
    evaluations: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def bounded_refute(phi: fm.Formula, x: LocalElem, K: LocalFieldDesc | None = None,
                   budget: int = 10**6, pool: Sequence[LocalElem] | None = None,
                   search: BoundedSearch | None = None, seed: int = 0) -> RefutationRecord:
    """Look for any assignment from a finite pool satisfying ``phi`` at x with
    val(x) < 0.  Finding none is a sanity check, not a proof."""
    K = x.field if K is None else K
    if x.in_ring:
        raise ValueError("bounded_refute expects an element of negative valuation")
    if budget <= 0 and search is None:
        return RefutationRecord(format_elem(x), 0, False, False, False, 0)
    exhaustive = True
    if search is None:
        if pool is None:
            pool, exhaustive = default_domain(K, seed=seed)
        search = BoundedSearch(K, pool, budget)
    else:
        exhaustive = getattr(search, "exhaustive", True)
    before = search.evals
    try:
        found = search.run(phi, x)
        exhausted = False
    except BudgetExceeded:
        found, exhausted = False, True
    return RefutationRecord(format_elem(x), len(search.D), exhaustive, found, exhausted,
                            search.evals - before)


def bounded_find(phi: fm.Formula, x: LocalElem, pool: Sequence[LocalElem],
                 budget: int = 10**7, search: BoundedSearch | None = None) -> bool:
    """Brute-force existence of a satisfying assignment from the pool (any x)."""
    search = search or BoundedSearch(x.field, pool, budget)
    return search.run(phi, x)


# --- verification sweeps ---------------------------------------------------------

@dataclass(frozen=True)
class SamplePlan:
    """Which elements a verification sweep visits.

    Every valuation in [-V, N-1]; at each, all leading digits when there are
    at most ``max_leads`` of them (or the valuation is listed in
    ``exhaustive_vals``), else a seeded sample of that many; ``tails`` seeded
    digit tails per class.  ``refute_per_val`` caps how many
    negative-valuation samples per valuation also go through the bounded
    search (0 disables it).
    """

    V: int = 4
    max_leads: int = 256
    tails: int = 1
    refute_per_val: int = 4
    seed: int = 0
    search_budget: int = 10**6
    exhaustive_vals: tuple[int, ...] = ()


def sample_points(K: LocalFieldDesc, plan: SamplePlan) -> list[LocalElem]:
    rng = random.Random(plan.seed)
    q, N = K.q, K.precision
    out = [K.zero]
    for v in range(-plan.V, N):
        leads = list(range(1, q))
        if len(leads) > plan.max_leads and v not in plan.exhaustive_vals:
            leads = sorted(rng.sample(leads, plan.max_leads))
        for lead in leads:
            for _ in range(plan.tails):
                tail = tuple(rng.randrange(q) for _ in range(N - 1))
                out.append(LocalElem(K, v, (lead,) + tail, N))
    return out


@dataclass
class Regime:
    covered: bool
    claim: str | None
    reason: str


def theorem_regime(defn: Definition, K: LocalFieldDesc) -> Regime:
    """Whether the construction is guaranteed to define O (claim 'O') or all
    of K (claim 'K') on this field, or falls outside what is guaranteed."""
    F = K.residue_field
    c = fm.c_bound
    if defn.kind == "finite":
        if F.q != defn.q:
            return Regime(False, None, f"formula built for q={defn.q}, residue field has q={F.q}")
        if not residue_no_root(reduce_poly(defn.f, K), F):
            return Regime(False, None, "f has a residue root")
        return Regime(True, "O", "q-power roots represent every residue class")
    if defn.kind == "eta_k":
        if F.p != defn.p or defn.k % F.n:
            return Regime(False, None, "roots of X^(p^k) - X miss some residue classes")
        if not residue_no_root(reduce_poly(defn.f, K), F):
            return Regime(False, None, "f has a residue root")
        return Regime(True, "O", "n divides k")
    if defn.kind == "eta_f":
        fbar = reduce_poly(defn.f, K)
        if not residue_no_root(fbar, F):
            return Regime(False, None, "f has a residue root")
        if F.q <= c(len(defn.f) - 1):
            return Regime(False, None, f"q = {F.q} <= c({len(defn.f) - 1})")
        if not is_squarefree(FqPoly(make_field(F.p), tuple(v % F.p for v in defn.f))):
            return Regime(False, None, "f is not square-free")
        return Regime(True, "O", f"q = {F.q} > c({len(defn.f) - 1})")
    if defn.kind == "uniformk":
        if F.p != defn.p:
            return Regime(False, None, "residue characteristic differs from p")
        if F.n % defn.m == 0:
            return Regime(False, None, f"m = {defn.m} divides [F:F_p] = {F.n}")
        if F.n in defn.M:
            return Regime(True, "O", f"n = {F.n} in M")
        return Regime(True, "O", f"p^n = {F.q} > c({defn.m})")
    if defn.kind == "uniform":
        if K.p == 2:
            return Regime(False, None, "residue characteristic 2")
        nonsq = [n for n in range(2, defn.N + 1) if square_root(n, K) is None]
        if not nonsq:
            return Regime(True, "K", "every n in [2, N] is a square")
        if F.q != K.p:
            return Regime(False, None, "residue field is not the prime field")
        if K.p <= c(2):
            return Regime(False, None, f"p = {K.p} <= c(2) = {c(2)}")
        return Regime(True, "O", f"p in P_{nonsq[0]} and p > c(2)")
    raise ValueError(defn.kind)


def definition_certificates(defn: Definition, K: LocalFieldDesc) -> list[SoundnessCert]:
    if defn.kind == "uniform":
        return [soundness_certificate(fm.f_n(n), K) for n in range(2, defn.N + 1)
                if square_root(n, K) is None]
    return [soundness_certificate(defn.f, K)]


@dataclass
class ElementVerdict:
    x: str
    val: float
    in_ring: bool
    accepted: bool | None
    witness: WitnessCert | None = None
    error: str | None = None
    refutation: RefutationRecord | None = None

    def to_dict(self) -> dict:
        d = {"x": self.x, "val": _num(self.val), "in_ring": self.in_ring,
             "accepted": self.accepted, "error": self.error}
        if self.witness is not None:
            d["witness_residual"] = _num(self.witness.residual)
            d["witness_note"] = self.witness.note
        if self.refutation is not None:
            d["refutation"] = self.refutation.to_dict()
        return d


@dataclass
class VerifyReport:
    formula_id: str
    field: str
    window: int
    precision: int
    seed: int
    regime: Regime
    certificates: list[SoundnessCert]
    elements: list[ElementVerdict]
    observed: str
    verdict: str
    problems: list[str] = dc_field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "formula": self.formula_id,
            "field": self.field,
            "window": self.window,
            "precision": self.precision,
            "seed": self.seed,
            "regime": {"covered": self.regime.covered, "claim": self.regime.claim,
                       "reason": self.regime.reason},
            "certificates": [c.to_dict() for c in self.certificates],
            "observed": self.observed,
            "verdict": self.verdict,
            "problems": self.problems,
            "elements": [e.to_dict() for e in self.elements],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def summary(self) -> str:
        acc = sum(1 for e in self.elements if e.accepted)
        rej = sum(1 for e in self.elements if e.accepted is False)
        und = len(self.elements) - acc - rej
        return (f"{self.verdict}: {self.formula_id} on {self.field}, window {self.window}, "
                f"{len(self.elements)} samples ({acc} accepted, {rej} rejected, "
                f"{und} undetermined); defines {self.observed}")


def _judge(x: LocalElem, defn: Definition, certs: list[SoundnessCert]) -> ElementVerdict:
    val = INF if x.is_zero else x.val
    ev = ElementVerdict(format_elem(x), val, x.in_ring, None)
    if defn.kind == "uniform":
        uv = eval_uniform(defn.N, x.field, x)
        ev.accepted, ev.witness = uv.accepted, uv.witness
        bad = [f"n={c.n}: {c.detail}" for c in uv.conjuncts if c.status == "undetermined"]
        ev.error = "; ".join(bad) or None
        return ev
    if not x.in_ring:
        if any(c.valid for c in certs):
            ev.accepted = False
        return ev
    try:
        w = construct_witness(defn, x)
    except (CoverageFailure, HenselError, PrecisionExhausted) as e:
        ev.error = f"{type(e).__name__}: {e}"
        return ev
    ev.witness = w
    ev.accepted = w.valid
    if not w.valid:
        ev.error = f"witness residual {w.residual} below precision {w.precision}"
    return ev


def verify_definition(defn: Definition, K: LocalFieldDesc,
                      plan: SamplePlan | None = None) -> VerifyReport:
    """Sample-based check that the definition carves out O (or K, where that
    is what the construction promises) inside the truncated field."""
    plan = plan or SamplePlan(V=K.window)
    regime = theorem_regime(defn, K)
    certs = definition_certificates(defn, K)
    samples = sample_points(K, plan)
    search = None
    if plan.refute_per_val > 0 and defn.kind != "uniform":
        pool, exhaustive = default_domain(K, seed=plan.seed)
        search = BoundedSearch(K, pool, plan.search_budget)
        search.exhaustive = exhaustive
    refuted_per_val: dict[int, int] = defaultdict(int)
    verdicts = []
    for x in samples:
        ev = _judge(x, defn, certs)
        if search is not None and not x.in_ring and refuted_per_val[x.val] < plan.refute_per_val:
            refuted_per_val[x.val] += 1
            ev.refutation = bounded_refute(defn.formula, x, K, search=search)
        verdicts.append(ev)

    problems = []
    inside = [e for e in verdicts if e.in_ring]
    outside = [e for e in verdicts if not e.in_ring]
    if all(e.accepted for e in verdicts):
        observed = "K"
    elif all(e.accepted for e in inside) and all(e.accepted is False for e in outside):
        observed = "O"
    else:
        observed = "partial"
    for e in verdicts:
        if e.refutation is not None and e.refutation.found:
            problems.append(f"bounded search found a witness at {e.x}")
        if e.in_ring and not e.accepted and regime.claim == "O":
            problems.append(f"no witness at {e.x}: {e.error}")
    cert_violation = any(c.valid for c in certs) and any(
        e.refutation is not None and e.refutation.found for e in verdicts)
    if cert_violation:
        verdict = "FAIL"
    elif not regime.covered:
        verdict = "EXPECTED-PARTIAL"
    elif observed == regime.claim and not problems:
        verdict = "PASS"
    else:
        verdict = "FAIL"
        if observed != regime.claim:
            problems.append(f"expected the set {regime.claim}, observed {observed}")
    return VerifyReport(defn.ident, str(K), plan.V, K.precision, plan.seed, regime, certs,
                        verdicts, observed, verdict, problems)


# --- uniform formula on Q_p ------------------------------------------------------

@dataclass
class ConjunctVerdict:
    n: int
    square: bool
    status: str  # square | witness | rejected | undetermined
    detail: str = ""


@dataclass
class UniformVerdict:
    x: str
    accepted: bool | None
    conjuncts: list[ConjunctVerdict]
    witness: WitnessCert | None = None


def eval_uniform(N: int, K: LocalFieldDesc, x: LocalElem) -> UniformVerdict:
    """Decide x against the conjunction over n = 2..N of
    ((exists y) y^2 = n) or eta_{X^2 - n}(x)."""
    if K.p == 2:
        raise ValueError("the uniform formula is evaluated only for odd p")
    conj = []
    assign: dict[str, LocalElem] = {}
    for n in range(2, N + 1):
        y = square_root(n, K)
        if y is not None:
            assign[f"y_n{n}"] = y
            conj.append(ConjunctVerdict(n, True, "square"))
            continue
        f = fm.f_n(n)
        if x.in_ring:
            try:
                assign.update(_suffixed(eta_f_witness(f, x), f"_n{n}"))
                conj.append(ConjunctVerdict(n, False, "witness"))
            except (CoverageFailure, HenselError) as e:
                conj.append(ConjunctVerdict(n, False, "undetermined", str(e)))
            continue
        cert = soundness_certificate(f, K)
        if cert.valid:
            conj.append(ConjunctVerdict(n, False, "rejected", "f_n has no residue root"))
        else:
            conj.append(ConjunctVerdict(n, False, "undetermined", "f_n has a residue root"))
    statuses = {c.status for c in conj}
    witness = None
    if "rejected" in statuses:
        accepted = False
    elif "undetermined" in statuses:
        accepted = None
    else:
        env = dict(assign)
        env["x"] = x
        witness = WitnessCert(f"uniform(N={N})", assign,
                              residual(_uniform_formula(N), env, K), K.precision)
        accepted = witness.valid
    return UniformVerdict(format_elem(x), accepted, conj, witness)


@lru_cache(maxsize=16)
def _uniform_formula(N: int) -> fm.Formula:
    return fm.uniform_formula(N)
