"""Command-line entry point.

Exit codes: 0 pass (or no claim made, EXPECTED-PARTIAL), 1 fail,
2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass

from . import formula as fm
from .evaluate import Definition, SamplePlan, verify_definition
from .ffield import FieldError, find_trace_poly, make_field, parse_poly, prime_power
from .localfield import laurent, padic
from .residue import check_T_coverage, find_coverage_counterexample, product, q_power
from .uniform import MAX_X, choose_N, union_density

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    target: str | None = None
    p: int | None = None
    n: int = 1
    q: int | None = None
    kind: str | None = None
    V: int = 4
    N: int = 8
    seed: int = 0
    epsilon: float | None = None
    X: int = 10**6
    out: str | None = None


def config_from_args(args) -> RunConfig:
    """Collect and range-check the shared flags before anything runs."""
    get = lambda name, default=None: getattr(args, name, default)  # noqa: E731
    cfg = RunConfig(args.subcommand, get("target") or get("template"), get("p"), get("n", 1),
                    get("q"), get("kind"), get("V", 4), get("N", 8), get("seed", 0),
                    get("epsilon"), get("X", 10**6), get("out"))
    if cfg.V < 0:
        raise ConfigError("--V must be >= 0")
    if cfg.N < 1:
        raise ConfigError("--N must be >= 1")
    if cfg.n < 1:
        raise ConfigError("--n must be >= 1")
    if cfg.epsilon is not None and not 0 < cfg.epsilon < 1:
        raise ConfigError("--epsilon must lie in (0, 1)")
    if not 1 <= cfg.X <= MAX_X:
        raise ConfigError(f"--X must lie in [1, {MAX_X}]")
    return cfg


def _int_poly(text: str) -> tuple[int, ...]:
    f = parse_poly(text)
    if not f or f[-1] != 1:
        raise ConfigError(f"expected a monic integer polynomial, got {text!r}")
    return f


def _field_size(q: int):
    pp = prime_power(q)
    if pp is None:
        raise ConfigError(f"q = {q} is not a prime power")
    return make_field(*pp)


def _require(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise ConfigError(f"--{name.replace('_', '-')} is required here")


# --- synth ------------------------------------------------------------------------

def cmd_synth(args) -> int:
    t = args.template
    if t in ("phi_f", "psi_f", "eta_f"):
        _require(args, "f")
        phi = getattr(fm, t)(_int_poly(args.f))
    elif t == "finite":
        _require(args, "q")
        d = Definition.finite(args.q, _int_poly(args.f) if args.f else None)
        _field_size(args.q)
        phi = d.formula
    elif t == "eta_k":
        _require(args, "p", "k")
        f = _int_poly(args.f) if args.f else fm.lift_poly(find_trace_poly(args.p, args.m or 2))
        phi = fm.eta_k(args.p, args.k, f)
    elif t == "psi_k":
        _require(args, "p", "k")
        phi = fm.psi_k(args.p, args.k)
    elif t == "uniformk":
        _require(args, "p", "m")
        phi = fm.uniformk_formula(args.p, args.m)
    elif t == "uniform":
        _require(args, "N_formula")
        phi = fm.uniform_formula(args.N_formula)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(t)
    text = fm.to_sexpr(phi) + "\n"
    _emit(text, args.out)
    return EXIT_PASS


# --- verify -----------------------------------------------------------------------

def _local_field(args):
    if args.kind == "padic" or (args.kind is None and args.target == "uniform"):
        _require(args, "p")
        return padic(args.p, precision=args.N, window=args.V)
    if args.q is not None:
        F = _field_size(args.q)
    else:
        _require(args, "p")
        F = make_field(args.p, args.n)
    return laurent(F, precision=args.N, window=args.V)


def cmd_verify(args) -> int:
    K = _local_field(args)
    t = args.target
    if t == "finite":
        d = Definition.finite(K.q, _int_poly(args.f) if args.f else None)
    elif t == "eta_f":
        _require(args, "f")
        d = Definition.eta_f(_int_poly(args.f))
    elif t == "eta_k":
        _require(args, "k")
        f = _int_poly(args.f) if args.f else fm.lift_poly(find_trace_poly(K.p, args.m or 2))
        d = Definition.eta_k(K.p, args.k, f)
    elif t == "uniformk":
        _require(args, "m")
        d = Definition.uniformk(K.p, args.m)
    else:
        _require(args, "N_formula")
        if K.p == 2:
            raise ConfigError("the uniform formula needs an odd prime")
        d = Definition.uniform(args.N_formula)
    plan = SamplePlan(V=args.V, max_leads=args.max_leads, tails=args.tails,
                      refute_per_val=args.refute_per_val, seed=args.seed)
    rep = verify_definition(d, K, plan)
    if args.out:
        _emit(rep.to_json(), args.out)
    print(rep.summary())
    for p in rep.problems[:20]:
        print("  " + p)
    return EXIT_FAIL if rep.verdict == "FAIL" else EXIT_PASS


# --- density ----------------------------------------------------------------------

def cmd_density(args) -> int:
    if args.N_formula is not None:
        rep = union_density(args.N_formula, args.X, args.epsilon)
    else:
        if args.epsilon is None:
            raise ConfigError("give --epsilon (to choose N) or --N")
        try:
            rep = choose_N(args.epsilon, args.X)
        except ValueError as e:
            print(str(e))
            return EXIT_FAIL
    if args.out:
        _emit(rep.to_json(), args.out)
    print(rep.summary())
    return EXIT_FAIL if rep.achieved is False else EXIT_PASS


# --- residue checks ----------------------------------------------------------------

def cmd_pac_check(args) -> int:
    _require(args, "q")
    F = _field_size(args.q)
    if args.k is not None:
        rec = check_T_coverage(q_power(args.k), F)
    else:
        _require(args, "f")
        f = parse_poly(args.f, F)
        if not f.is_monic:
            raise ConfigError("the polynomial must be monic")
        rec = check_T_coverage(product(f), F)
    _emit(rec.to_json() + "\n", args.out)
    return EXIT_PASS if rec.covered else EXIT_FAIL


def cmd_counterexample(args) -> int:
    res = find_coverage_counterexample(args.d, range(args.q_min, args.q_max + 1))
    out = {"d": args.d, "q_min": args.q_min, "q_max": args.q_max,
           "found": res is not None}
    if res is not None:
        out.update(q=res[0], f=str(res[1]))
    _emit(json.dumps(out, sort_keys=True) + "\n", args.out)
    return EXIT_PASS


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="henseldef",
                                 description="Existential definitions of valuation rings.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def field_flags(sp):
        sp.add_argument("--p", type=int)
        sp.add_argument("--n", type=int, default=1, help="extension degree of the residue field")
        sp.add_argument("--q", type=int, help="residue field size (Laurent fields)")
        sp.add_argument("--kind", choices=["laurent", "padic"])

    s = sub.add_parser("synth", help="print a formula as an S-expression")
    s.add_argument("template", choices=["phi_f", "psi_f", "eta_f", "finite", "psi_k", "eta_k",
                                        "uniformk", "uniform"])
    s.add_argument("--f", help="monic integer polynomial, e.g. X^2+X+1")
    s.add_argument("--q", type=int)
    s.add_argument("--p", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--N", dest="N_formula", type=int, help="largest n in the uniform conjunction")
    s.add_argument("--out")
    s.set_defaults(func=cmd_synth)

    v = sub.add_parser("verify", help="sample-based verification on a truncated field")
    v.add_argument("target", choices=["finite", "eta_f", "eta_k", "uniformk", "uniform"])
    field_flags(v)
    v.add_argument("--f")
    v.add_argument("--k", type=int)
    v.add_argument("--m", type=int)
    v.add_argument("--V", type=int, default=4, help="valuation window")
    v.add_argument("--N", type=int, default=8, help="working precision (digits)")
    v.add_argument("--N-formula", dest="N_formula", type=int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--max-leads", type=int, default=256)
    v.add_argument("--tails", type=int, default=1)
    v.add_argument("--refute-per-val", type=int, default=4)
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("density", help="density of P_2 u ... u P_N among odd primes")
    d.add_argument("--epsilon", type=float)
    d.add_argument("--X", type=int, default=10**6)
    d.add_argument("--N", dest="N_formula", type=int)
    d.add_argument("--out")
    d.set_defaults(func=cmd_density)

    c = sub.add_parser("pac-check", help="residue coverage of a representative set")
    c.add_argument("--q", type=int)
    c.add_argument("--f", help="polynomial over F_q for the product kind")
    c.add_argument("--k", type=int, help="exponent for the X^(p^k) - X kind")
    c.add_argument("--out")
    c.set_defaults(func=cmd_pac_check)

    x = sub.add_parser("counterexample", help="search small fields for product-coverage failures")
    x.add_argument("--d", type=int, default=2)
    x.add_argument("--q-min", type=int, default=3)
    x.add_argument("--q-max", type=int, default=81)
    x.add_argument("--out")
    x.set_defaults(func=cmd_counterexample)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        config_from_args(args)
        return args.func(args)
    except (ConfigError, FieldError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
