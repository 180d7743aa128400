"""Residue coverage: when do the representative sets hit every class?

Run: python demos/coverage.py
"""

from henseldef.ffield import make_field, parse_poly
from henseldef.residue import check_T_coverage, find_coverage_counterexample, product, q_power

F16 = make_field(2, 4)
for k in range(1, 5):
    r = check_T_coverage(q_power(k), F16)
    print(f"roots of X^(2^{k}) - X in F_16: {F16.q - len(r.missing)} residues, covered={r.covered}")
print()

F83 = make_field(83)
print("product set for X^2 - 2 over F_83:", check_T_coverage(product(parse_poly("X^2-2", F83)), F83).covered)

# Quadratics never fail: a rootless quadratic takes at least q/2 nonzero
# values, and any two subsets of F^x that large multiply onto all of F^x.
print("quadratic counterexample for q in 3..81:", find_coverage_counterexample(2, range(3, 82)))

# Cubics can fail over tiny fields.
q, f = find_coverage_counterexample(3, range(3, 30))
F = make_field(q)
print(f"cubic counterexample: q={q}, f={f}, values {sorted({f(x).code for x in range(q)})}")
