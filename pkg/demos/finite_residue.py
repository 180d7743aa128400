"""Walk through the definition of F_2[[t]] inside F_2((t)).

Run: python demos/finite_residue.py
"""

from henseldef import formula as fm
from henseldef.evaluate import (Definition, SamplePlan, bounded_refute, construct_witness,
                                soundness_certificate, verify_definition)
from henseldef.localfield import format_elem, laurent

K = laurent(2, precision=8, window=4)
d = Definition.finite(2)
print("field:", K)
print("definition:", d.ident)
print("bound variables:", len(fm.bound_vars(d.formula)))
print(fm.to_sexpr(d.formula))
print()

# f = X^2 + X + 1 has no root mod 2, so 1/f(y) is integral for every y.
# That single residue check is what keeps elements of negative valuation out.
cert = soundness_certificate(d.f, K)
print("soundness certificate valid:", cert.valid)
for line in cert.conclusion:
    print("  ", line)
print()

# An integral element gets an explicit assignment for every bound variable.
x = K.elem(0, [1, 0, 1, 1, 0, 0, 1, 0])
w = construct_witness(d, x)
print("x =", format_elem(x))
print(f"witness residual: {w.residual:g} (needs >= {w.precision})")
for name in ("u", "t", "y_u", "y1_u", "z1_u"):
    print(f"  {name:5s} = {format_elem(w.assignment[name])}")
print()

# t^-1 is outside the ring; a brute-force sweep over a small pool finds nothing.
xm = K.elem(-1, [1] + [0] * 7)
rec = bounded_refute(d.formula, xm, K)
print("x =", format_elem(xm), "-> witness found:", rec.found,
      f"(pool {rec.pool_size}, exhaustive {rec.exhaustive}, {rec.evaluations} evaluations)")
print()

rep = verify_definition(d, K, SamplePlan(V=4))
print(rep.summary())
