"""One formula for every F_{2^n}((t)) with n odd.

The formula combines eta_{f~} for the degree-2 trace polynomial with eta_k for
k in M = {1, 3, 5}.  Small residue fields are handled by the q-power
disjuncts, large ones by product coverage.

Run: python demos/uniform_in_k.py
"""

from henseldef.evaluate import Definition, SamplePlan, theorem_regime, verify_definition
from henseldef.ffield import make_field
from henseldef.formula import c_bound
from henseldef.localfield import laurent

d = Definition.uniformk(2, 2)
print("f~ =", d.ident, " M =", d.M, " c(2) =", c_bound(2))

for n in (1, 3, 5, 7, 2):
    K = laurent(make_field(2, n), precision=6, window=2)
    regime = theorem_regime(d, K)
    rep = verify_definition(d, K, SamplePlan(V=2, max_leads=32, refute_per_val=1))
    used = sorted({e.witness.note for e in rep.elements if e.in_ring and e.witness})
    print(f"n={n}: {rep.verdict:16s} regime: {regime.reason:28s} witnesses via {used}")
