"""A single formula that defines Z_p in Q_p for most primes p.

For each n the conjunct "n is a square, or eta_{X^2-n}" is trivially true when
n is a square mod p, and cuts out Z_p when it is not (and p > 81).  Taking
n = 2..N makes the second case happen for all but a small share of primes.

Run: python demos/uniform_padic.py
"""

from henseldef.evaluate import eval_uniform
from henseldef.localfield import format_elem, padic
from henseldef.uniform import build_Pn, choose_N

rep = choose_N(0.1, 10**6)
print(rep.summary())
for n, share in sorted(rep.marginals.items()):
    print(f"  P_{n}: {share:.4f} of odd primes")
N = rep.N
print()

for p in (83, 4003, 311):
    in_P = [n for n in range(2, N + 1) if p in build_Pn(n, p)]
    K = padic(p, precision=6)
    print(f"p={p}: non-squares among 2..{N}: {in_P or 'none'}")
    for x in (K.elem(0, [3, 1, 0, 0, 0, 0]), K.elem(2, [1] * 6), K.elem(-1, [1] + [0] * 5)):
        v = eval_uniform(N, K, x)
        print(f"  {format_elem(x):40s} accepted={v.accepted}  "
              + " ".join(f"{c.n}:{c.status}" for c in v.conjuncts))
