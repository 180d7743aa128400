"""Prime families P_n = {odd p : (n/p) = -1} and their natural densities."""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .formula import build_M, c_bound

__all__ = ["PrimeFamily", "DensityReport", "odd_primes", "legendre_vec", "build_Pn",
           "union_density", "choose_N", "build_M", "c_bound", "MAX_X", "MAX_N"]

MAX_X = 10**7
MAX_N = 64


def odd_primes(X: int) -> np.ndarray:
    """Odd primes <= X (sieve of Eratosthenes)."""
    if X > MAX_X:
        raise ValueError(f"X = {X} exceeds the sieve bound {MAX_X}")
    if X < 3:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(X + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for i in range(3, int(X**0.5) + 1, 2):
        if sieve[i]:
            sieve[i * i::2 * i] = False
    return np.flatnonzero(sieve)[1:].astype(np.int64)


def legendre_vec(n: int, primes: np.ndarray) -> np.ndarray:
    """Legendre symbol (n/p) for an array of odd primes, by Euler's criterion."""
    p = primes.astype(np.int64)
    base = np.mod(n, p)
    e = (p - 1) // 2
    out = np.ones_like(p)
    while np.any(e):
        odd = (e & 1).astype(bool)
        out = np.where(odd, (out * base) % p, out)
        base = (base * base) % p
        e >>= 1
    return np.where(out == p - 1, -1, out)


@dataclass(frozen=True)
class PrimeFamily:
    n: int
    X: int
    primes: tuple[int, ...]

    def __contains__(self, p: int) -> bool:
        return p in set(self.primes)


def build_Pn(n: int, X: int) -> PrimeFamily:
    if n < 2:
        raise ValueError("n must be >= 2")
    ps = odd_primes(X)
    hit = ps[legendre_vec(n, ps) == -1]
    return PrimeFamily(n, X, tuple(int(p) for p in hit))


@dataclass
class DensityReport:
    N: int
    X: int
    total: int
    covered: int
    marginals: dict[int, float] = dc_field(default_factory=dict)
    epsilon: float | None = None

    @property
    def density(self) -> float:
        return self.covered / self.total if self.total else 0.0

    @property
    def achieved(self) -> bool | None:
        if self.epsilon is None:
            return None
        return self.density > 1 - self.epsilon

    def to_dict(self) -> dict:
        return {"version": 1, "N": self.N, "X": self.X, "odd_primes": self.total,
                "covered": self.covered, "density": round(self.density, 6),
                "marginals": {str(n): round(v, 6) for n, v in sorted(self.marginals.items())},
                "epsilon": self.epsilon, "achieved": self.achieved}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def summary(self) -> str:
        s = (f"N={self.N} X={self.X}: {self.covered}/{self.total} odd primes covered, "
             f"density {self.density:.6f}")
        if self.epsilon is not None:
            s += f" (target > {1 - self.epsilon:g}: {'achieved' if self.achieved else 'not achieved'})"
        return s


def _union_masks(N: int, ps: np.ndarray):
    covered = np.zeros(len(ps), dtype=bool)
    marginals = {}
    for n in range(2, N + 1):
        hit = legendre_vec(n, ps) == -1
        marginals[n] = float(hit.mean()) if len(ps) else 0.0
        covered |= hit
        yield n, covered, marginals


def union_density(N: int, X: int = 10**6, epsilon: float | None = None) -> DensityReport:
    """Fraction of odd primes p <= X lying in P_2 u ... u P_N."""
    if N < 2:
        raise ValueError("N must be >= 2")
    ps = odd_primes(X)
    for n, covered, marginals in _union_masks(N, ps):
        pass
    return DensityReport(N, X, len(ps), int(covered.sum()), dict(marginals), epsilon)


def choose_N(epsilon: float, X: int = 10**6, cap: int = MAX_N) -> DensityReport:
    """Smallest N whose union density exceeds 1 - epsilon.

    Raises ValueError when no N up to ``cap`` reaches the target.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    ps = odd_primes(X)
    for n, covered, marginals in _union_masks(cap, ps):
        rep = DensityReport(n, X, len(ps), int(covered.sum()), dict(marginals), epsilon)
        if rep.achieved:
            return rep
    raise ValueError(f"no N <= {cap} reaches density > {1 - epsilon} at X = {X}")
