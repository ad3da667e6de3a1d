"""Independent oracles used to freeze expected values in the tests.

These deliberately avoid the library's own code paths: exact rational
binomial sums, brute-force product-space enumeration, direct grid
searches.  Slow is fine here.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from math import comb

import numpy as np


def binom_pmf(n: int, k: int, p: Fraction) -> Fraction:
    return Fraction(comb(n, k)) * p**k * (1 - p) ** (n - k)


def binom_tail_ge(n: int, k0: int, p: Fraction = Fraction(1, 2)) -> Fraction:
    return sum(binom_pmf(n, k, p) for k in range(max(k0, 0), n + 1))


def binom_tail_le(n: int, k0: int, p: Fraction = Fraction(1, 2)) -> Fraction:
    return sum(binom_pmf(n, k, p) for k in range(0, min(k0, n) + 1))


def classical_capacity_oracle(w, tol=1e-8, max_iter=500_000):
    """Blahut fixed point in plain probability space (no eigensolves).

    tol is a certified duality gap, so 1e-8 keeps the answer within
    1e-8 of the true capacity even when near-identical rows make the
    iteration crawl (the multiplier is 1 + O(capacity) there).
    """
    w = np.asarray(w, dtype=float)
    p = np.full(w.shape[0], 1.0 / w.shape[0])
    for _ in range(max_iter):
        q = p @ w
        safe = np.where(w > 0.0, w / np.where(q > 0.0, q, 1.0), 1.0)
        div = (np.where(w > 0.0, w * np.log2(safe), 0.0)).sum(axis=1)
        lower = float(p @ div)
        upper = float(div.max())
        if upper - lower <= tol:
            return lower
        p = p * np.exp2(div - upper)
        p = p / p.sum()
    raise AssertionError("classical oracle did not converge")


def brute_force_tail(probs, values, n, event) -> float:
    """Pr{event(sum)} by full product-space enumeration (k^n terms)."""
    total = 0.0
    values = [np.asarray(v, dtype=complex) for v in values]
    for assignment in itertools.product(range(len(probs)), repeat=n):
        s = sum(values[i] for i in assignment)
        if event(s):
            prob = 1.0
            for i in assignment:
                prob *= probs[i]
            total += prob
    return total


def multinomial_pmf(n: int, counts, probs) -> float:
    coeff = 1
    rest = n
    for c in counts:
        coeff *= comb(rest, c)
        rest -= c
    out = float(coeff)
    for p, c in zip(probs, counts):
        out *= p**c
    return out
