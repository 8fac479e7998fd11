"""A small exact simplex method over the rationals.

Solves  max c.x  subject to  A x <= b,  x >= 0  with b >= 0, so the slack basis
is feasible at the origin and no phase one is needed.  Bland's rule prevents
cycling on the degenerate rows that strict-feasibility problems produce.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

__all__ = ["LPResult", "maximize"]


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" or "unbounded"
    value: Fraction | None
    x: tuple[Fraction, ...] | None


def maximize(c, A, b, max_pivots: int = 10000) -> LPResult:
    m, n = len(A), len(c)
    b = [Fraction(v) for v in b]
    if any(v < 0 for v in b):
        raise ValueError("right-hand side must be nonnegative")
    # tableau rows: [A | I | b]; objective row holds reduced costs -c
    T = [[Fraction(v) for v in A[i]] + [Fraction(int(i == j)) for j in range(m)] + [b[i]]
         for i in range(m)]
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + i for i in range(m)]
    for _ in range(max_pivots):
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            x = [Fraction(0)] * (n + m)
            for i, bv in enumerate(basis):
                x[bv] = T[i][-1]
            return LPResult("optimal", obj[-1], tuple(x[:n]))
        best = None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return LPResult("unbounded", None, None)
        row = best[1]
        piv = T[row][enter]
        T[row] = [v / piv for v in T[row]]
        for i in range(m):
            if i != row and T[i][enter] != 0:
                f = T[i][enter]
                T[i] = [u - f * v for u, v in zip(T[i], T[row])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [u - f * v for u, v in zip(obj, T[row])]
        basis[row] = enter
    raise RuntimeError("simplex pivot limit reached")  # pragma: no cover
