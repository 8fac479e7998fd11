"""Integer lattice tools: LLL reduction, Hermite and Smith normal forms, kernels.

The LLL core keeps the integer coefficients of every basis vector exactly (as
Python ints) and only uses floating point for the Gram-Schmidt data, which is
recomputed by Householder QR at every step.  For the low dimensions used here
(at most a few dozen) that is both fast enough and numerically robust.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.linalg.lapack import dgeqrf

__all__ = [
    "lll_core",
    "lll_reduce",
    "hermite_column_form",
    "integer_kernel",
    "smith_invariants",
    "rank_exact",
    "is_primitive",
]

IntMatrix = list[list[int]]


def lll_core(coeffs: IntMatrix, embed: Callable[[list[int]], np.ndarray],
             delta: float = 0.99, max_rounds: int = 4) -> IntMatrix:
    """LLL-reduce the lattice spanned by ``embed(c)`` for the rows ``c`` of ``coeffs``.

    ``embed`` must be linear in the coefficient row.  Returns the transformed
    coefficient rows; ties are resolved in input order.
    """
    rows = [list(map(int, c)) for c in coeffs]
    n = len(rows)
    if n <= 1:
        return rows
    vecs = np.array([embed(r) for r in rows], dtype=float)
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 200000:  # pragma: no cover - would mean a broken embedding
            raise RuntimeError("LLL failed to terminate")
        for _ in range(max_rounds):
            R = _r_columns(vecs[:k + 1])
            col = R[k]
            redo = False
            moved = False
            for j in range(k - 1, -1, -1):
                rj = R[j]
                if rj[j] == 0:
                    continue
                q = round(col[j] / rj[j])
                if q:
                    moved = True
                    rows[k] = [a - q * b for a, b in zip(rows[k], rows[j])]
                    for i in range(j + 1):
                        col[i] -= q * rj[i]
                    # large multipliers lose bits in R; recompute before trusting it
                    redo = redo or abs(q) > 1 << 20
            if moved:
                vecs[k] = embed(rows[k])
            if not redo:
                break
        a, b, c = R[k - 1][k - 1], col[k - 1], col[k]
        if delta * a * a > b * b + c * c:
            rows[k - 1], rows[k] = rows[k], rows[k - 1]
            vecs[[k - 1, k]] = vecs[[k, k - 1]]
            k = max(k - 1, 1)
        else:
            k += 1
    return rows


def _r_columns(rows: np.ndarray) -> list[list[float]]:
    """Columns of R in the QR factorisation of ``rows.T`` (entry [j][i] is R[i, j], i <= j)."""
    qr, _, _, _ = dgeqrf(np.asfortranarray(rows.T))
    m = rows.shape[0]
    return qr[:m, :m].T.tolist()


def lll_reduce(basis: Sequence[Sequence[int]], delta: float = 0.99) -> IntMatrix:
    """LLL-reduced basis of the lattice spanned by integer rows (zero rows are dropped)."""
    rows = [list(map(int, r)) for r in basis if any(r)]
    if not rows:
        return []
    return lll_core(rows, lambda r: np.array(r, dtype=float), delta)


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hermite_column_form(A: Sequence[Sequence[int]]) -> tuple[IntMatrix, IntMatrix, int]:
    """Column-style Hermite form: returns (H, U, rank) with A U = H and U unimodular.

    H is lower echelon: its first ``rank`` columns carry the pivots and the
    remaining columns are zero, so the trailing columns of U span ker_Z(A).
    """
    m = len(A)
    n = len(A[0]) if m else 0
    H = [list(map(int, row)) for row in A]
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for M in (H, U):
            for row in M:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    piv = 0
    for r in range(m):
        if piv >= n:
            break
        for j in range(piv + 1, n):
            if H[r][j] == 0:
                continue
            x, y = H[r][piv], H[r][j]
            g, s, t = _xgcd(x, y)
            colop(piv, j, s, t, -y // g, x // g)
        if H[r][piv] == 0:
            continue
        if H[r][piv] < 0:
            colop(piv, piv, -1, 0, -1, 0)
        for j in range(piv):
            f = H[r][j] // H[r][piv]
            if f:
                colop(j, piv, 1, -f, 0, 1)
        piv += 1
    return H, U, piv


def integer_kernel(A: Sequence[Sequence[int]], n: int | None = None) -> IntMatrix:
    """A Z-basis (as rows) of {x in Z^n : A x = 0}, LLL-reduced.

    The basis is saturated: it spans every integer point of the rational kernel.
    """
    rows = [list(map(int, r)) for r in A]
    if n is None:
        n = len(rows[0]) if rows else 0
    if not rows:
        return [[int(i == j) for j in range(n)] for i in range(n)]
    _, U, rank = hermite_column_form(rows)
    kernel = [[U[i][j] for i in range(n)] for j in range(rank, n)]
    return lll_reduce(kernel) if kernel else []


def smith_invariants(A: Sequence[Sequence[int]]) -> list[int]:
    """Nonzero invariant factors d_1 | d_2 | ... of an integer matrix."""
    M = [list(map(int, r)) for r in A]
    m = len(M)
    n = len(M[0]) if m else 0
    out = []
    t = 0
    while t < min(m, n):
        nz = [(abs(M[i][j]), i, j) for i in range(t, m) for j in range(t, n) if M[i][j]]
        if not nz:
            break
        _, i0, j0 = min(nz)
        M[t], M[i0] = M[i0], M[t]
        for row in M:
            row[t], row[j0] = row[j0], row[t]
        while True:
            done = True
            for i in range(t + 1, m):
                if M[i][t]:
                    q = M[i][t] // M[t][t]
                    M[i] = [a - q * b for a, b in zip(M[i], M[t])]
                    if M[i][t]:
                        done = False
            for j in range(t + 1, n):
                if M[t][j]:
                    q = M[t][j] // M[t][t]
                    for row in M:
                        row[j] -= q * row[t]
                    if M[t][j]:
                        done = False
            if not done:
                nz = [(abs(M[i][t]), i, t) for i in range(t, m) if M[i][t]]
                nz += [(abs(M[t][j]), t, j) for j in range(t, n) if M[t][j]]
                _, i0, j0 = min(nz)
                M[t], M[i0] = M[i0], M[t]
                for row in M:
                    row[t], row[j0] = row[j0], row[t]
                continue
            # divisibility: fold in any entry not divisible by the pivot
            bad = [(i, j) for i in range(t + 1, m) for j in range(t + 1, n) if M[i][j] % M[t][t]]
            if not bad:
                break
            i, _ = bad[0]
            M[t] = [a + b for a, b in zip(M[t], M[i])]
        out.append(abs(M[t][t]))
        t += 1
    return out


def rank_exact(A: Sequence[Sequence[int]]) -> int:
    rows = [list(map(int, r)) for r in A]
    if not rows or not rows[0]:
        return 0
    return hermite_column_form(rows)[2]


def is_primitive(B_columns: Sequence[Sequence[int]]) -> bool:
    """True when the given integer vectors extend to a Z-basis of Z^k.

    Equivalent to every invariant factor of the matrix being 1.
    """
    rows = [list(map(int, r)) for r in B_columns]
    if not rows:
        return True
    inv = smith_invariants(rows)
    return len(inv) == len(rows) and all(d == 1 for d in inv)
