"""Regions of R^r, subspace tools, the robot-arm construction and the W threshold."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .errors import DataError, EnvelopeError, InfeasibleError
from .lp import maximize

__all__ = [
    "Region",
    "region_contains",
    "SubspaceSpec",
    "span_check",
    "quadform_constant",
    "BoundedSolution",
    "bounded_solve",
    "robot_arm_solve",
    "robot_arm_feasible",
    "w_threshold",
    "wedge_coverage_check",
    "WedgeCoverage",
]

PIVOT_TOL = 1e-10


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Region:
    """An open region of R^r.

    ``wedge(order)`` is {x[order[0]] > x[order[1]] > ...}; the identity order
    gives the race wedge x_1 > ... > x_r.  ``increasing(sigma)`` is the wedge
    x_sigma(1) < ... < x_sigma(r).
    """

    kind: str
    order: tuple[int, ...] | None = None
    center: np.ndarray | None = field(default=None, compare=False)
    radius: float | None = None
    normal: np.ndarray | None = field(default=None, compare=False)
    offset: float = 0.0
    tol: float = 0.0

    def __post_init__(self):
        if self.kind not in ("wedge", "ball", "cylinder", "halfspace", "hyperplane_sum_zero"):
            raise DataError(f"unknown region kind {self.kind!r}")
        if self.kind in ("ball", "cylinder") and not (self.radius and self.radius > 0):
            raise DataError("ball and cylinder radii must be positive")
        if self.kind == "wedge":
            if sorted(self.order) != list(range(len(self.order))):
                raise DataError(f"{self.order} is not a permutation of 0..r-1")

    @classmethod
    def wedge(cls, order) -> Region:
        return cls("wedge", order=tuple(int(i) for i in order))

    @classmethod
    def increasing(cls, sigma) -> Region:
        return cls.wedge(tuple(reversed(tuple(sigma))))

    @classmethod
    def ball(cls, center, radius) -> Region:
        return cls("ball", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def cylinder(cls, center, radius) -> Region:
        return cls("cylinder", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def halfspace(cls, normal, offset=0.0) -> Region:
        """{x : normal . x > offset}."""
        return cls("halfspace", normal=np.asarray(normal, dtype=float), offset=float(offset))

    @classmethod
    def sum_zero(cls, tol=1e-12) -> Region:
        return cls("hyperplane_sum_zero", tol=float(tol))

    @property
    def dimension(self) -> int | None:
        if self.order is not None:
            return len(self.order)
        for arr in (self.center, self.normal):
            if arr is not None:
                return len(arr)
        return None


def _check_dim(region: Region, x: np.ndarray):
    d = region.dimension
    if d is not None and x.shape[-1] != d:
        raise DataError(f"region lives in R^{d}, point has {x.shape[-1]} coordinates")


def region_contains(region: Region, x) -> np.ndarray | bool:
    """Membership test; accepts one point or an (n, r) array of points."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    _check_dim(region, pts)
    if region.kind == "wedge":
        o = list(region.order)
        res = np.all(pts[:, o[:-1]] > pts[:, o[1:]], axis=1)
    elif region.kind == "ball":
        res = np.linalg.norm(pts - region.center, axis=1) < region.radius
    elif region.kind == "cylinder":
        d = pts - region.center
        d = d - d.mean(axis=1, keepdims=True)
        res = np.linalg.norm(d, axis=1) < region.radius
    elif region.kind == "halfspace":
        res = pts @ region.normal > region.offset
    else:
        res = np.abs(pts.sum(axis=1)) <= region.tol
    return bool(res[0]) if single else res


# --------------------------------------------------------------------------
# subspaces


def _rank(M: np.ndarray, tol: float = PIVOT_TOL) -> int:
    """Rank by Gaussian elimination with partial pivoting and an absolute pivot threshold."""
    A = np.array(M, dtype=float, copy=True)
    if A.size == 0:
        return 0
    rows, cols = A.shape
    rank = 0
    for c in range(cols):
        if rank == rows:
            break
        p = rank + int(np.argmax(np.abs(A[rank:, c])))
        if abs(A[p, c]) <= tol:
            continue
        A[[rank, p]] = A[[p, rank]]
        A[rank + 1:] -= np.outer(A[rank + 1:, c] / A[rank, c], A[rank])
        rank += 1
    return rank


class SubspaceSpec:
    """A linear subspace of R^r given by (possibly redundant) spanning vectors."""

    def __init__(self, basis, ambient: int | None = None):
        B = np.atleast_2d(np.asarray(basis, dtype=float)) if len(basis) else np.zeros((0, ambient or 0))
        if ambient is not None and B.shape[1] != ambient:
            raise DataError("basis vectors must lie in the ambient space")
        self.ambient = B.shape[1]
        if _rank(B) != B.shape[0]:
            raise DataError("subspace basis vectors must be linearly independent")
        self.basis = B
        self._orth = None

    @classmethod
    def spanned_by(cls, vectors, ambient: int | None = None) -> SubspaceSpec:
        """Independent subset of ``vectors`` (greedy, in order)."""
        vecs = [np.asarray(v, dtype=float) for v in vectors]
        keep = []
        for v in vecs:
            if _rank(np.array(keep + [v])) == len(keep) + 1:
                keep.append(v)
        if not keep:
            return cls([], ambient=ambient if ambient is not None else (len(vecs[0]) if vecs else 0))
        return cls(np.array(keep), ambient)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def orthonormal(self) -> np.ndarray:
        """r x dim matrix with orthonormal columns spanning the subspace."""
        if self._orth is None:
            if self.dim == 0:
                self._orth = np.zeros((self.ambient, 0))
            else:
                q, _ = np.linalg.qr(self.basis.T)
                self._orth = q[:, : self.dim]
        return self._orth

    def contains(self, v, tol: float = 1e-10) -> bool:
        v = np.asarray(v, dtype=float)
        Q = self.orthonormal
        return bool(np.linalg.norm(v - Q @ (Q.T @ v)) <= tol * max(1.0, np.linalg.norm(v)))


def span_check(vectors, target: str = "full_space") -> dict:
    M = np.atleast_2d(np.asarray(vectors, dtype=float))
    r = M.shape[1]
    rank = _rank(M)
    if target == "full_space":
        dim_target = r
        inside = True
    elif target == "sum_zero_hyperplane":
        dim_target = r - 1
        inside = bool(np.all(np.abs(M.sum(axis=1)) <= PIVOT_TOL * max(1.0, np.abs(M).max())))
    else:
        raise DataError(f"unknown span target {target!r}")
    return {"spans": inside and rank == dim_target, "rank": rank, "dim_target": dim_target}


def quadform_constant(vectors, subspace: SubspaceSpec) -> float:
    """Least c with |x|^2 <= c sum_j |v_j . x|^2 for real x in the subspace."""
    V = np.atleast_2d(np.asarray(vectors, dtype=complex))
    G = V.real.T @ V.real + V.imag.T @ V.imag
    Q = subspace.orthonormal
    if Q.shape[1] == 0:
        raise DataError("subspace is trivial")
    lam = np.linalg.eigvalsh(Q.T @ G @ Q)
    if lam[0] <= 1e-12 * max(1.0, np.abs(lam).max()):
        raise DataError("subspace is not covered by the real and imaginary parts of the vectors")
    return float(1.0 / lam[0])


# --------------------------------------------------------------------------
# bounded solutions


@dataclass(frozen=True)
class BoundedSolution:
    y: np.ndarray
    constant: float  # C_A = r ||U||_inf
    pivots: tuple[tuple[int, int], ...]


def _rref_with_transform(A: np.ndarray):
    r, m = A.shape
    aug = np.hstack([A.astype(float), np.eye(r)])
    pivots = []
    row = 0
    for col in range(m):
        if row == r:
            break
        p = row + int(np.argmax(np.abs(aug[row:, col])))
        if abs(aug[p, col]) <= PIVOT_TOL:
            continue
        aug[[row, p]] = aug[[p, row]]
        aug[row] /= aug[row, col]
        for i in range(r):
            if i != row and aug[i, col] != 0:
                aug[i] -= aug[i, col] * aug[row]
        pivots.append((row, col))
        row += 1
    return aug[:, :m], aug[:, m:], pivots


def bounded_solve(A, t) -> BoundedSolution:
    """Solve A y = t through the reduced row echelon form (off-pivot entries zero)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    t = np.asarray(t, dtype=float)
    r = A.shape[0]
    if t.shape != (r,):
        raise DataError(f"target must have {r} entries")
    E, U, pivots = _rref_with_transform(A)
    ut = U @ t
    k = len(pivots)
    scale = max(1.0, np.abs(t).max())
    if k < r and np.abs(ut[k:]).max() > PIVOT_TOL * scale * max(1.0, np.abs(U).max()):
        raise DataError("target is not in the column space")
    y = np.zeros(A.shape[1])
    for i, j in pivots:
        y[j] = ut[i]
    if np.abs(A @ y - t).max() > 1e-9 * scale:
        raise DataError("target is not in the column space")
    return BoundedSolution(y, float(r * np.abs(U).max()), tuple(pivots))


# --------------------------------------------------------------------------
# robot arm


def robot_arm_feasible(lengths, z) -> bool:
    """Closed polygon condition: max(2 max - sum, 0) <= |z| <= sum."""
    lam = [float(v) for v in lengths]
    s, m = math.fsum(lam), max(lam)
    a = abs(complex(z))
    slack = 1e-12 * s
    return max(2 * m - s, 0.0) - slack <= a <= s + slack


def _two_link(l1: float, l2: float, z: complex) -> tuple[float, float]:
    rho = abs(z)
    if rho == 0.0:
        return 0.0, math.pi
    c = (l1 * l1 + rho * rho - l2 * l2) / (2 * l1 * rho)
    alpha = math.acos(min(1.0, max(-1.0, c)))
    t1 = cmath.phase(z) + alpha
    w = z - l1 * cmath.exp(1j * t1)
    t2 = cmath.phase(w) if abs(w) > 0 else t1
    return t1, t2


def robot_arm_solve(lengths, z, tol: float = 1e-9) -> np.ndarray:
    """Angles theta_n with sum lambda_n exp(i theta_n) = z.

    Arms are grouped into three rigid super-arms (the longest arm alone and a
    greedy balanced split of the rest).  The first super-arm's angle is chosen
    so the remaining two can reach, then the two-link problem is solved in
    closed form.
    """
    lam = np.asarray(lengths, dtype=float)
    z = complex(z)
    if lam.ndim != 1 or len(lam) == 0 or np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise InfeasibleError("arm lengths must be positive and finite")
    if not robot_arm_feasible(lam, z):
        raise InfeasibleError(f"|z| = {abs(z):g} is not reachable with lengths of total {lam.sum():g}")
    n = len(lam)
    theta = np.zeros(n)
    if n == 1:
        theta[0] = cmath.phase(z) if z != 0 else 0.0
    elif n == 2:
        theta[:] = _two_link(lam[0], lam[1], z)
    else:
        order = np.argsort(-lam, kind="stable")
        big = order[0]
        groups: list[list[int]] = [[], []]
        sums = [0.0, 0.0]
        for i in order[1:]:
            g = 0 if sums[0] <= sums[1] else 1
            groups[g].append(int(i))
            sums[g] += lam[i]
        L1, L2, L3 = lam[big], sums[0], sums[1]
        rho = abs(z)
        lo = max(abs(rho - L1), abs(L2 - L3))
        hi = min(rho + L1, L2 + L3)
        w_len = 0.5 * (lo + hi)
        if rho == 0.0:
            phi1 = 0.0
        else:
            c = (rho * rho + L1 * L1 - w_len * w_len) / (2 * rho * L1)
            phi1 = cmath.phase(z) + math.acos(min(1.0, max(-1.0, c)))
        w = z - L1 * cmath.exp(1j * phi1)
        phi2, phi3 = _two_link(L2, L3, w)
        theta[big] = phi1
        theta[groups[0]] = phi2
        theta[groups[1]] = phi3
    theta = np.mod(theta, 2 * math.pi)
    resid = abs(np.sum(lam * np.exp(1j * theta)) - z)
    if resid >= tol * max(1.0, lam.sum()):
        raise InfeasibleError(f"robot-arm construction missed the target by {resid:.3g}")
    return theta


# --------------------------------------------------------------------------
# W threshold


def w_threshold(vectors, characters_used, V: float, self_sufficient: dict) -> dict:
    """W(Q, V) = max{8, c_A V sqrt 2} + (1/4) max_{chi in Q} sum_{gamma in Gamma^S(chi)} gamma^-3.

    ``vectors`` is a RaceVectors; ``self_sufficient`` maps labels to Gamma^S.
    The columns of A are (1,...,1), 2 x_chi, 2 y_chi so that the bounded
    solution gives (u, v_chi, w_chi) directly.
    """
    labels = list(characters_used)
    if not labels:
        raise DataError("the character set Q must be nonempty")
    r = vectors.spec.size
    cols = [np.ones(r)]
    for lab in labels:
        v = vectors.vectors[lab]
        cols.append(2 * v.real)
        cols.append(2 * v.imag)
    A = np.array(cols).T
    _, U, _ = _rref_with_transform(A)
    c_A = float(r * np.abs(U).max())
    tails = {}
    for lab in labels:
        g = np.asarray(self_sufficient.get(lab, ()), dtype=float)
        tails[lab] = float(np.sum(g ** -3.0)) / 4 if len(g) else 0.0
    main = max(8.0, c_A * V * math.sqrt(2))
    correction = max(tails.values())
    return {"W": main + correction, "c_A": c_A, "main_term": main,
            "correction": correction, "per_character_correction": tails}


# --------------------------------------------------------------------------
# wedge coverage


@dataclass(frozen=True)
class WedgeCoverage:
    covers_all_wedges: bool
    dimension: int
    ambient: int
    feasible: dict  # order (increasing sigma) -> bool
    witness: dict  # order -> point in V inside the wedge, or None

    @property
    def agrees_with_dimension(self) -> bool:
        return self.covers_all_wedges == (self.dimension == self.ambient - 1)


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _wedge_margin(B: list[list[Fraction]], sigma: tuple[int, ...]):
    """Max m with x_sigma(i+1) - x_sigma(i) >= m, x = B c, |x_j| <= 1, m <= 1."""
    r, d = len(B), len(B[0])
    nv = 2 * d + 1

    def xrow(j, sign=1):
        row = [sign * B[j][k] for k in range(d)] + [-sign * B[j][k] for k in range(d)]
        return row + [Fraction(0)]

    A, b = [], []
    for i in range(r - 1):
        lo, hi = xrow(sigma[i]), xrow(sigma[i + 1])
        row = [a - h for a, h in zip(lo, hi)]
        row[-1] = Fraction(1)
        A.append(row)
        b.append(Fraction(0))
    for j in range(r):
        A.append(xrow(j, 1))
        b.append(Fraction(1))
        A.append(xrow(j, -1))
        b.append(Fraction(1))
    A.append([Fraction(0)] * (nv - 1) + [Fraction(1)])
    b.append(Fraction(1))
    c = [Fraction(0)] * (nv - 1) + [Fraction(1)]
    res = maximize(c, A, b)
    coef = [res.x[k] - res.x[d + k] for k in range(d)]
    point = tuple(sum(B[j][k] * coef[k] for k in range(d)) for j in range(r))
    return res.value, point


def _float_witness(B: list[list[Fraction]], sigma: tuple[int, ...]):
    """Try a floating LP; return a point of V strictly inside the wedge, verified exactly."""
    Bf = np.array([[float(v) for v in row] for row in B])
    r, d = Bf.shape
    D = Bf[list(sigma[:-1])] - Bf[list(sigma[1:])]  # rows x_sigma(i) - x_sigma(i+1)
    A_ub = np.vstack([np.hstack([D, np.ones((r - 1, 1))]),
                      np.hstack([Bf, np.zeros((r, 1))]),
                      np.hstack([-Bf, np.zeros((r, 1))])])
    b_ub = np.concatenate([np.zeros(r - 1), np.ones(2 * r)])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(None, 1.0)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status != 0 or -res.fun <= 1e-9:
        return None
    coef = [Fraction(float(v)) for v in res.x[:d]]
    point = [sum(B[j][k] * coef[k] for k in range(d)) for j in range(r)]
    if all(point[sigma[i]] < point[sigma[i + 1]] for i in range(r - 1)):
        return tuple(point)
    return None


def wedge_coverage_check(V: SubspaceSpec | list, r: int | None = None) -> WedgeCoverage:
    """Decide, for every increasing ordering sigma, whether V meets the open wedge.

    A floating LP proposes a witness that is then checked in exact arithmetic;
    a "no" always comes from the exact rational simplex.
    """
    if isinstance(V, SubspaceSpec):
        rows = [list(map(_exact, row)) for row in V.basis.tolist()]
        spec = V
    else:
        rows = [[_exact(v) for v in row] for row in V]
        spec = SubspaceSpec(np.array([[float(v) for v in row] for row in rows]))
    # r x d layout: point = exact_basis @ coefficients
    exact_basis = [list(col) for col in zip(*rows)] if rows else []
    r = spec.ambient if r is None else r
    if r > 6:
        raise EnvelopeError("wedge coverage is limited to r <= 6")
    if r != spec.ambient:
        raise DataError("subspace dimension does not match r")
    if spec.contains(np.ones(r)):
        raise DataError("the subspace contains (1, ..., 1)")
    feasible, witness = {}, {}
    for sigma in itertools.permutations(range(r)):
        if spec.dim == 0:
            feasible[sigma], witness[sigma] = False, None
            continue
        point = _float_witness(exact_basis, sigma)
        if point is not None:
            feasible[sigma], witness[sigma] = True, tuple(float(p) for p in point)
            continue
        m, point = _wedge_margin(exact_basis, sigma)
        feasible[sigma] = m > 0
        witness[sigma] = tuple(float(p) for p in point) if m > 0 else None
    return WedgeCoverage(all(feasible.values()), spec.dim, r, feasible, witness)
