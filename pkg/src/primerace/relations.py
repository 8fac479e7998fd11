"""Integer relations among zero ordinates, self-sufficiency, and Kronecker-Weyl closures.

Numerical relation search can only ever say "no relation with coefficients up to
H was visible at p digits".  Every negative verdict therefore carries (H, p).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction

import mpmath
import numpy as np

from .characters import characters
from .errors import DataError, PrecisionError
from .lattice import hermite_column_form, integer_kernel, is_primitive, lll_core, rank_exact
from .zeros import ZeroTable

__all__ = [
    "RelationLattice",
    "find_relations",
    "minimum_precision",
    "OrdinateStatus",
    "CharacterSufficiency",
    "SufficiencyReport",
    "classify",
    "relative_independence",
    "IndependenceVerdict",
    "SubtorusSpec",
    "torus_closure",
    "TorusSample",
    "sample_torus",
    "torus_character_mean",
]

STAGE_DIGITS = 6


@dataclass(frozen=True)
class RelationLattice:
    dimension: int
    basis: tuple[tuple[int, ...], ...]
    coeff_bound: int
    precision_digits: int

    @property
    def rank(self) -> int:
        return len(self.basis)

    def involves(self, i: int) -> bool:
        return any(m[i] != 0 for m in self.basis)

    def witness(self, i: int) -> tuple[int, ...] | None:
        for m in self.basis:
            if m[i] != 0:
                return m
        return None


def minimum_precision(k: int, H: int) -> float:
    return 10 + k * math.log10(H)


def _to_mpf(x):
    if isinstance(x, str):
        return mpmath.mpf(x)
    if isinstance(x, Decimal):
        return mpmath.mpf(str(x))
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    if isinstance(x, (int, np.integer)):
        return mpmath.mpf(int(x))
    return mpmath.mpf(x)


def _normalize_sign(m):
    for a in m:
        if a:
            return tuple(m) if a > 0 else tuple(-b for b in m)
    return tuple(m)


def find_relations(xi, H: int, p: int, delta: float = 0.99) -> RelationLattice:
    """Integer relations sum m_i xi_i = 0 with max |m_i| <= H, visible at p digits.

    ``xi`` may hold decimal strings, Decimals, Fractions, mpmath numbers or
    floats (floats are taken as exact binary values).
    """
    xi = list(xi)
    k = len(xi)
    if k == 0:
        raise DataError("relation search needs at least one value")
    if H < 1:
        raise DataError("coefficient bound H must be at least 1")
    need = minimum_precision(k, H)
    if p < need:
        raise PrecisionError(
            f"{k} values with coefficients up to {H} need at least {math.ceil(need)} digits, got {p}")
    with mpmath.workdps(p + 20):
        vals = [_to_mpf(x) for x in xi]
        scale = max(abs(v) for v in vals)
        if scale == 0:
            basis = tuple(tuple(int(i == j) for j in range(k)) for i in range(k))
            return RelationLattice(k, basis, H, p)
        big = [int(mpmath.nint(v / scale * mpmath.mpf(10) ** p)) for v in vals]

    rows = [[int(i == j) for j in range(k)] for i in range(k)]
    stages = list(range(min(STAGE_DIGITS, p), p, STAGE_DIGITS)) + [p]
    for s in stages:
        div = 10 ** (p - s)

        def embed(c, div=div):
            v = np.empty(k + 1)
            v[:k] = c
            v[k] = float(sum(a * b for a, b in zip(c, big))) / div
            return v

        rows = lll_core(rows, embed, delta)

    found = []
    with mpmath.workdps(p + 20):
        tol = mpmath.mpf(10) ** (-mpmath.mpf(p) / 2) * scale
        for m in rows:
            if max(abs(a) for a in m) > H:
                continue
            resid = abs(mpmath.fsum(a * v for a, v in zip(m, vals)))
            if resid < tol * math.sqrt(sum(a * a for a in m)):
                found.append(_normalize_sign(m))
    # LLL rows are independent; keep a fixed, deterministic order
    return RelationLattice(k, tuple(found), H, p)


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class OrdinateStatus:
    label: str
    ordinate: float
    text: str
    self_sufficient: bool
    witness: tuple[int, ...] | None = None

    @property
    def status(self) -> str:
        return "presumed_self_sufficient" if self.self_sufficient else "relation_found"


@dataclass(frozen=True)
class CharacterSufficiency:
    label: str
    self_sufficient: tuple[float, ...]

    @property
    def sturdy_k(self) -> int:
        return len(self.self_sufficient)

    @property
    def robust_sum(self) -> float:
        return math.fsum(1.0 / g for g in self.self_sufficient)

    def is_sturdy(self, k: int) -> bool:
        return self.sturdy_k >= k

    def is_robust(self, W: float) -> bool:
        return self.robust_sum >= W


@dataclass(frozen=True)
class SufficiencyReport:
    height: float
    coeff_bound: int
    precision_digits: int
    statuses: tuple[OrdinateStatus, ...]
    characters: dict
    relations: RelationLattice | None = field(default=None, repr=False)

    def character(self, label: str) -> CharacterSufficiency:
        return self.characters[label]

    def self_sufficient(self, label: str) -> tuple[float, ...]:
        return self.characters[label].self_sufficient

    def sturdy_characters(self, k: int) -> list[str]:
        return [lab for lab, c in self.characters.items() if c.is_sturdy(k)]

    def robust_characters(self, W: float) -> list[str]:
        return [lab for lab, c in self.characters.items() if c.is_robust(W)]

    def to_dict(self) -> dict:
        return {
            "T": self.height,
            "H": self.coeff_bound,
            "p": self.precision_digits,
            "verdict_context": f"no relation with coefficients <= {self.coeff_bound} "
                               f"found at {self.precision_digits} digits",
            "ordinates": [
                {"label": s.label, "ordinate": s.text, "status": s.status,
                 "witness": list(s.witness) if s.witness else None}
                for s in self.statuses
            ],
            "characters": {
                lab: {"self_sufficient": list(c.self_sufficient), "sturdy_k": c.sturdy_k,
                      "robust_sum": c.robust_sum}
                for lab, c in self.characters.items()
            },
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def classify(table: ZeroTable, T: float, H: int, p: int, labels=None,
             q: int | None = None) -> SufficiencyReport:
    """Mark every ordinate up to T as relation_found or presumed self-sufficient.

    Relations are searched over the union of all listed characters' ordinates
    (by default every label in the table, or the non-principal characters mod q).
    """
    if labels is None:
        if q is not None:
            labels = [c.label for c in characters(q) if q == 1 or not c.is_principal]
        else:
            labels = table.labels
    labels = list(labels)
    table.require_complete(labels, T)
    entries = [(lab, r) for lab in labels for r in table.records(lab, T)]
    for lab, r in entries:
        if r.digits < p:
            raise PrecisionError(
                f"ordinate {r.text} of {lab} is known to {r.digits} digits, fewer than p = {p}")
    if entries:
        lattice = find_relations([r.text for _, r in entries], H, p)
    else:
        lattice = RelationLattice(0, (), H, p)
    statuses = []
    for i, (lab, r) in enumerate(entries):
        w = lattice.witness(i)
        statuses.append(OrdinateStatus(lab, r.ordinate, r.text, w is None, w))
    per_char = {}
    for lab in labels:
        ss = tuple(s.ordinate for s in statuses if s.label == lab and s.self_sufficient)
        per_char[lab] = CharacterSufficiency(lab, ss)
    return SufficiencyReport(float(T), H, p, tuple(statuses), per_char, lattice)


@dataclass(frozen=True)
class IndependenceVerdict:
    consistent: bool
    coeff_bound: int
    precision_digits: int
    witness: tuple[int, ...] | None = None

    def __str__(self) -> str:
        if self.consistent:
            return f"consistent at (H={self.coeff_bound}, p={self.precision_digits})"
        return f"violated(witness={self.witness})"


def relative_independence(A, B, H: int, p: int) -> IndependenceVerdict:
    """Check that every relation over A and B splits into one over A and one over B.

    A relation basis from LLL may mix two clean relations, so the test is done
    on the lattice: it splits iff its rank equals rank(L_A) + rank(L_B) where
    L_A, L_B are relations supported inside A, B.
    """
    A, B = list(A), list(B)
    nA = len(A)
    joint = find_relations(A + B, H, p)
    for m in joint.basis:
        if not any(m[:nA]) or not any(m[nA:]):
            continue
        with mpmath.workdps(p + 20):
            half = abs(mpmath.fsum(a * _to_mpf(x) for a, x in zip(m[:nA], A)))
            scale = max(abs(_to_mpf(x)) for x in A + B)
            if half < mpmath.mpf(10) ** (-mpmath.mpf(p) / 2) * scale * math.sqrt(sum(a * a for a in m)):
                continue  # both halves vanish separately
        return IndependenceVerdict(False, H, p, m)
    return IndependenceVerdict(True, H, p)


# --------------------------------------------------------------------------
# Kronecker-Weyl closure


@dataclass(frozen=True)
class SubtorusSpec:
    """Closure {B phi mod 1} of the line t*xi in T^k; B is k x d, stored as d columns."""

    dimension: int
    relations: RelationLattice
    columns: tuple[tuple[int, ...], ...]
    saturated_relations: tuple[tuple[int, ...], ...]

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def matrix(self) -> np.ndarray:
        """B as a k x d integer array."""
        if not self.columns:
            return np.zeros((self.dimension, 0), dtype=np.int64)
        return np.array(self.columns, dtype=object).T

    def check(self) -> dict:
        cols = [list(c) for c in self.columns]
        orth = all(sum(a * b for a, b in zip(m, c)) == 0
                   for m in self.relations.basis for c in cols)
        return {
            "orthogonal": orth,
            "full_column_rank": rank_exact(cols) == len(cols) if cols else True,
            "primitive": is_primitive(cols),
            "d_plus_rank": len(cols) + len(self.saturated_relations) == self.dimension,
        }


def torus_closure(xi, H: int, p: int) -> SubtorusSpec:
    lat = find_relations(xi, H, p)
    k = lat.dimension
    rel = [list(m) for m in lat.basis]
    comp = integer_kernel(rel, k) if rel else [[int(i == j) for j in range(k)] for i in range(k)]
    comp = tuple(_normalize_sign(c) for c in comp)
    sat = integer_kernel([list(c) for c in comp], k) if comp else [
        [int(i == j) for j in range(k)] for i in range(k)]
    sat = tuple(_normalize_sign(m) for m in sat)
    return SubtorusSpec(k, lat, comp, sat)


SAMPLE_BITS = 52
_MASK = np.uint64((1 << SAMPLE_BITS) - 1)


@dataclass(frozen=True)
class TorusSample:
    """Points of T^k on the dyadic grid 2^-52 Z^k, stored as integers."""

    ints: np.ndarray  # (n, k) uint64

    @property
    def points(self) -> np.ndarray:
        return self.ints.astype(np.float64) / float(1 << SAMPLE_BITS)

    def __len__(self) -> int:
        return self.ints.shape[0]


def _as_u64(M) -> np.ndarray:
    return np.array([[int(a) % (1 << 64) for a in row] for row in M], dtype=np.uint64)


def sample_torus(spec: SubtorusSpec, n: int, seed: int, chunk: int = 65536,
                 workers: int = 1) -> TorusSample:
    """n Haar-random points of the closure subtorus.

    phi is drawn uniformly on the grid 2^-52 Z^d and zeta = B phi mod 1 is
    evaluated in wrapping uint64 arithmetic, so it is exact: for integer m in
    the saturated relation lattice, m . zeta is exactly 0 mod 1.
    """
    if n < 1:
        raise DataError("sample size must be positive")
    k, d = spec.dimension, spec.d
    Bt = _as_u64(spec.columns) if d else np.zeros((0, k), dtype=np.uint64)
    starts = list(range(0, n, chunk))
    seeds = np.random.SeedSequence(seed).spawn(len(starts))

    def work(i):
        size = min(chunk, n - starts[i])
        rng = np.random.Generator(np.random.Philox(seeds[i]))
        phi = rng.integers(0, 1 << SAMPLE_BITS, size=(size, d), dtype=np.uint64)
        if d == 0:
            return np.zeros((size, k), dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.zeros((size, k), dtype=np.uint64)
            for j in range(d):
                z += phi[:, j:j + 1] * Bt[j][None, :]
        return z & _MASK

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, range(len(starts))))
    else:
        parts = [work(i) for i in range(len(starts))]
    return TorusSample(np.vstack(parts))


def torus_character_mean(sample: TorusSample, m) -> complex:
    """Empirical mean of exp(2 pi i m . zeta), with m . zeta reduced exactly."""
    mu = np.array([int(a) % (1 << 64) for a in m], dtype=np.uint64)
    with np.errstate(over="ignore"):
        phase = (sample.ints * mu[None, :]).sum(axis=1, dtype=np.uint64) & _MASK
    if not phase.any():
        return 1 + 0j
    ang = phase.astype(np.float64) * (2 * math.pi / float(1 << SAMPLE_BITS))
    return complex(np.cos(ang).mean(), np.sin(ang).mean())
