"""Normalised error terms E(x) and their zero-sum truncations E_T(x).

Sign convention.  With positive ordinates only, the explicit formula reads

    E(x; q, a) = -c(q, a) - 2 Re sum_{chi != chi0} conj(chi(a)) sum_{0 < gamma} x^{i gamma} / (1/2 + i gamma) + O(1/log x)

so E_T carries a minus sign in front of the folded zero sum (see
``oscillatory_terms``).  The shift b already includes the central zeros.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import expi

from .characters import RaceSpec, RaceVectors, euler_phi, factorize
from .errors import DataError
from .sieve import PrimeCounts
from .zeros import ZeroTable, theta_gamma

__all__ = [
    "ErrorVector",
    "ZeroSum",
    "li",
    "error_vector",
    "oscillatory_terms",
    "truncated_error_vector",
    "truncated_error_series",
    "truncated_error_grid",
    "truncation_gap",
    "pi_li_error",
    "pi_li_terms",
    "ap_vs_total_error",
    "write_series_csv",
    "residue_sum_constant",
    "full_race",
    "WEIGHTINGS",
]

WEIGHTINGS = ("pi", "theta", "psi")
_LOG2_EI = float(expi(math.log(2.0)))


def li(x):
    """Logarithmic integral from 2: int_2^x dt / log t (so li(2) = 0)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 2):
        raise DataError("li is defined here for x >= 2")
    out = expi(np.log(x)) - _LOG2_EI
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ErrorVector:
    x: float
    values: np.ndarray
    weighting: str = "pi"


def _normaliser(x: float, weighting: str) -> float:
    if weighting == "pi":
        return math.log(x) / math.sqrt(x)
    if weighting in ("theta", "psi"):
        return 1.0 / math.sqrt(x)
    raise DataError(f"unknown weighting {weighting!r}")


def error_vector(counts: PrimeCounts, spec: RaceSpec, x: float, weighting: str = "pi") -> ErrorVector:
    """(phi(q) pi(x;q,a_j) - pi(x)) log x / sqrt x, or the theta/psi analogue."""
    if counts.modulus != spec.modulus:
        raise DataError(f"counts are for modulus {counts.modulus}, race is mod {spec.modulus}")
    if not 2 <= x <= counts.limit:
        raise DataError(f"x = {x} outside [2, {counts.limit}]")
    total, per = counts.weighted(x, weighting)
    f = euler_phi(spec.modulus)
    vals = np.array([f * per[a % spec.modulus] - total for a in spec.residues])
    return ErrorVector(float(x), _normaliser(x, weighting) * vals, weighting)


@dataclass(frozen=True)
class ZeroSum:
    """E_T(e^t) = shift + Re sum_j coeffs[j] * exp(i gammas[j] t)."""

    gammas: np.ndarray
    coeffs: np.ndarray  # (K, r) complex
    shift: np.ndarray
    labels: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.gammas)

    def evaluate(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if len(self.gammas) == 0:
            return np.broadcast_to(self.shift, (len(t), len(self.shift))).copy()
        phase = np.exp(1j * np.outer(t, self.gammas))
        return self.shift[None, :] + (phase @ self.coeffs).real


def _shift_for(vectors: RaceVectors, weighting: str) -> np.ndarray:
    if weighting == "psi":
        return vectors.shift + vectors.constants  # psi has no square-of-primes term
    return vectors.shift.copy()


def oscillatory_terms(vectors: RaceVectors, table: ZeroTable, T: float,
                      weighting: str = "pi", labels=None) -> ZeroSum:
    """Zero-sum data for E_T: coefficient -2 conj(v_chi) e^{-i theta} / sqrt(1/4 + gamma^2)."""
    chars = [c for c in vectors.nonprincipal if labels is None or c.label in labels]
    table.require_complete([c.label for c in chars], T)
    gam, coef, labs = [], [], []
    for chi in chars:
        g = table.ordinates(chi.label, T)
        if len(g) == 0:
            continue
        w = -2.0 * np.exp(-1j * theta_gamma(g)) / np.sqrt(0.25 + g * g)
        gam.append(g)
        coef.append(w[:, None] * np.conj(vectors.vectors[chi.label])[None, :])
        labs.extend([chi.label] * len(g))
    r = vectors.spec.size
    if gam:
        gammas = np.concatenate(gam)
        coeffs = np.vstack(coef)
    else:
        gammas = np.zeros(0)
        coeffs = np.zeros((0, r), dtype=complex)
    return ZeroSum(gammas, coeffs, _shift_for(vectors, weighting), tuple(labs))


def truncated_error_vector(vectors: RaceVectors, table: ZeroTable, x: float, T: float,
                           weighting: str = "pi") -> ErrorVector:
    if x < 1:
        raise DataError("x must be at least 1")
    zs = oscillatory_terms(vectors, table, T, weighting)
    return ErrorVector(float(x), zs.evaluate(math.log(x))[0], weighting)


def truncated_error_series(vectors: RaceVectors, table: ZeroTable, t, T: float,
                           weighting: str = "pi") -> np.ndarray:
    """E_T(e^t) for an array of t, shape (len(t), r)."""
    zs = oscillatory_terms(vectors, table, T, weighting)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty((len(t), vectors.spec.size))
    for i in range(0, len(t), 4096):
        out[i:i + 4096] = zs.evaluate(t[i:i + 4096])
    return out


def truncated_error_grid(zs: ZeroSum, t_start: float, dt: float, n: int,
                         projection=None, block: int = 2000):
    """E_T(e^t) on the uniform grid t_start + j dt, j < n, by block matrix products.

    exp(i gamma (t0 + j dt)) = exp(i gamma t0) exp(i gamma j dt): the second factor
    is a fixed (block x K) matrix, so each block of the series is one product.
    ``projection`` (r-vector) returns the 1-D series <E_T, projection> instead.
    """
    coeffs = zs.coeffs if projection is None else (zs.coeffs @ np.asarray(projection, dtype=float))[:, None]
    shift = zs.shift if projection is None else np.array([zs.shift @ np.asarray(projection, dtype=float)])
    width = coeffs.shape[1]
    out = np.empty((n, width))
    if len(zs.gammas) == 0:
        out[:] = shift
        return out if projection is None else out[:, 0]
    steps = np.exp(1j * np.outer(np.arange(block) * dt, zs.gammas))  # (block, K)
    starts = t_start + dt * np.arange(0, n, block)
    group = 256
    for g0 in range(0, len(starts), group):
        st = starts[g0:g0 + group]
        base = np.exp(1j * np.outer(zs.gammas, st))  # (K, nb)
        for c in range(width):
            vals = (steps @ (base * coeffs[:, c:c + 1])).real  # (block, nb)
            flat = vals.T.reshape(-1)
            lo = g0 * block
            m = min(len(flat), n - lo)
            out[lo:lo + m, c] = flat[:m] + shift[c]
    return out if projection is None else out[:, 0]


def truncation_gap(counts: PrimeCounts, vectors: RaceVectors, table: ZeroTable, x_grid,
                   T: float, weighting: str = "pi") -> dict:
    xs = np.asarray(x_grid, dtype=float)
    zs = oscillatory_terms(vectors, table, T, weighting)
    approx = zs.evaluate(np.log(xs))
    gaps = np.empty(len(xs))
    for i, x in enumerate(xs):
        exact = error_vector(counts, vectors.spec, x, weighting).values
        gaps[i] = np.linalg.norm(exact - approx[i])
    bound = np.sqrt(xs) / T * math.log(T) ** 2 + 1.0 / np.log(xs)
    return {
        "sup_gap": float(gaps.max()),
        "rms_gap": float(np.sqrt(np.mean(gaps ** 2))),
        "bound_ratio": float(np.max(gaps / bound)),
        "gaps": gaps,
    }


def pi_li_error(counts: PrimeCounts, x: float) -> float:
    """(pi(x) - li(x)) log x / sqrt x."""
    if not 2 <= x <= counts.limit:
        raise DataError(f"x = {x} outside [2, {counts.limit}]")
    return math.log(x) / math.sqrt(x) * (counts.pi(x) - li(x))


def pi_li_terms(table: ZeroTable, T: float) -> ZeroSum:
    """Zero sum for pi(x) - li(x): -1 - 2 Re sum_{zeta zeros} x^{i gamma} / (1/2 + i gamma)."""
    table.require_complete(["1.1"], T)
    g = table.ordinates("1.1", T)
    w = -2.0 * np.exp(-1j * theta_gamma(g)) / np.sqrt(0.25 + g * g)
    return ZeroSum(g, w[:, None], np.array([-1.0]), ("1.1",) * len(g))


def ap_vs_total_error(counts: PrimeCounts, q: int, a: int, x: float, mode: str = "pi_over_phi") -> float:
    if counts.modulus != q:
        raise DataError(f"counts are for modulus {counts.modulus}, not {q}")
    if math.gcd(a, q) != 1:
        raise DataError(f"{a} is not a reduced residue mod {q}")
    if not 2 <= x <= counts.limit:
        raise DataError(f"x = {x} outside [2, {counts.limit}]")
    f = euler_phi(q)
    main = counts.pi_ap(x, a)
    if mode == "pi_over_phi":
        ref = counts.pi(x) / f
    elif mode == "li_over_phi":
        ref = li(x) / f
    else:
        raise DataError(f"unknown mode {mode!r}")
    return math.log(x) / math.sqrt(x) * (main - ref)


def residue_sum_constant(q: int, x: float) -> float:
    """The exact value of sum over all reduced a of E(x; q, a) for x >= every prime factor of q."""
    return -euler_phi(q) * len(factorize(q)) * math.log(x) / math.sqrt(x)


def full_race(q: int) -> RaceSpec:
    return RaceSpec(q, tuple(c for c in range(1, q) if math.gcd(c, q) == 1))


def write_series_csv(path, t, values, header=None):
    """CSV with columns t, E1, ..., Er."""
    values = np.atleast_2d(np.asarray(values))
    if values.shape[0] != len(t):
        values = values.T
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header or ["t"] + [f"E{j + 1}" for j in range(values.shape[1])])
        for ti, row in zip(t, values):
            w.writerow([repr(float(ti))] + [repr(float(v)) for v in row])

