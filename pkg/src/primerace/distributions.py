"""Limiting distributions of race error vectors.

Both sampler models and every estimator read a :class:`ZeroSum`, the object
``E_T(e^t) = shift + Re sum_gamma C_gamma exp(i gamma t)`` built in
:mod:`primerace.explicit_formula`.  The limiting random vector replaces each
``exp(i gamma t)`` by a unit-circle variable ``Z_gamma``:

* ``li`` model: the ``Z_gamma`` are independent and uniform;
* ``closure`` model: ``Z_gamma = exp(2 pi i zeta_gamma)`` with ``zeta`` uniform
  on the closure subtorus of the ordinates, which is where ``t * gamma / 2pi``
  equidistributes.

Since ``|t . C_gamma| = 2 |t . v_chi| / sqrt(1/4 + gamma^2)``, the li-model
characteristic function is the Bessel product evaluated by :func:`charfn_eval`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.special import j0, jn_zeros

from .characters import RaceSpec, race_vectors
from .errors import ConvergenceError, DataError
from .explicit_formula import ZeroSum, oscillatory_terms, pi_li_terms, truncated_error_grid
from .geometry import Region, region_contains
from .relations import SubtorusSpec, sample_torus

__all__ = [
    "J0_FIRST_ROOT",
    "bessel_j0",
    "j0_envelope",
    "CharFnSpec",
    "charfn_eval",
    "charfn_envelope",
    "SamplerModel",
    "select_zero_sum",
    "EmpiricalMeasure",
    "sample",
    "sample_zero_sum",
    "convolve",
    "FourierEstimate",
    "fourier_interval_prob",
    "positivity_probability",
    "TimeAverage",
    "time_average_density",
    "time_average_positive",
    "DensityReport",
    "two_way_density",
    "tail_diagnostics",
    "convolution_tail_check",
    "effective_terms",
    "envelope_integrability",
    "SubspaceDensity",
    "subspace_density",
]

J0_FIRST_ROOT = float(jn_zeros(0, 1)[0])
_trapezoid = getattr(np, "trapezoid", None) or np.trapz
ASSUMPTIONS = ("GRH",)


def bessel_j0(x):
    out = j0(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def j0_envelope(x):
    """min{1, sqrt(2 / (pi |x|))}, the uniform bound for |J0|."""
    ax = np.abs(np.asarray(x, dtype=float))
    with np.errstate(divide="ignore"):
        env = np.minimum(1.0, np.sqrt(2.0 / (math.pi * ax)))
    return float(env) if np.ndim(env) == 0 else env


# --------------------------------------------------------------------------
# characteristic functions


@dataclass(frozen=True)
class CharFnSpec:
    """Terms (v_k, gamma_k) and shift b of exp(i t.b) prod_k J0(2 |t.v_k| / sqrt(1/4 + gamma_k^2))."""

    vectors: np.ndarray  # (K, r) complex
    gammas: np.ndarray  # (K,)
    shift: np.ndarray  # (r,)

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        g = np.atleast_1d(np.asarray(self.gammas, dtype=float))
        b = np.atleast_1d(np.asarray(self.shift, dtype=float))
        if len(g) == 0:
            V = np.zeros((0, len(b)), dtype=complex)
        if V.shape != (len(g), len(b)):
            raise DataError(f"term vectors have shape {V.shape}, expected ({len(g)}, {len(b)})")
        if np.any(g <= 0):
            raise DataError("ordinates must be positive")
        object.__setattr__(self, "vectors", V)
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "shift", b)

    @property
    def dimension(self) -> int:
        return len(self.shift)

    @property
    def weights(self) -> np.ndarray:
        return 2.0 / np.sqrt(0.25 + self.gammas ** 2)

    @classmethod
    def from_zero_sum(cls, zs: ZeroSum) -> CharFnSpec:
        # |t . C| = |t . v| * 2/sqrt(1/4+gamma^2), so v = C sqrt(1/4+gamma^2)/2 has the right moduli
        scale = np.sqrt(0.25 + zs.gammas ** 2) / 2.0
        return cls(zs.coeffs * scale[:, None], zs.gammas, zs.shift)

    def project(self, direction) -> CharFnSpec:
        """Characteristic function of the 1-D variable direction . X."""
        u = np.asarray(direction, dtype=float)
        return CharFnSpec((self.vectors @ u)[:, None], self.gammas, np.array([self.shift @ u]))

    def amplitudes(self) -> np.ndarray:
        """For a 1-D spec, the cosine amplitudes: X = b + sum_k a_k cos(phase_k)."""
        if self.dimension != 1:
            raise DataError("amplitudes are defined for one-dimensional specs")
        return np.abs(self.vectors[:, 0]) * self.weights


def _arguments(spec: CharFnSpec, t: np.ndarray) -> np.ndarray:
    return np.abs(t @ spec.vectors.T) * spec.weights[None, :]


def charfn_eval(spec: CharFnSpec, t):
    """Evaluate the Bessel-product characteristic function at one t or rows of t."""
    t = np.asarray(t, dtype=float)
    single = t.ndim <= 1 and not (t.ndim == 1 and spec.dimension == 1 and len(t) > 1)
    pts = t.reshape(-1, spec.dimension)
    out = np.empty(len(pts), dtype=complex)
    step = max(1, 2_000_000 // max(1, len(spec.gammas)))
    for i in range(0, len(pts), step):
        blk = pts[i:i + step]
        out[i:i + step] = np.exp(1j * blk @ spec.shift) * np.prod(j0(_arguments(spec, blk)), axis=1)
    return complex(out[0]) if single else out


def charfn_envelope(spec: CharFnSpec, t):
    t = np.asarray(t, dtype=float)
    pts = t.reshape(-1, spec.dimension)
    env = np.prod(j0_envelope(_arguments(spec, pts)), axis=1)
    return float(env[0]) if t.ndim <= 1 and len(env) == 1 else env


# --------------------------------------------------------------------------
# samplers


SELECTIONS = ("all", "sturdy", "robust", "zeta_only")


@dataclass(frozen=True)
class SamplerModel:
    mode: str = "li"  # "li" or "closure"
    selection: str = "all"
    T: float = 100.0
    k: int | None = None
    W: float | None = None
    include_shift: bool = True
    subtorus: SubtorusSpec | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in ("li", "closure"):
            raise DataError(f"unknown sampler mode {self.mode!r}")
        if self.selection not in SELECTIONS:
            raise DataError(f"unknown zero selection {self.selection!r}")
        if self.selection == "sturdy" and not self.k:
            raise DataError("the sturdy selection needs k")
        if self.selection == "robust" and self.W is None:
            raise DataError("the robust selection needs W")
        if self.mode == "closure" and self.subtorus is None:
            raise DataError("the closure model needs a SubtorusSpec")

    def describe(self) -> dict:
        return {"mode": self.mode, "selection": self.selection, "T": self.T, "k": self.k,
                "W": self.W, "include_shift": self.include_shift}


def _restrict(zs: ZeroSum, keep: np.ndarray) -> ZeroSum:
    labels = tuple(lab for lab, k in zip(zs.labels, keep) if k) if zs.labels else ()
    return ZeroSum(zs.gammas[keep], zs.coeffs[keep], zs.shift, labels)


def select_zero_sum(vectors, table, model: SamplerModel, report=None, weighting: str = "pi") -> ZeroSum:
    """The ZeroSum whose zeros the model's selection keeps."""
    T = model.T
    if model.selection == "zeta_only":
        zs = pi_li_terms(table, T)
        if report is not None and "1.1" in report.characters:
            ss = set(report.self_sufficient("1.1"))
            zs = _restrict(zs, np.array([g in ss for g in zs.gammas], dtype=bool))
    elif model.selection == "all":
        zs = oscillatory_terms(vectors, table, T, weighting)
    else:
        if report is None:
            raise DataError(f"the {model.selection} selection needs a SufficiencyReport")
        if report.height < T:
            raise DataError(f"sufficiency report covers T <= {report.height:g}, model asks for {T:g}")
        if model.selection == "sturdy":
            labels = set(report.sturdy_characters(model.k))
        else:
            labels = set(report.robust_characters(model.W))
        labels &= {c.label for c in vectors.nonprincipal}
        zs = oscillatory_terms(vectors, table, T, weighting, labels=labels)
        keep = np.array([g in set(report.self_sufficient(lab))
                         for g, lab in zip(zs.gammas, zs.labels)], dtype=bool)
        zs = _restrict(zs, keep)
    if len(zs.gammas) == 0:
        raise DataError(f"zero selection {model.selection!r} is empty")
    return zs


@dataclass
class EmpiricalMeasure:
    """Equal-weight point cloud standing in for a probability measure on R^r."""

    points: np.ndarray
    seed: int | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or len(pts) == 0:
            raise DataError("an empirical measure needs a nonempty (n, r) array")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    def mass(self, region) -> float:
        if isinstance(region, Region):
            inside = region_contains(region, self.points)
        else:
            inside = np.asarray(region(self.points), dtype=bool)
        return float(np.mean(inside))

    def mean(self) -> np.ndarray:
        return self.points.mean(axis=0)

    def sigma(self) -> float:
        """sqrt(E|x|^2 - |E x|^2), a scalar."""
        m = self.mean()
        var = float(np.mean(np.sum(self.points ** 2, axis=1)) - m @ m)
        return math.sqrt(max(var, 0.0))

    def second_moment(self) -> float:
        return float(np.mean(np.sum(self.points ** 2, axis=1)))

    def charfn(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Empirical mean of exp(i t.x) and its Monte Carlo standard error, per row of t."""
        t = np.asarray(t, dtype=float).reshape(-1, self.dimension)
        vals = np.empty(len(t), dtype=complex)
        for i, row in enumerate(t):
            vals[i] = np.mean(np.exp(1j * (self.points @ row)))
        se = np.sqrt(np.maximum(1.0 - np.abs(vals) ** 2, 0.0) / self.n)
        return vals, se

    def tail_mass(self, V: float, center=None) -> float:
        c = np.zeros(self.dimension) if center is None else np.asarray(center, dtype=float)
        return float(np.mean(np.linalg.norm(self.points - c, axis=1) >= V))


def _chunk_rows(K: int) -> int:
    return int(max(256, min(65536, 4_000_000 // max(K, 1))))


def sample_zero_sum(zs: ZeroSum, n: int, seed: int, *, include_shift: bool = True,
                    subtorus: SubtorusSpec | None = None, projection=None) -> np.ndarray:
    """Draws of shift + Re sum C_gamma Z_gamma (li model, or closure model if ``subtorus``).

    Chunks and their seeds depend only on (n, K, seed), so results do not depend
    on how the work is scheduled.
    """
    if n < 1:
        raise DataError("sample size must be positive")
    C = zs.coeffs if projection is None else (zs.coeffs @ np.asarray(projection, dtype=float))[:, None]
    shift = zs.shift if projection is None else np.array([zs.shift @ np.asarray(projection, dtype=float)])
    K, r = C.shape
    out = np.empty((n, r))
    if subtorus is not None:
        if subtorus.dimension != K:
            raise DataError(f"subtorus has dimension {subtorus.dimension}, selection has {K} zeros")
        phases = 2 * math.pi * sample_torus(subtorus, n, seed).points
        out[:] = np.cos(phases) @ C.real - np.sin(phases) @ C.imag
    else:
        rows = _chunk_rows(K)
        starts = range(0, n, rows)
        seeds = np.random.SeedSequence(seed).spawn(len(starts))
        for s0, ss in zip(starts, seeds):
            size = min(rows, n - s0)
            rng = np.random.Generator(np.random.Philox(ss))
            ph = rng.random((size, K)) * (2 * math.pi)
            if r == 1:
                # independent uniform phases absorb arg C: one cosine per entry
                out[s0:s0 + size, 0] = np.cos(ph) @ np.abs(C[:, 0])
            else:
                out[s0:s0 + size] = np.cos(ph) @ C.real - np.sin(ph) @ C.imag
    if include_shift:
        out += shift[None, :]
    return out


def sample(model: SamplerModel, vectors, report, table, n: int, seed: int,
           weighting: str = "pi") -> EmpiricalMeasure:
    zs = select_zero_sum(vectors, table, model, report, weighting)
    pts = sample_zero_sum(zs, n, seed, include_shift=model.include_shift,
                          subtorus=model.subtorus if model.mode == "closure" else None)
    prov = dict(model.describe(), zeros=len(zs.gammas), weighting=weighting)
    return EmpiricalMeasure(pts, seed, prov)


def convolve(m1: EmpiricalMeasure, m2: EmpiricalMeasure, n: int, seed: int) -> EmpiricalMeasure:
    if m1.dimension != m2.dimension:
        raise DataError(f"cannot convolve measures on R^{m1.dimension} and R^{m2.dimension}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    i = rng.integers(0, m1.n, size=n)
    j = rng.integers(0, m2.n, size=n)
    return EmpiricalMeasure(m1.points[i] + m2.points[j], seed,
                            {"convolution_of": [m1.provenance, m2.provenance]})


# --------------------------------------------------------------------------
# Fourier inversion

_GL_HI = np.polynomial.legendre.leggauss(20)
_GL_LO = np.polynomial.legendre.leggauss(10)


def _panel_integral(f, lo: float, hi: float, width: float, panel_tol: float = 1e-9,
                    max_depth: int = 8) -> float:
    """Gauss-Legendre 20/10 panels on [lo, hi]; panels whose two rules disagree are bisected."""
    if hi <= lo:
        return 0.0
    m = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, m + 1)
    a, b = edges[:-1], edges[1:]
    total = 0.0
    for _ in range(max_depth + 1):
        mid, half = (a + b) / 2, (b - a) / 2
        xh = mid[:, None] + half[:, None] * _GL_HI[0][None, :]
        xl = mid[:, None] + half[:, None] * _GL_LO[0][None, :]
        ih = half * (f(xh.ravel()).reshape(xh.shape) @ _GL_HI[1])
        il = half * (f(xl.ravel()).reshape(xl.shape) @ _GL_LO[1])
        bad = np.abs(ih - il) > panel_tol
        total += float(np.sum(ih[~bad]))
        if not bad.any():
            return total
        a, b = a[bad], b[bad]
        mids = (a + b) / 2
        a, b = np.concatenate([a, mids]), np.concatenate([mids, b])
    return total + float(np.sum(ih[bad]))


@dataclass(frozen=True)
class FourierEstimate:
    estimate: float
    error: float
    cutoff: float
    extrapolated: bool


def _inversion(spec: CharFnSpec, freqs: list[tuple[float, float]], const: float,
               tol: float, max_cutoff: float) -> FourierEstimate:
    """const + (1/pi) int_0^inf sum_j w_j sin(omega_j t) R(t) / t dt with R the Bessel product."""
    amps = spec.amplitudes()
    amps = amps[amps > 1e-15 * max(1.0, float(amps.max(initial=0.0)))]  # J0(0) = 1 factors
    A = float(amps.sum())
    top = A + max(abs(w) for w, _ in freqs) + 1e-12
    width = math.pi / (2 * top)
    per_batch = max(1, 100_000 // (20 * max(1, len(amps))))  # panels per evaluation batch

    def f(t):
        R = np.prod(j0(np.outer(t, amps)), axis=1) if len(amps) else np.ones_like(t)
        s = sum(c * np.sin(w * t) for w, c in freqs)
        return s * R / t

    def integrate(lo, hi):
        edges = np.linspace(lo, hi, int(math.ceil((hi - lo) / (width * per_batch))) + 1)
        return math.fsum(_panel_integral(f, a, b, width) for a, b in zip(edges[:-1], edges[1:]))

    def envelope(t):
        return float(np.prod(j0_envelope(t * amps)))

    cutoff = min(10.0 / float(amps.max()) if len(amps) else 1.0, max_cutoff)
    partial = integrate(0.0, cutoff)
    sums = [partial]
    best_prev = None
    while cutoff < max_cutoff:
        new = min(2 * cutoff, max_cutoff)
        partial += integrate(cutoff, new)
        cutoff = new
        sums.append(partial)
        d1 = sums[-1] - sums[-2]
        best, extr = sums[-1], False
        if len(sums) >= 3 and sums[-2] != sums[-3]:
            rho = d1 / (sums[-2] - sums[-3])
            if 0.0 < rho < 0.9:
                # increments shrinking geometrically under doubling: Aitken step
                best, extr = sums[-1] + d1 * rho / (1 - rho), True
        if abs(d1) < tol * math.pi and (len(sums) < 3 or abs(sums[-2] - sums[-3]) < tol * math.pi
                                         or envelope(cutoff) < tol):
            return FourierEstimate(const + sums[-1] / math.pi, abs(d1) / math.pi, cutoff, False)
        if extr and best_prev is not None and abs(best - best_prev) < tol * math.pi:
            return FourierEstimate(const + best / math.pi, abs(best - best_prev) / math.pi, cutoff, True)
        best_prev = best if extr else None
    raise ConvergenceError(f"Fourier inversion did not settle by cutoff {max_cutoff:g}")


def fourier_interval_prob(spec: CharFnSpec, a: float, b: float, tol: float = 1e-6,
                          max_cutoff: float = 1e6) -> FourierEstimate:
    """mu((a, b]) for a 1-D spec by the inversion integral over t in (0, cutoff].

    With phi(t) = exp(i t beta) R(t) the integrand (e^{-ita} - e^{-itb}) phi / (it)
    has real part (sin((beta - a) t) - sin((beta - b) t)) R(t) / t.  The cutoff
    doubles until the value changes by less than ``tol``; ``b = inf`` is the
    limit case, whose second term integrates to pi/2.
    """
    if spec.dimension != 1:
        raise DataError("interval probabilities need a one-dimensional spec")
    if not a < b:
        raise DataError("need a < b")
    beta = float(spec.shift[0])
    freqs, const = [], 0.0
    if math.isinf(a):
        const += 0.5
    else:
        freqs.append((beta - a, 1.0))
    if math.isinf(b):
        const += 0.5
    else:
        freqs.append((beta - b, -1.0))
    if not freqs:
        return FourierEstimate(1.0, 0.0, 0.0, False)
    return _inversion(spec, freqs, const, tol, max_cutoff)


def positivity_probability(spec: CharFnSpec, tol: float = 1e-6) -> FourierEstimate:
    """P(X > 0) = 1/2 + (1/pi) int_0^inf sin(beta t) R(t) / t dt."""
    return fourier_interval_prob(spec, 0.0, math.inf, tol)


# --------------------------------------------------------------------------
# time averages


@dataclass(frozen=True)
class TimeAverage:
    estimate: float
    error: float
    y_used: float
    n: int


def _batch_means_error(flags: np.ndarray, batches: int = 50) -> float:
    n = len(flags)
    if n < 2 * batches:
        p = float(flags.mean())
        return math.sqrt(max(p * (1 - p), 0.0) / max(n, 1))
    m = n // batches
    means = flags[: m * batches].reshape(batches, m).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def time_average_density(series, region, t=None) -> TimeAverage:
    """Fraction of grid points where E_T(e^t) lies in ``region``.

    ``region`` is a Region, a callable on an (n, r) array, or None for all of R^r.
    The error is a batch-means standard error.
    """
    vals = np.asarray(series, dtype=float)
    if vals.size == 0:
        raise DataError("empty series")
    if vals.ndim == 1:
        vals = vals[:, None]
    if t is not None:
        t = np.asarray(t, dtype=float)
        if len(t) != len(vals):
            raise DataError("t grid and series lengths differ")
        if len(t) > 2 and not np.allclose(np.diff(t), t[1] - t[0], rtol=1e-6, atol=1e-12):
            raise DataError("time-average grid must be uniform in t")
        y = float(t[-1] - t[0] + (t[1] - t[0] if len(t) > 1 else 0.0))
    else:
        y = float(len(vals))
    if region is None:
        flags = np.ones(len(vals), dtype=float)
    elif isinstance(region, Region):
        flags = region_contains(region, vals).astype(float)
    else:
        flags = np.asarray(region(vals), dtype=float)
    return TimeAverage(float(flags.mean()), _batch_means_error(flags), y, len(vals))


def time_average_positive(zs: ZeroSum, t_max: float, dt: float = 1e-3, t_start: float = 0.0,
                          projection=None) -> TimeAverage:
    """Share of t in [t_start, t_max) with the (projected) E_T(e^t) > 0, on a grid of step dt."""
    n = int(round((t_max - t_start) / dt))
    if n < 1:
        raise DataError("empty time grid")
    vals = truncated_error_grid(zs, t_start, dt, n, projection=projection)
    flags = (np.asarray(vals).reshape(n, -1)[:, 0] > 0).astype(float)
    return TimeAverage(float(flags.mean()), _batch_means_error(flags), n * dt, n)


# --------------------------------------------------------------------------
# two-way races


@dataclass(frozen=True)
class DensityReport:
    race: dict
    estimator: str
    estimate: float
    error: float
    T: float
    n_samples: int | None
    Y: float | None
    zero_source: list
    sufficiency_context: dict | None
    seed: int | None
    selection: str = "all"
    zeros_used: int = 0
    assumptions: tuple = ASSUMPTIONS

    def to_dict(self) -> dict:
        return {
            "race": self.race, "estimator": self.estimator, "estimate": self.estimate,
            "error": self.error, "T": self.T, "n_samples": self.n_samples, "Y": self.Y,
            "zero_source": list(self.zero_source),
            "sufficiency_context": self.sufficiency_context,
            "assumptions": list(self.assumptions), "seed": self.seed,
            "selection": self.selection, "zeros_used": self.zeros_used,
        }


ESTIMATORS = ("mc", "fourier", "time_avg")


def two_way_density(q: int, a: int, b: int, table, report=None, *, selection: str = "all",
                    estimator: str = "mc", T: float | None = None, k: int | None = None,
                    W: float | None = None, n: int = 10**6, seed: int = 0,
                    t_max: float = 5000.0, dt: float = 1e-3) -> DensityReport:
    """Logarithmic density of {pi(x; q, a) > pi(x; q, b)} in the limiting model.

    The race variable is E_a - E_b, whose shift carries the c(q, b) - c(q, a) bias.
    """
    if estimator not in ESTIMATORS:
        raise DataError(f"unknown estimator {estimator!r}")
    spec = RaceSpec(q, (a, b))
    vectors = race_vectors(spec)
    if T is None:
        T = min(table.height(c.label) for c in vectors.nonprincipal)
    model = SamplerModel("li", selection, T, k=k, W=W)
    zs = select_zero_sum(vectors, table, model, report)
    proj = np.array([1.0, -1.0])
    sources = sorted({r.source for lab in set(zs.labels) for r in table.records(lab, T)})
    ctx = None
    if report is not None:
        ctx = {"H": report.coeff_bound, "p": report.precision_digits}
    common = dict(race={"q": q, "a": a, "b": b}, T=float(T), zero_source=sources,
                  sufficiency_context=ctx, selection=selection, zeros_used=len(zs.gammas))
    if estimator == "mc":
        x = sample_zero_sum(zs, n, seed, projection=proj)[:, 0]
        p = float(np.mean(x > 0))
        err = math.sqrt(max(p * (1 - p), 1.0 / n) / n)
        return DensityReport(estimator="mc", estimate=p, error=err, n_samples=n, Y=None,
                             seed=seed, **common)
    if estimator == "fourier":
        cf = CharFnSpec.from_zero_sum(zs).project(proj)
        est = positivity_probability(cf)
        return DensityReport(estimator="fourier", estimate=est.estimate, error=est.error,
                             n_samples=None, Y=None, seed=None, **common)
    ta = time_average_positive(zs, t_max, dt, projection=proj)
    return DensityReport(estimator="time_avg", estimate=ta.estimate, error=ta.error,
                         n_samples=ta.n, Y=ta.y_used, seed=None, **common)


# --------------------------------------------------------------------------
# tails


def tail_diagnostics(m: EmpiricalMeasure, mean=None, sigma=None, lambdas=(2, 4, 8)) -> dict:
    """Chebyshev checks P(|x - E| >= lambda sigma) <= 1/lambda^2 and a log-mass vs sqrt(V) fit."""
    E = m.mean() if mean is None else np.asarray(mean, dtype=float)
    s = m.sigma() if sigma is None else float(sigma)
    dist = np.linalg.norm(m.points - E, axis=1)
    checks = []
    for lam in lambdas:
        mass = float(np.mean(dist >= lam * s)) if s > 0 else 0.0
        err = math.sqrt(max(mass * (1 - mass), 0.0) / m.n)
        bound = 1.0 / lam ** 2
        checks.append({"lambda": lam, "mass": mass, "bound": bound, "mc_error": err,
                       "holds": mass <= bound + 3 * err})
    norms = np.linalg.norm(m.points, axis=1)
    profile = {"V": [], "mass": [], "slope": None, "intercept": None, "r2": None,
               "decreasing": True}
    if s > 0:
        Vs = np.quantile(norms, [0.5, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99, 0.995, 0.999])
        Vs = np.unique(Vs)
        masses = np.array([np.mean(norms >= V) for V in Vs])
        ok = masses > 0
        profile["V"] = Vs.tolist()
        profile["mass"] = masses.tolist()
        profile["decreasing"] = bool(np.all(np.diff(masses) <= 0))
        if ok.sum() >= 3:
            xs, ys = np.sqrt(Vs[ok]), np.log(masses[ok])
            slope, intercept = np.polyfit(xs, ys, 1)
            resid = ys - (slope * xs + intercept)
            ss = float(np.sum((ys - ys.mean()) ** 2))
            profile.update(slope=float(slope), intercept=float(intercept),
                           r2=float(1 - np.sum(resid ** 2) / ss) if ss > 0 else 1.0)
    return {"mean": E.tolist(), "sigma": s, "chebyshev": checks,
            "all_hold": all(c["holds"] for c in checks), "profile": profile}


def convolution_tail_check(m1: EmpiricalMeasure, m2: EmpiricalMeasure, V_values=None,
                           n: int | None = None, seed: int = 0) -> dict:
    """Check m2(|x| >= V) <= (4/3) (m1 * m2)(|x| >= V - V0) with V0 = 2 sigma(m1) + |E(m1)|."""
    V0 = 2 * m1.sigma() + float(np.linalg.norm(m1.mean()))
    m0 = convolve(m1, m2, n or max(m1.n, m2.n), seed)
    if V_values is None:
        top = float(np.quantile(np.linalg.norm(m2.points, axis=1), 0.999))
        V_values = np.linspace(V0, V0 + max(top, 1e-9), 12)[1:]
    rows = []
    for V in V_values:
        if V <= V0:
            continue
        lhs = m2.tail_mass(V)
        rhs = m0.tail_mass(V - V0)
        err = math.sqrt(max(lhs * (1 - lhs), 0) / m2.n) + math.sqrt(max(rhs * (1 - rhs), 0) / m0.n)
        rows.append({"V": float(V), "lhs": lhs, "rhs": 4.0 / 3.0 * rhs,
                     "holds": lhs <= 4.0 / 3.0 * rhs + 3 * err})
    return {"V0": V0, "checks": rows, "all_hold": all(r["holds"] for r in rows)}


# --------------------------------------------------------------------------
# densities on subspaces


def _orthonormal_rows(basis, r: int) -> np.ndarray:
    B = np.atleast_2d(np.asarray(basis, dtype=float))
    if B.shape[1] != r:
        raise DataError(f"subspace basis must live in R^{r}")
    q, rr = np.linalg.qr(B.T)
    if np.min(np.abs(np.diag(rr))) < 1e-12:
        raise DataError("subspace basis is degenerate")
    return q.T


def effective_terms(spec: CharFnSpec, basis, tol: float = 1e-10) -> int:
    """Fewest terms whose argument |t.v_k| stays nonzero along any direction t of the subspace.

    A term is lost along direction t when t is orthogonal to both Re v_k and
    Im v_k projected to the subspace; this returns K minus the largest number
    of terms lost along a single direction.
    """
    U = _orthonormal_rows(basis, spec.dimension)
    ell = U.shape[0]
    P = np.stack([spec.vectors.real @ U.T, spec.vectors.imag @ U.T], axis=1)  # (K, 2, ell)
    K = len(spec.gammas)
    if K == 0:
        return 0
    scale = max(1.0, float(np.abs(P).max()))
    null_dirs, zero = [], 0
    for k in range(K):
        s = np.linalg.svd(P[k], compute_uv=False)
        rank = int(np.sum(s > tol * scale))
        if rank == 0:
            zero += 1
        elif rank < ell:
            _, _, vt = np.linalg.svd(P[k])
            null_dirs.append(vt[-1])
    worst = 0
    for d in null_dirs:
        worst = max(worst, sum(abs(abs(d @ e) - 1.0) < 1e-8 for e in null_dirs))
    return K - zero - worst


def envelope_integrability(k: int, ell: int, decades: int = 8) -> dict:
    """Whether int_{R^ell} prod of k J0 envelopes converges: radial integrals over decades.

    The decade increments of int min(1, rho^{-k/2}) rho^{ell-1} d rho shrink by a
    fixed ratio < 1 exactly when k/2 > ell.
    """
    def g(rho):
        return min(1.0, rho ** (-k / 2)) * rho ** (ell - 1)

    incs = [quad(g, 10.0 ** j, 10.0 ** (j + 1), limit=200)[0] for j in range(decades)]
    ratios = [incs[j + 1] / incs[j] for j in range(len(incs) - 1)]
    return {"k": k, "ell": ell, "increments": incs, "ratios": ratios,
            "converges": bool(ratios[-1] < 0.9 and ratios[-2] < 0.9)}


@dataclass(frozen=True)
class SubspaceDensity:
    coordinates: tuple  # one grid per orthonormal direction
    values: np.ndarray
    mass: float
    effective_terms: int
    method: str


def _arcsine(s, centre: float, amp: float) -> np.ndarray:
    d = np.asarray(s, dtype=float) - centre
    out = np.zeros_like(d)
    inside = np.abs(d) < amp
    out[inside] = 1.0 / (math.pi * np.sqrt(amp ** 2 - d[inside] ** 2))
    return out


def subspace_density(spec: CharFnSpec, basis, grid, tail_tol: float = 1e-5,
                     max_nodes: int = 2_000_000) -> SubspaceDensity:
    """Density of the measure's projection to an ell-dimensional subspace (ell <= 2).

    Coordinates are s = U x for an orthonormal basis U of the subspace.  The
    inversion integral is a trapezoid sum on a tau-grid whose spacing avoids
    aliasing for the bounded support; it is cut once the J0 envelope tail is
    below ``tail_tol``.  A single term in dimension one is the arcsine law,
    returned in closed form; otherwise at least 2 ell + 1 effective terms are
    needed for the inversion integral to converge.
    """
    U = _orthonormal_rows(basis, spec.dimension)
    ell = U.shape[0]
    if ell > 2:
        raise DataError("subspace densities are limited to dimension <= 2")
    grids = (np.asarray(grid, dtype=float),) if ell == 1 else tuple(np.asarray(g, dtype=float) for g in grid)
    if len(grids) != ell:
        raise DataError(f"need {ell} coordinate grid(s)")
    keff = effective_terms(spec, U)
    centre = U @ spec.shift
    amps_full = np.linalg.norm(
        np.stack([spec.vectors.real @ U.T, spec.vectors.imag @ U.T], axis=1), axis=(1, 2)
    ) * spec.weights if len(spec.gammas) else np.zeros(0)
    if ell == 1 and len(spec.gammas) == 1:
        amp = amps_full[0]
        vals = _arcsine(grids[0], centre[0], amp) if amp > 0 else np.zeros_like(grids[0])
        return SubspaceDensity(grids, vals, 1.0, keff, "arcsine")
    if keff <= 2 * ell:
        raise DataError(
            f"only {keff} effective zeros along the subspace; the inversion integral needs "
            f"more than {2 * ell} (envelope decay t^(-k/2) must beat dimension {ell})")
    A = float(amps_full.sum())
    reach = max(float(np.max(np.abs(g - c))) for g, c in zip(grids, centre))
    step = math.pi / (A + reach + 1e-9)
    # tau cutoff: radial envelope tail below tail_tol
    radius = step
    while True:
        probe = radius * np.vstack([U[i] for i in range(ell)])
        env = float(np.max(charfn_envelope(spec, probe)))
        if env * radius ** ell / (keff / 2 - ell) < tail_tol:
            break
        radius *= 1.5
        if (radius / step) ** ell > max_nodes:
            break
    m = int(math.ceil(radius / step))
    taus = step * np.arange(0, m + 1)
    if ell == 1:
        phi = charfn_eval(spec, taus[:, None] * U[0][None, :])
        w = np.full(len(taus), step)
        w[0] = step / 2
        vals = (np.cos(np.outer(grids[0], taus)) @ (w * phi.real)
                + np.sin(np.outer(grids[0], taus)) @ (w * phi.imag)) / math.pi
        mass = float(_trapezoid(vals, grids[0]))
    else:
        full = step * np.arange(-m, m + 1)
        T1, T2 = np.meshgrid(full, full, indexing="ij")
        pts = T1.ravel()[:, None] * U[0][None, :] + T2.ravel()[:, None] * U[1][None, :]
        phi = charfn_eval(spec, pts).reshape(T1.shape)
        E1 = np.exp(-1j * np.outer(grids[0], full))
        E2 = np.exp(-1j * np.outer(grids[1], full))
        vals = (E1 @ phi @ E2.T).real * step ** 2 / (4 * math.pi ** 2)
        mass = float(_trapezoid(_trapezoid(vals, grids[1], axis=1), grids[0]))
    return SubspaceDensity(grids, vals, mass, keff, "fourier")
