"""Double-precision evaluation of Dirichlet L-functions on the critical line.

L(s, chi) = k^{-s} sum_a chi(a) zeta(s, a/k), with the Hurwitz zeta function
summed by Euler-Maclaurin.  Everything is vectorised over t, which is what the
zero scan needs; it is accurate to roughly 1e-13 relative for |t| up to a few
thousand.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import bernoulli, loggamma

from .characters import Character

__all__ = ["hurwitz_zeta", "dirichlet_l", "root_number", "hardy_phase", "hardy_z"]

_EM_TERMS = 20
# B_{2j} / (2j)!, j = 1.._EM_TERMS
_BERN = bernoulli(2 * _EM_TERMS)
_EM_COEFF = np.array([_BERN[2 * j] / math.factorial(2 * j) for j in range(1, _EM_TERMS + 1)])


def hurwitz_zeta(s, alpha: float) -> np.ndarray:
    """zeta(s, alpha) for complex array s and 0 < alpha <= 1."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    big = float(np.max(np.abs(s))) if s.size else 0.0
    # Tail ratio |s| / (2 pi (N + alpha)) stays below 1/pi, so 20 EM terms reach ~1e-20.
    n_terms = int(math.ceil(0.5 * big)) + 10
    m = np.arange(n_terms, dtype=float) + alpha
    log_m = np.log(m)
    total = np.exp(-np.outer(s, log_m)).sum(axis=1)
    base = n_terms + alpha
    log_base = math.log(base)
    tail_power = np.exp(-s * log_base)  # base^{-s}
    total = total + tail_power * base / (s - 1) + 0.5 * tail_power
    rising = s.copy()  # s (s+1) ... (s + 2j - 2)
    power = tail_power / base  # base^{-s-1}
    for j in range(1, _EM_TERMS + 1):
        total = total + _EM_COEFF[j - 1] * rising * power
        rising = rising * (s + 2 * j - 1) * (s + 2 * j)
        power = power / (base * base)
    return total


def dirichlet_l(chi: Character, s) -> np.ndarray:
    """L(s, chi) for a character mod k (principal characters give the partial Euler product)."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    k = chi.modulus
    total = np.zeros_like(s)
    for a in range(1, k + 1):
        val = chi(a)
        if val != 0:
            total = total + val * hurwitz_zeta(s, a / k)
    return np.exp(-s * math.log(k)) * total


def gauss_sum(chi: Character) -> complex:
    k = chi.modulus
    return sum(chi(a) * complex(math.cos(2 * math.pi * a / k), math.sin(2 * math.pi * a / k))
               for a in range(1, k + 1))


def root_number(chi: Character) -> complex:
    """epsilon(chi) = tau(chi) / (i^a sqrt(k)) for primitive chi."""
    if chi.modulus == 1:
        return 1 + 0j
    return gauss_sum(chi) / ((1j ** chi.parity) * math.sqrt(chi.modulus))


def hardy_phase(chi: Character, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = chi.parity
    return 0.5 * t * math.log(chi.modulus / math.pi) + loggamma((0.5 + a + 1j * t) / 2).imag


def hardy_z(chi: Character, t, with_imag: bool = False):
    """The real-valued rotation of L(1/2 + it, chi) whose sign changes are the zeros.

    ``chi`` must be primitive.  With ``with_imag`` the (ideally zero) imaginary
    part is returned as well, as a consistency diagnostic.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    eps = root_number(chi)
    rot = np.exp(1j * hardy_phase(chi, t)) / np.sqrt(eps)
    val = rot * dirichlet_l(chi, 0.5 + 1j * t)
    if with_imag:
        return val.real, val.imag
    return val.real
