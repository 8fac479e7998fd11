"""Dirichlet characters in Conrey labelling.

A character mod q is labelled ``"q.n"`` with ``1 <= n <= q`` and ``gcd(n, q) = 1``
(the principal character is ``q.1``; zeta is ``1.1``).  Values are kept as exact
angles in ``Fraction`` form, ``chi(a) = exp(2*pi*i*angle)``, so orthogonality and
conjugation can be checked without rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .errors import DataError

__all__ = [
    "Character",
    "RaceSpec",
    "RaceVectors",
    "characters",
    "character_from_label",
    "parse_label",
    "square_root_count",
    "race_constants",
    "race_vectors",
    "factorize",
    "euler_phi",
    "coprime_residues",
]


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def euler_phi(q: int) -> int:
    result = q
    for p in factorize(q):
        result = result // p * (p - 1)
    return result


def coprime_residues(q: int) -> list[int]:
    if q == 1:
        return [1]
    return [a for a in range(1, q) if math.gcd(a, q) == 1]


def _is_primitive_root(g: int, m: int, order: int) -> bool:
    if math.gcd(g, m) != 1:
        return False
    return all(pow(g, order // p, m) != 1 for p in factorize(order))


@lru_cache(maxsize=None)
def _conrey_generator(p: int) -> int:
    # Smallest g that generates (Z/p^e)^* for every e, i.e. a primitive root mod p^2.
    m = p * p
    order = p * (p - 1)
    g = 2
    while not _is_primitive_root(g, m, order):
        g += 1
    return g


@lru_cache(maxsize=None)
def _odd_prime_power_logs(p: int, e: int) -> dict[int, int]:
    m = p**e
    g = _conrey_generator(p)
    logs = {}
    x = 1
    for k in range(euler_phi(m)):
        logs[x] = k
        x = x * g % m
    return logs


@lru_cache(maxsize=None)
def _two_power_logs(e: int) -> dict[int, tuple[int, int]]:
    # n = eps * 5^a mod 2^e, with eps in {0, 1} standing for +1/-1.
    m = 2**e
    logs = {}
    x = 1
    for a in range(max(1, m // 4)):
        logs[x] = (0, a)
        logs[(-x) % m] = (1, a)
        x = x * 5 % m
    return logs


def parse_label(label: str) -> tuple[int, int]:
    """Split ``"q.n"`` into integers, validating that it names a character."""
    try:
        q_text, n_text = label.strip().split(".")
        q, n = int(q_text), int(n_text)
    except (ValueError, AttributeError):
        raise DataError(f"malformed character label {label!r}") from None
    if q < 1 or not 1 <= n <= q or math.gcd(n, q) != 1:
        raise DataError(f"unknown character label {label!r}")
    return q, n


@dataclass(frozen=True)
class Character:
    """The Conrey character ``modulus.index``."""

    modulus: int
    index: int
    angles: tuple = field(repr=False, compare=False)

    @property
    def label(self) -> str:
        return f"{self.modulus}.{self.index}"

    def __str__(self) -> str:
        return self.label

    def angle(self, a: int) -> Fraction | None:
        """Angle of chi(a) in [0, 1), or None when gcd(a, q) > 1."""
        return self.angles[a % self.modulus]

    def __call__(self, a: int) -> complex:
        ang = self.angle(a)
        if ang is None:
            return 0j
        return _unit(ang)

    def values(self) -> np.ndarray:
        """chi(0), ..., chi(q-1) as a complex array."""
        return np.array([0j if a is None else _unit(a) for a in self.angles])

    @property
    def is_principal(self) -> bool:
        return self.index == 1

    @cached_property
    def order(self) -> int:
        return math.lcm(*(a.denominator for a in self.angles if a is not None))

    @property
    def is_real(self) -> bool:
        return self.order <= 2

    @property
    def parity(self) -> int:
        """0 for even characters, 1 for odd ones."""
        return 0 if self.angle(-1) == 0 else 1

    def conjugate(self) -> Character:
        if self.modulus == 1:
            return self
        return character_from_label(f"{self.modulus}.{pow(self.index, -1, self.modulus)}")

    @cached_property
    def conductor(self) -> int:
        q = self.modulus
        for d in sorted(d for d in range(1, q + 1) if q % d == 0):
            if all(self.angles[m] == 0 for m in range(1, q, d) if math.gcd(m, q) == 1):
                return d
        return q

    @property
    def is_primitive(self) -> bool:
        return self.conductor == self.modulus

    def primitive_inducer(self) -> Character:
        """The primitive character mod the conductor that induces this one."""
        d = self.conductor
        if d == self.modulus:
            return self
        target = []
        for a in range(d):
            if math.gcd(a, d) != 1:
                target.append(None)
                continue
            m = a if a > 0 else d
            while math.gcd(m, self.modulus) != 1:
                m += d
            target.append(self.angles[m % self.modulus])
        for chi in characters(d):
            if list(chi.angles) == target:
                return chi
        raise AssertionError("no inducing character found")  # pragma: no cover


def _unit(angle: Fraction) -> complex:
    # Exact values on the axes keep real characters real.
    if angle == 0:
        return 1 + 0j
    if angle == Fraction(1, 2):
        return -1 + 0j
    if angle == Fraction(1, 4):
        return 1j
    if angle == Fraction(3, 4):
        return -1j
    x = 2 * math.pi * float(angle)
    return complex(math.cos(x), math.sin(x))


@lru_cache(maxsize=None)
def _local_logs(q: int):
    """Per prime power of q: (denominator, log table indexed by residue mod q).

    2-power factors with e >= 3 contribute two components (sign and 5-adic part).
    """
    comps = []
    for p, e in factorize(q).items():
        mod = p**e
        if p == 2:
            if e == 1:
                continue
            logs = _two_power_logs(e)
            comps.append((2, [logs[m % mod][0] if math.gcd(m, q) == 1 else 0 for m in range(q)]))
            if e >= 3:
                comps.append((2 ** (e - 2), [logs[m % mod][1] if math.gcd(m, q) == 1 else 0 for m in range(q)]))
        else:
            logs = _odd_prime_power_logs(p, e)
            comps.append((euler_phi(mod), [logs[m % mod] if math.gcd(m, q) == 1 else 0 for m in range(q)]))
    return comps


@lru_cache(maxsize=None)
def _build(q: int, n: int) -> Character:
    comps = _local_logs(q)
    denom = math.lcm(1, *(d for d, _ in comps))
    num = [0] * q
    for d, table in comps:
        scale = denom // d
        k = table[n % q]
        if k:
            for m in range(q):
                num[m] += (k * table[m] % d) * scale
    angles = tuple(
        Fraction(num[m] % denom, denom) if math.gcd(m, q) == 1 else None for m in range(q)
    )
    if q == 1:
        angles = (Fraction(0),)
    return Character(q, n, angles)


def character_from_label(label: str) -> Character:
    q, n = parse_label(label)
    return _build(q, n)


def characters(q: int) -> list[Character]:
    """All phi(q) characters mod q ordered by Conrey index."""
    if q < 1:
        raise DataError(f"modulus must be positive, got {q}")
    return [_build(q, n) for n in coprime_residues(q)]


def square_root_count(q: int, a: int) -> int:
    """The race constant c(q, a) = -1 + #{b mod q : b^2 = a mod q}."""
    if math.gcd(a, q) != 1:
        raise DataError(f"{a} is not a reduced residue mod {q}")
    return -1 + sum(1 for b in range(q) if (b * b - a) % q == 0)


@dataclass(frozen=True)
class RaceSpec:
    """A race among distinct reduced residues mod q."""

    modulus: int
    residues: tuple[int, ...]

    def __post_init__(self):
        q, res = self.modulus, tuple(self.residues)
        object.__setattr__(self, "residues", res)
        if q < 3:
            raise DataError("a race needs modulus q >= 3")
        if len(set(r % q for r in res)) != len(res):
            raise DataError(f"residues must be distinct mod {q}: {res}")
        if any(math.gcd(r, q) != 1 for r in res):
            raise DataError(f"residues must be coprime to {q}: {res}")
        if not 2 <= len(res) <= euler_phi(q):
            raise DataError(f"race size must lie in [2, phi(q)], got {len(res)}")

    @property
    def size(self) -> int:
        return len(self.residues)


def race_constants(spec: RaceSpec) -> np.ndarray:
    return np.array([square_root_count(spec.modulus, a) for a in spec.residues], dtype=float)


@dataclass(frozen=True)
class RaceVectors:
    """Per-character coefficient vectors for a race.

    ``vectors[label]`` holds (chi(a_1), ..., chi(a_r)); ``shift`` is the
    deterministic part of the limiting distribution.
    """

    spec: RaceSpec
    nonprincipal: tuple[Character, ...]
    vectors: dict
    constants: np.ndarray
    shift: np.ndarray

    def real_part(self, label: str) -> np.ndarray:
        return self.vectors[label].real

    def imag_part(self, label: str) -> np.ndarray:
        return self.vectors[label].imag

    def vector(self, label: str) -> np.ndarray:
        return self.vectors[label]


def race_vectors(spec: RaceSpec, central_order: dict | None = None) -> RaceVectors:
    """Build the vectors v_chi and the shift ``-c - 2 sum ord(chi) conj(v_chi)``.

    ``central_order`` maps character labels to the order of vanishing at s = 1/2
    (default: zero for every character).  It must be conjugation-symmetric.
    """
    central_order = dict(central_order or {})
    chars = [chi for chi in characters(spec.modulus) if not chi.is_principal]
    known = {chi.label for chi in chars}
    for lab, k in central_order.items():
        if lab not in known:
            raise DataError(f"{lab} is not a non-principal character mod {spec.modulus}")
        if k < 0 or int(k) != k:
            raise DataError(f"order of vanishing must be a non-negative integer, got {k}")
    vectors = {}
    total = np.zeros(spec.size, dtype=complex)
    for chi in chars:
        v = np.array([chi(a) for a in spec.residues])
        vectors[chi.label] = v
        k = central_order.get(chi.label, 0)
        if k != central_order.get(chi.conjugate().label, 0):
            raise DataError(f"order of vanishing differs between {chi.label} and its conjugate")
        total += k * np.conj(v)
    c = race_constants(spec)
    shift = -c - 2.0 * total.real
    return RaceVectors(spec, tuple(chars), vectors, c, shift)
