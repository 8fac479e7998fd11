"""Segmented sieve with a resumable on-disk cache and per-residue prime counts.

Cache layout (under ``<cache root>/sieve``)::

    manifest.json        {"format": 1, "segment": S, "done": [k0, k1, ...]}
    seg_<k>.npy          uint32 primes in [k*S, (k+1)*S)

Segments are independent, so a larger limit only sieves the missing ones.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path

import numpy as np

from .characters import coprime_residues
from .errors import DataError, EnvelopeError

__all__ = ["PrimeCounts", "sieve", "primes_up_to", "MAX_LIMIT"]

MAX_LIMIT = 10**9
SEGMENT = 1 << 22
BLOCK = 1 << 14


def primes_up_to(n: int) -> np.ndarray:
    """Plain sieve of Eratosthenes (used for base primes and small limits)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(n + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(n) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.flatnonzero(flags).astype(np.int64)


def _sieve_segment(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    flags = np.ones(hi - lo, dtype=bool)
    if lo < 2:
        flags[: 2 - lo] = False
    for p in base:
        p = int(p)
        if p * p >= hi:
            break
        start = max(p * p, (lo + p - 1) // p * p)
        flags[start - lo::p] = False
    return (np.flatnonzero(flags) + lo).astype(np.uint32)


class _SegmentCache:
    def __init__(self, root: Path | None):
        self.root = None if root is None else Path(root) / "sieve"

    def _manifest(self) -> dict:
        if self.root is None:
            return {"format": 1, "segment": SEGMENT, "done": []}
        path = self.root / "manifest.json"
        if path.is_file():
            data = json.loads(path.read_text())
            if data.get("segment") == SEGMENT and data.get("format") == 1:
                return data
        return {"format": 1, "segment": SEGMENT, "done": []}

    def load(self, k: int):
        if self.root is None:
            return None
        if k not in self._manifest()["done"]:
            return None
        path = self.root / f"seg_{k:06d}.npy"
        return np.load(path) if path.is_file() else None

    def store(self, k: int, primes: np.ndarray):
        if self.root is None:
            return
        self.root.mkdir(parents=True, exist_ok=True)
        np.save(self.root / f"seg_{k:06d}.npy", primes)
        man = self._manifest()
        man["done"] = sorted(set(man["done"]) | {k})
        tmp = self.root / "manifest.json.tmp"
        tmp.write_text(json.dumps(man))
        os.replace(tmp, self.root / "manifest.json")


def _all_primes(limit: int, cache_dir) -> np.ndarray:
    cache = _SegmentCache(cache_dir)
    base = primes_up_to(math.isqrt(limit) + 1)
    parts = []
    for k in range(limit // SEGMENT + 1):
        lo, hi = k * SEGMENT, (k + 1) * SEGMENT
        seg = cache.load(k)
        if seg is None:
            if hi > limit + 1:
                # partial trailing segment: sieved but not cached
                seg = _sieve_segment(lo, limit + 1, base)
            else:
                seg = _sieve_segment(lo, hi, base)
                cache.store(k, seg)
        parts.append(seg)
    primes = np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint32)
    return primes[primes <= limit]


class PrimeCounts:
    """Exact pi, theta, psi and their residue-class versions mod q, for x <= limit."""

    def __init__(self, primes: np.ndarray, limit: int, modulus: int):
        self.limit = int(limit)
        self.modulus = int(modulus)
        self.primes = primes
        q = self.modulus
        self.residues = coprime_residues(q)
        res = (primes % q).astype(np.int64)
        logs = np.log(primes.astype(np.float64))
        nblocks = len(primes) // BLOCK + 1
        self._block_count = np.zeros((nblocks + 1, q), dtype=np.int64)
        self._block_theta = np.zeros((nblocks + 1, q), dtype=np.float64)
        for b in range(nblocks):
            sl = slice(b * BLOCK, (b + 1) * BLOCK)
            self._block_count[b + 1] = self._block_count[b] + np.bincount(res[sl], minlength=q)
            self._block_theta[b + 1] = self._block_theta[b] + np.bincount(
                res[sl], weights=logs[sl], minlength=q)
        # prime powers p^k, k >= 2, for psi
        pw, pl = [], []
        for p in primes[: np.searchsorted(primes, math.isqrt(self.limit), side="right")]:
            p = int(p)
            v = p * p
            while v <= self.limit:
                pw.append(v)
                pl.append(math.log(p))
                v *= p
        order = np.argsort(pw, kind="stable")
        self._powers = np.array(pw, dtype=np.int64)[order]
        self._power_logs = np.array(pl, dtype=np.float64)[order]
        self._power_res = self._powers % q
        self._power_cum = np.concatenate([[0.0], np.cumsum(self._power_logs)])

    # -- scalar helpers ----------------------------------------------------
    def _check(self, x):
        if x > self.limit:
            raise DataError(f"x = {x} exceeds sieved limit {self.limit}")

    def _prefix(self, x: float):
        """(count per residue, theta per residue) for primes <= x."""
        self._check(x)
        idx = int(np.searchsorted(self.primes, math.floor(x), side="right"))
        b = idx // BLOCK
        cnt = self._block_count[b].copy()
        th = self._block_theta[b].copy()
        tail = self.primes[b * BLOCK: idx]
        if len(tail):
            r = (tail % self.modulus).astype(np.int64)
            cnt += np.bincount(r, minlength=self.modulus)
            th += np.bincount(r, weights=np.log(tail.astype(np.float64)), minlength=self.modulus)
        return cnt, th

    def _power_prefix(self, x: float) -> np.ndarray:
        j = int(np.searchsorted(self._powers, math.floor(x), side="right"))
        return np.bincount(self._power_res[:j], weights=self._power_logs[:j],
                           minlength=self.modulus)

    def pi(self, x) -> int:
        return int(self._prefix(x)[0].sum())

    def theta(self, x) -> float:
        return float(math.fsum(self._prefix(x)[1]))

    def psi(self, x) -> float:
        return self.theta(x) + float(math.fsum(self._power_prefix(x)))

    def pi_ap(self, x, a: int) -> int:
        return int(self._prefix(x)[0][a % self.modulus])

    def theta_ap(self, x, a: int) -> float:
        return float(self._prefix(x)[1][a % self.modulus])

    def psi_ap(self, x, a: int) -> float:
        return self.theta_ap(x, a) + float(self._power_prefix(x)[a % self.modulus])

    def weighted(self, x, weighting: str):
        """(total, per-residue array) for the chosen weighting at x."""
        cnt, th = self._prefix(x)
        if weighting == "pi":
            return float(cnt.sum()), cnt.astype(float)
        if weighting == "theta":
            return float(math.fsum(th)), th
        if weighting == "psi":
            extra = self._power_prefix(x)
            tot = th + extra
            return float(math.fsum(tot)), tot
        raise DataError(f"unknown weighting {weighting!r}")

    def checkpoints(self, xs) -> dict:
        return {int(x): self.pi(x) for x in xs}


def sieve(limit: int, q: int = 1, cache_dir=None, use_cache: bool = True) -> PrimeCounts:
    if limit > MAX_LIMIT:
        raise EnvelopeError(f"sieve limit {limit} exceeds {MAX_LIMIT}")
    if limit < 0 or q < 1:
        raise DataError("sieve needs limit >= 0 and modulus >= 1")
    from .zeros import cache_root

    root = None
    if use_cache:
        root = Path(cache_dir) if cache_dir is not None else cache_root()
    primes = _all_primes(int(limit), root) if limit >= 2 else np.zeros(0, dtype=np.uint32)
    return PrimeCounts(primes, int(limit), q)

