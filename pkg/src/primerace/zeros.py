"""Zero ordinates of Dirichlet L-functions: ingestion, computation, counting.

Only positive ordinates are stored.  Zeros of L(s, chi) below the real axis are
the conjugates of zeros of L(s, conj chi), so a table holding every character
mod q carries the full information.

File format, one record per line (``#`` starts a comment)::

    <q.n> <ordinate as decimal> <abs_error>

A comment of the form ``# complete <label> <T>`` declares the height up to
which the list for ``label`` is known to be complete; without it the largest
ordinate is taken as the completion height.
"""

from __future__ import annotations

import hashlib
import math
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .characters import Character, character_from_label, characters, euler_phi, parse_label
from .errors import DataError, EnvelopeError, IncompleteTableError, MissedZeroError, ParseError
from .lfunctions import hardy_phase, hardy_z

__all__ = [
    "ZeroRecord",
    "ZeroTable",
    "ingest_zeros",
    "parse_zero_lines",
    "compute_zeros",
    "count_check",
    "CountCheck",
    "theta_gamma",
    "smooth_zero_count",
    "reference_table",
    "cache_root",
    "write_zero_file",
    "compute_table",
    "zero_table_for",
]

ALGORITHM_VERSION = "em-hurwitz-1"
MAX_COMPUTE_MODULUS = 20
MAX_COMPUTE_HEIGHT = 200.0
SCAN_STEP = 0.02
BISECT_TOL = 1e-10


@dataclass(frozen=True, order=True)
class ZeroRecord:
    ordinate: float
    text: str = field(compare=False)
    abs_error: float = field(compare=False)
    source: str = field(default="ingested", compare=False)

    def __post_init__(self):
        if not self.ordinate > 0:
            raise DataError(f"zero ordinate must be positive, got {self.text}")
        if not 0 <= self.abs_error < 1e-3:
            raise DataError(f"abs_error must lie in [0, 1e-3), got {self.abs_error}")
        if self.source not in ("ingested", "computed"):
            raise DataError(f"unknown zero source {self.source!r}")

    @classmethod
    def from_float(cls, gamma: float, abs_error: float, source: str = "computed") -> ZeroRecord:
        return cls(float(gamma), repr(float(gamma)), float(abs_error), source)

    @property
    def digits(self) -> int:
        """Significant decimal digits supported by the stated error."""
        if self.abs_error == 0:
            return len(self.text.replace(".", "").lstrip("0"))
        return max(0, int(math.floor(math.log10(self.ordinate / self.abs_error))))


class ZeroTable:
    """Immutable multiset of zero ordinates keyed by character label."""

    def __init__(self, records: dict | None = None, heights: dict | None = None):
        recs = {lab: tuple(sorted(r)) for lab, r in (records or {}).items()}
        for lab in recs:
            parse_label(lab)
        self._records = recs
        hts = {}
        for lab, rs in recs.items():
            hts[lab] = rs[-1].ordinate if rs else 0.0
        for lab, h in (heights or {}).items():
            parse_label(lab)
            hts[lab] = float(h)
            self._records.setdefault(lab, ())
        self._heights = hts

    @property
    def labels(self) -> list[str]:
        return sorted(self._records, key=lambda s: tuple(map(int, s.split("."))))

    def records(self, label: str, T: float | None = None) -> tuple[ZeroRecord, ...]:
        recs = self._records.get(label, ())
        if T is None:
            return recs
        return tuple(r for r in recs if r.ordinate <= T)

    def ordinates(self, label: str, T: float | None = None) -> np.ndarray:
        return np.array([r.ordinate for r in self.records(label, T)], dtype=float)

    def height(self, label: str) -> float:
        return self._heights.get(label, 0.0)

    @property
    def height_complete(self) -> float:
        return min(self._heights.values()) if self._heights else 0.0

    def require_complete(self, labels, T: float):
        for lab in labels:
            if lab not in self._records:
                raise IncompleteTableError(f"no zeros for character {lab} in table")
            if self.height(lab) < T:
                raise IncompleteTableError(
                    f"zeros for {lab} complete only to {self.height(lab):g} < T = {T:g}")

    def restrict(self, labels) -> ZeroTable:
        labels = list(labels)
        return ZeroTable({lab: self._records.get(lab, ()) for lab in labels},
                         {lab: self.height(lab) for lab in labels})

    def merged(self, other: ZeroTable) -> ZeroTable:
        recs = dict(self._records)
        hts = dict(self._heights)
        for lab in other.labels:
            recs[lab] = other.records(lab)
            hts[lab] = other.height(lab)
        return ZeroTable(recs, hts)

    def multiplicity(self, label: str, gamma: float, tol: float = 0.0) -> int:
        return sum(1 for r in self.records(label) if abs(r.ordinate - gamma) <= tol)

    def __len__(self) -> int:
        return sum(len(r) for r in self._records.values())

    def __repr__(self) -> str:
        inner = ", ".join(f"{lab}: {len(self._records[lab])}" for lab in self.labels)
        return f"ZeroTable({inner})"


def parse_zero_lines(lines, source: str = "ingested") -> ZeroTable:
    grouped: dict[str, list[ZeroRecord]] = defaultdict(list)
    heights: dict[str, float] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if line.startswith("#"):
            words = line[1:].split()
            if len(words) == 3 and words[0] == "complete":
                try:
                    parse_label(words[1])
                    heights[words[1]] = float(words[2])
                except (DataError, ValueError) as exc:
                    raise ParseError(f"bad completeness directive: {exc}", number) from None
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected '<label> <ordinate> <abs_error>', got {raw.rstrip()!r}", number)
        label, text, err = parts
        try:
            parse_label(label)
        except DataError as exc:
            raise ParseError(str(exc), number) from None
        try:
            gamma = float(text)
            error = float(err)
        except ValueError:
            raise ParseError(f"non-numeric field in {raw.rstrip()!r}", number) from None
        try:
            grouped[label].append(ZeroRecord(gamma, text, error, source))
        except DataError as exc:
            raise ParseError(str(exc), number) from None
    return ZeroTable(dict(grouped), heights)


def ingest_zeros(path) -> ZeroTable:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"zero file not found: {path}")
    with path.open() as fh:
        return parse_zero_lines(fh)


def write_zero_file(table: ZeroTable, path, header: str | None = None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for lab in table.labels:
            fh.write(f"# complete {lab} {table.height(lab)!r}\n")
            for r in table.records(lab):
                fh.write(f"{lab} {r.text} {r.abs_error:.1e}\n")


def reference_table(label: str) -> ZeroTable:
    """Bundled high-precision reference zeros (labels 1.1 and 4.3)."""
    name = f"zeros_{label}.txt"
    ref = resources.files("primerace") / "data" / name
    if not ref.is_file():
        raise DataError(f"no bundled reference zeros for {label}")
    with ref.open() as fh:
        return parse_zero_lines(fh)


def theta_gamma(gamma):
    """arg(1/2 + i gamma)."""
    return np.arctan2(gamma, 0.5)


# --------------------------------------------------------------------------
# direct computation


def cache_root() -> Path:
    env = os.environ.get("PRIMERACE_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "primerace"


def smooth_zero_count(chi: Character, T: float) -> float:
    """Main term of N(T, chi): zeros with 0 < gamma <= T, from the gamma-factor phase.

    Accurate to the argument-of-L term, which is O(log qT) and small in practice.
    """
    prim = chi.primitive_inducer()
    if prim.modulus == 1:
        return float(hardy_phase(prim, T)) / math.pi + 1.0
    return float(hardy_phase(prim, T) - hardy_phase(prim, 0.0)) / math.pi


def _scan(chi: Character, lo: float, hi: float, step: float):
    n = max(2, int(math.ceil((hi - lo) / step)) + 1)
    grid = np.linspace(lo, hi, n)
    values = np.empty_like(grid)
    chunk = 512
    for i in range(0, n, chunk):
        values[i:i + chunk] = hardy_z(chi, grid[i:i + chunk])
    return grid, values


def _scalar(chi):
    return lambda t: float(hardy_z(chi, np.array([t]))[0])


def _sign_change_roots(chi, grid, values):
    f = _scalar(chi)
    roots = []
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if a == 0.0:
            roots.append(grid[i])
        elif a * b < 0 and f(grid[i]) * f(grid[i + 1]) < 0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=BISECT_TOL, rtol=1e-15))
    if values[-1] == 0.0:
        roots.append(grid[-1])
    return roots


def _near_miss_roots(chi, grid, values):
    """Zero pairs closer than the scan step show up as a dip of |Z| towards the axis."""
    f = _scalar(chi)
    found = []
    mag = np.abs(values)
    for i in range(1, len(grid) - 1):
        if not (values[i - 1] * values[i] > 0 and values[i] * values[i + 1] > 0):
            continue
        if not (mag[i] <= mag[i - 1] and mag[i] <= mag[i + 1]):
            continue
        sign = math.copysign(1.0, values[i])
        res = minimize_scalar(lambda t: sign * f(t), bounds=(grid[i - 1], grid[i + 1]),
                              method="bounded", options={"xatol": 1e-12})
        if sign * res.fun < 0:
            tm = res.x
            for a, b in ((grid[i - 1], tm), (tm, grid[i + 1])):
                if f(a) * f(b) < 0:
                    found.append(brentq(f, a, b, xtol=BISECT_TOL, rtol=1e-15))
    return found


def _find_zeros(chi: Character, T: float, step: float) -> list[float]:
    prim = chi.primitive_inducer()
    lo = 1e-3
    if T <= lo:
        return []
    pieces = np.linspace(lo, T, max(2, int(T // 25) + 2))
    intervals = list(zip(pieces[:-1], pieces[1:]))

    def work(iv):
        grid, vals = _scan(prim, iv[0], iv[1], step)
        return _sign_change_roots(prim, grid, vals) + _near_miss_roots(prim, grid, vals)

    with ThreadPoolExecutor(max_workers=min(4, os.cpu_count() or 1)) as pool:
        found = [r for part in pool.map(work, intervals) for r in part]
    found = sorted(found)
    # a root on a shared interval endpoint can be reported twice
    dedup = []
    for r in found:
        if not dedup or abs(r - dedup[-1]) > 1e-9:
            dedup.append(r)
    return [r for r in dedup if 0 < r <= T]


def compute_zeros(chi: Character, T: float, *, use_cache: bool = True,
                  cache_dir=None, check: bool = True) -> list[ZeroRecord]:
    """Ordinates of zeros of L(1/2 + it, chi) with 0 < t <= T.

    Imprimitive characters use the zeros of their primitive inducer (extra Euler
    factors vanish only on Re s = 0); principal characters give the zeta zeros.
    """
    if chi.modulus > MAX_COMPUTE_MODULUS or T > MAX_COMPUTE_HEIGHT:
        raise EnvelopeError(
            f"zero computation supports q <= {MAX_COMPUTE_MODULUS}, T <= {MAX_COMPUTE_HEIGHT:g}")
    if T <= 0:
        return []
    cache_file = None
    if use_cache:
        root = Path(cache_dir) if cache_dir is not None else cache_root()
        key = f"{chi.modulus}|{chi.label}|{T!r}|{ALGORITHM_VERSION}"
        digest = hashlib.sha1(key.encode()).hexdigest()[:12]
        cache_file = root / "zeros" / f"{chi.label}_T{T:g}_{digest}.txt"
        if cache_file.is_file():
            with cache_file.open() as fh:
                return list(parse_zero_lines(fh, source="computed").records(chi.label))
    roots = _find_zeros(chi, T, SCAN_STEP)
    records = [ZeroRecord.from_float(g, 1e-8, "computed") for g in roots]
    if check:
        expected = smooth_zero_count(chi, T)
        slack = 2 + math.log(max(T, 1.0))
        if abs(len(records) - expected) > slack:
            raise MissedZeroError(
                f"{chi.label}: found {len(records)} zeros up to {T:g}, counting formula "
                f"gives {expected:.2f} (slack {slack:.2f})")
    if cache_file is not None:
        write_zero_file(ZeroTable({chi.label: records}, {chi.label: T}), cache_file,
                        header=f"computed zeros, algorithm {ALGORITHM_VERSION}")
    return records


def compute_table(q: int, T: float, include_principal: bool = False, **kw) -> ZeroTable:
    chars = [c for c in characters(q) if include_principal or not c.is_principal or q == 1]
    recs = {c.label: compute_zeros(c, T, **kw) for c in chars}
    return ZeroTable(recs, {lab: T for lab in recs})


def zero_table_for(q: int, T: float, files=(), *, include_zeta: bool = False,
                   cache_dir=None, use_cache: bool = True) -> ZeroTable:
    """Zeros of every non-principal character mod q up to T (and of zeta if asked).

    Sources in order of preference: the given files, the bundled reference
    tables, then direct computation inside the supported envelope.
    """
    table = ZeroTable()
    for f in files:
        table = table.merged(ingest_zeros(f))
    labels = [c.label for c in characters(q) if not c.is_principal]
    if include_zeta or q == 1:
        labels.append("1.1")
    for lab in labels:
        if lab in table.labels and table.height(lab) >= T:
            continue
        try:
            ref = reference_table(lab)
            if ref.height(lab) >= T:
                table = table.merged(ref)
                continue
        except DataError:
            pass
        chi = character_from_label(lab)
        recs = compute_zeros(chi, T, cache_dir=cache_dir, use_cache=use_cache)
        table = table.merged(ZeroTable({lab: recs}, {lab: T}))
    return table


# --------------------------------------------------------------------------
# counting


@dataclass(frozen=True)
class CountCheck:
    modulus: int
    height: float
    observed: int
    predicted: float
    refined: float

    @property
    def deviation(self) -> float:
        return self.observed - self.predicted

    @property
    def refined_deviation(self) -> float:
        return self.observed - self.refined

    @property
    def slack(self) -> float:
        return 2 + math.log(max(self.height, 1.0))

    def as_dict(self) -> dict:
        return {"q": self.modulus, "T": self.height, "observed": self.observed,
                "predicted": self.predicted, "refined": self.refined}


def count_check(table: ZeroTable, T: float, q: int) -> CountCheck:
    """Compare the number of ordinates up to T with the counting asymptotic.

    ``observed`` counts ordinates of the non-principal characters mod q (of
    zeta when q = 1); ``predicted`` is phi(q) T log(qT) / 2pi, and ``refined``
    sums the gamma-factor main term over the same characters.
    """
    chars = [c for c in characters(q) if q == 1 or not c.is_principal]
    labels = [c.label for c in chars]
    table.require_complete(labels, T)
    observed = sum(len(table.records(lab, T)) for lab in labels)
    predicted = euler_phi(q) * T * math.log(q * T) / (2 * math.pi) if q * T > 1 else 0.0
    refined = sum(smooth_zero_count(c, T) for c in chars)
    return CountCheck(q, float(T), observed, predicted, refined)
