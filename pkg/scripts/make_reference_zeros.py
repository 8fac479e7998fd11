"""Regenerate the bundled reference zero tables with mpmath.

This is deliberately independent of ``primerace.zeros``: the tables it writes
are what the in-repo zero finder is checked against.

    python3 scripts/make_reference_zeros.py --zeta 100 --chi4 1140
"""
import argparse
from pathlib import Path

import mpmath

DATA = Path(__file__).resolve().parents[1] / "src" / "primerace" / "data"


def zeta_table(count, dps=55):
    mpmath.mp.dps = dps
    lines = ["# zeros of zeta(s), mpmath.zetazero, %d digits" % (dps - 5)]
    for n in range(1, count + 1):
        g = mpmath.zetazero(n).imag
        lines.append("1.1 %s 1e-45" % mpmath.nstr(g, dps - 5, strip_zeros=False))
    return lines


def chi4_z(t):
    # L(s, chi_{-4}) is odd with root number 1, so e^{i theta} L is real on the line.
    s = mpmath.mpf(0.5) + 1j * t
    theta = t / 2 * mpmath.log(4 / mpmath.pi) + mpmath.im(mpmath.loggamma((s + 1) / 2))
    return mpmath.re(mpmath.exp(1j * theta) * mpmath.dirichlet(s, [0, 1, 0, -1]))


def chi4_table(height, dps=25):
    # Locations come from the package's fast scan; every root is then re-solved
    # and sign-checked with mpmath, and the count is checked against N(T).
    from primerace.characters import character_from_label
    from primerace.zeros import _find_zeros, smooth_zero_count

    chi = character_from_label("4.3")
    approx = _find_zeros(chi, height, 0.02)
    expected = smooth_zero_count(chi, height)
    if abs(len(approx) - expected) > 2:
        raise SystemExit(f"count {len(approx)} disagrees with N(T) = {expected:.2f}")
    mpmath.mp.dps = dps
    out = []
    for g in approx:
        root = mpmath.findroot(chi4_z, mpmath.mpf(g), solver="secant", tol=1e-36)
        if abs(root - g) > 1e-6 or chi4_z(root - 1e-9) * chi4_z(root + 1e-9) >= 0:
            raise SystemExit(f"refinement of {g} failed")
        out.append(root)
    lines = ["# zeros of L(s, chi_4) up to %g, refined with mpmath.dirichlet" % height]
    lines += ["4.3 %s 1e-15" % mpmath.nstr(g, 22, strip_zeros=False) for g in out]
    lines.append("# complete 4.3 %g" % height)
    return lines


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--zeta", type=int, default=100)
    ap.add_argument("--chi4", type=float, default=1140.0)
    args = ap.parse_args()
    DATA.mkdir(parents=True, exist_ok=True)
    if args.zeta:
        (DATA / "zeros_1.1.txt").write_text("\n".join(zeta_table(args.zeta)) + "\n")
    if args.chi4:
        (DATA / "zeros_4.3.txt").write_text("\n".join(chi4_table(args.chi4)) + "\n")


if __name__ == "__main__":
    main()
