import json
import math

import mpmath
import numpy as np
import pytest
from scipy.optimize import curve_fit
from hypothesis import given, settings, strategies as st

from primerace.characters import RaceSpec, euler_phi, race_vectors
from primerace.errors import DataError, EnvelopeError
from primerace.explicit_formula import (
    ZeroSum,
    ap_vs_total_error,
    error_vector,
    full_race,
    li,
    oscillatory_terms,
    pi_li_error,
    pi_li_terms,
    residue_sum_constant,
    truncated_error_grid,
    truncated_error_series,
    truncated_error_vector,
    truncation_gap,
    write_series_csv,
)
from primerace.sieve import primes_up_to, sieve
from primerace.zeros import ZeroTable, parse_zero_lines, theta_gamma


def trial_division_primes(n):
    return [p for p in range(2, n + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]


def test_small_counts():
    c = sieve(100, 4, use_cache=False)
    assert c.pi(100) == 25 and c.pi_ap(100, 1) == 11 and c.pi_ap(100, 3) == 13
    assert c.pi(1) == 0
    assert list(primes_up_to(2000)) == trial_division_primes(2000)


def test_known_pi_values(sieve_1e6):
    c = sieve_1e6[4]
    assert c.pi(10 ** 6) == 78498
    assert c.pi(10 ** 5) == 9592
    assert c.theta(10 ** 4) == pytest.approx(math.fsum(math.log(p) for p in trial_division_primes(10 ** 4)), rel=1e-14)


def test_psi_against_direct_sum():
    c = sieve(5000, 3, use_cache=False)
    ps = trial_division_primes(5000)
    psi = math.fsum(math.log(p) * int(math.log(5000) / math.log(p) + 1e-12) for p in ps)
    assert c.psi(5000) == pytest.approx(psi, rel=1e-13)


@given(st.integers(2, 10 ** 6), st.sampled_from([3, 4, 5, 8]))
@settings(max_examples=60, deadline=None)
def test_partition_identity_and_order(sieve_1e6, x, q):
    c = sieve_1e6[q]
    dividing = sum(1 for p in (2, 3, 5) if q % p == 0 and p <= x)
    assert sum(c.pi_ap(x, a) for a in range(q) if math.gcd(a, q) == 1) == c.pi(x) - dividing
    assert c.theta(x) <= c.psi(x) + 1e-9
    y = max(2, x // 2)
    assert c.pi(y) <= c.pi(x) and c.psi(y) <= c.psi(x)


def test_sieve_cache_resumes(tmp_path):
    from primerace.sieve import SEGMENT

    a = sieve(SEGMENT + 1000, 1, cache_dir=tmp_path)
    manifest = json.loads((tmp_path / "sieve" / "manifest.json").read_text())
    assert manifest["done"] == [0]
    b = sieve(SEGMENT + 5000, 1, cache_dir=tmp_path)
    assert b.pi(SEGMENT) == a.pi(SEGMENT) == len(primes_up_to(SEGMENT))


def test_sieve_envelope():
    with pytest.raises(EnvelopeError):
        sieve(10 ** 10, 1)
    with pytest.raises(DataError):
        sieve(100, 0)
    with pytest.raises(DataError):
        sieve(100, 4, use_cache=False).pi(101)


def test_error_vector_q4_x100(sieve_1e6):
    ev = error_vector(sieve_1e6[4], RaceSpec(4, (1, 3)), 100)
    assert np.allclose(ev.values, [math.log(100) / 10 * -3, math.log(100) / 10 * 1])
    assert ev.values[0] == pytest.approx(-1.38155, abs=1e-4)
    assert ev.values.sum() == pytest.approx(-0.92103, abs=1e-4)
    assert ev.values.sum() == pytest.approx(residue_sum_constant(4, 100), rel=1e-12)


def test_error_vector_zero_when_balanced():
    c = sieve(1000, 3, use_cache=False)
    hits = [x for x in range(2, 1000)
            if 2 * c.pi_ap(x, 1) == c.pi(x) and 2 * c.pi_ap(x, 2) == c.pi(x)]
    assert not hits  # 3 itself is in neither class, so equality can never hold mod 3
    # primes up to 7 mod 8 are 2, 3, 5, 7: one each in classes 3, 5, 7 and phi(8) = 4 = pi(7)
    c8 = sieve(100, 8, use_cache=False)
    assert np.all(error_vector(c8, RaceSpec(8, (3, 5, 7)), 7).values == 0)
    c12 = sieve(100, 12, use_cache=False)
    assert np.all(error_vector(c12, RaceSpec(12, (5, 7)), 7.5).values == 0)


@pytest.mark.parametrize("q", [3, 4, 5, 8])
def test_residue_sum_identity(sieve_1e6, q):
    rng = np.random.default_rng(q)
    spec = full_race(q)
    for x in rng.uniform(q + 1, 10 ** 6, 20):
        total = error_vector(sieve_1e6[q], spec, float(x)).values.sum()
        want = -euler_phi(q) * len({p for p in (2, 3, 5, 7) if q % p == 0}) * math.log(x) / math.sqrt(x)
        assert total == pytest.approx(want, rel=1e-9)


def test_weighted_variants_close(sieve_1e6):
    c = sieve_1e6[4]
    spec = RaceSpec(4, (1, 3))
    for x in np.geomspace(1e3, 1e6, 30):
        d = np.abs(error_vector(c, spec, x, "theta").values - error_vector(c, spec, x, "pi").values)
        assert d.max() * math.log(x) < 15


def test_li_values_against_mpmath():
    assert li(2.0) == 0.0
    for x in (3.0, 100.0, 1e6):
        assert li(x) == pytest.approx(float(mpmath.li(x) - mpmath.li(2)), rel=1e-13)
    with pytest.raises(DataError):
        li(1.5)


def test_pi_li_examples(sieve_1e6):
    c = sieve_1e6[4]
    assert pi_li_error(c, 2) == pytest.approx(math.log(2) / math.sqrt(2))
    assert pi_li_error(c, 10 ** 6) < 0


def test_ap_vs_total_modes(sieve_1e6):
    c = sieve_1e6[4]
    assert ap_vs_total_error(c, 4, 3, 100) == pytest.approx(math.log(100) / 10 * (13 - 12.5))
    assert ap_vs_total_error(c, 4, 1, 2, "li_over_phi") == pytest.approx(0.0)
    assert ap_vs_total_error(c, 4, 3, 7, "li_over_phi") == pytest.approx(
        math.log(7) / math.sqrt(7) * (2 - li(7.0) / 2))
    for x in (50.0, 999.0, 123456.0):
        diff = ap_vs_total_error(c, 4, 1, x) - ap_vs_total_error(c, 4, 1, x, "li_over_phi")
        assert diff == pytest.approx(-pi_li_error(c, x) / 2, abs=1e-12)
    with pytest.raises(DataError):
        ap_vs_total_error(c, 4, 2, 100)


def test_truncation_below_least_ordinate_is_shift(chi4_table):
    rv = race_vectors(RaceSpec(4, (1, 3)))
    zs = oscillatory_terms(rv, chi4_table, 5.0)
    assert len(zs) == 0
    assert np.allclose(zs.evaluate([0.0, 3.0, 10.0]), rv.shift)


def test_truncation_at_x_equal_one(chi4_table):
    rv = race_vectors(RaceSpec(4, (1, 3)))
    g = chi4_table.ordinates("4.3", 30)
    v = rv.vectors["4.3"]
    want = rv.shift - 2 * np.real(np.conj(v) * np.sum(np.exp(-1j * theta_gamma(g)) / np.sqrt(0.25 + g * g)))
    got = truncated_error_vector(rv, chi4_table, 1.0, 30).values
    assert np.allclose(got, want, atol=1e-14)


def test_single_zero_sinusoid_recovers_frequency(chi4_table):
    rv = race_vectors(RaceSpec(4, (1, 3)))
    gamma = chi4_table.ordinates("4.3", 10)[0]
    t = np.linspace(0, 40, 20001)
    y = truncated_error_series(rv, chi4_table, t, 10)[:, 0] - rv.shift[0]
    (a, b, f), _ = curve_fit(lambda s, a, b, f: a * np.cos(f * s) + b * np.sin(f * s), t, y,
                             p0=(y[0], 0.0, 6.0))
    assert abs(f - gamma) < 1e-6
    # period check: E_T(e^{t + 2pi/gamma}) = E_T(e^t)
    per = truncated_error_series(rv, chi4_table, t[:50] + 2 * np.pi / gamma, 10)
    assert np.allclose(per, truncated_error_series(rv, chi4_table, t[:50], 10), atol=1e-12)


def test_truncated_error_grid_matches_direct(chi4_table):
    rv = race_vectors(RaceSpec(4, (1, 3)))
    zs = oscillatory_terms(rv, chi4_table, 200)
    grid = truncated_error_grid(zs, 3.0, 1e-3, 5003, block=700)
    direct = zs.evaluate(3.0 + 1e-3 * np.arange(5003))
    assert np.max(np.abs(grid - direct)) < 1e-10
    proj = truncated_error_grid(zs, 3.0, 1e-3, 5003, projection=[1, -1])
    assert np.allclose(proj, direct @ [1, -1], atol=1e-10)


def test_truncation_improves_with_T(sieve_1e6, chi4_table):
    rv = race_vectors(RaceSpec(4, (1, 3)))
    xs = np.geomspace(1e3, 1e6, 200)
    rms = [truncation_gap(sieve_1e6[4], rv, chi4_table, xs, T)["rms_gap"] for T in (50, 100, 200, 400)]
    assert all(b <= a * 1.05 for a, b in zip(rms, rms[1:]))


def test_synthetic_single_zero_gap_is_finite():
    t = parse_zero_lines(["# complete 4.3 1000", "4.3 6.020948904697597 1e-12"])
    rv = race_vectors(RaceSpec(4, (1, 3)))
    c = sieve(10 ** 4, 4, use_cache=False)
    g = truncation_gap(c, rv, t, np.geomspace(100, 10 ** 4, 50), 1000)
    assert np.isfinite(g["sup_gap"]) and g["sup_gap"] > 0


def test_pi_li_zero_sum_tracks_error(sieve_1e6, zeta_table):
    c = sieve_1e6[4]
    zs = pi_li_terms(zeta_table, 200)
    xs = np.geomspace(1e4, 1e6, 50)
    approx = zs.evaluate(np.log(xs))[:, 0]
    exact = np.array([pi_li_error(c, x) for x in xs])
    # the fluctuations agree; the level differs by lower-order terms of size O(1/log x)
    assert np.corrcoef(approx, exact)[0, 1] > 0.8
    assert abs(np.mean(approx - exact)) < 8 / math.log(1e4)


def test_series_csv(tmp_path):
    p = tmp_path / "s.csv"
    write_series_csv(p, [0.0, 1.0], np.array([[1.0, 2.0], [3.0, 4.0]]))
    lines = p.read_text().splitlines()
    assert lines[0] == "t,E1,E2" and lines[2] == "1.0,3.0,4.0"
