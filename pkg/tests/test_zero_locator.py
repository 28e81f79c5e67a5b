import csv
import io
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ceor.errors import AccuracyError, DomainError, NoSignChange
from ceor.zero_locator import (
    RegionCount,
    ZeroRecord,
    count_zeros_online,
    count_zeros_region,
    find_zeros_online,
    hardy_z,
    hardy_z_array,
    refine_zero,
    riemann_siegel_theta,
    smooth_count,
    theta_array,
    zeros_to_csv,
)

mpmath.mp.dps = 30

# ordinates of the first ten zeros, from mpmath.zetazero(1..10)
ORACLE_ZEROS = [float(mpmath.zetazero(k).imag) for k in range(1, 11)]


def test_oracle_zero_list_is_sane():
    assert ORACLE_ZEROS[0] == pytest.approx(14.134725, abs=1e-6)
    assert len(ORACLE_ZEROS) == 10 and ORACLE_ZEROS[-1] < 50.0


# -- theta -------------------------------------------------------------------


def test_theta_at_zero():
    assert riemann_siegel_theta(0.0) == 0.0


def test_theta_against_mpmath():
    for t in [0.5, 3.0, 6.3, 10.0, 17.8, 50.0, 100.0, 250.0, 499.0]:
        assert abs(riemann_siegel_theta(t) - float(mpmath.siegeltheta(t))) < 1e-10


def test_theta_first_nonzero_root():
    # bisection with mpmath's log-gamma as the independent oracle
    def f(t):
        return float(mpmath.im(mpmath.loggamma(0.25 + 0.5j * t)) - t / 2 * mpmath.log(mpmath.pi))

    lo, hi = 17.0, 18.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    assert abs(lo - 17.8456) < 1e-4
    assert abs(riemann_siegel_theta(lo)) < 1e-10
    assert riemann_siegel_theta(17.8) < 0 < riemann_siegel_theta(17.9)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 500.0, allow_nan=False))
def test_theta_is_odd(t):
    assert riemann_siegel_theta(-t) == -riemann_siegel_theta(t)


def test_theta_continuous_on_fine_grid():
    t = np.linspace(0.0, 500.0, 200001)
    th = theta_array(t)
    # the derivative is about ln(t / 2 pi) / 2, so a jump of 2 pi would stand out
    assert np.max(np.abs(np.diff(th))) < 0.01


# -- Hardy Z -----------------------------------------------------------------


def test_hardy_z_at_origin():
    assert abs(hardy_z(0.0) - float(mpmath.zeta(0.5))) < 1e-10


def test_hardy_z_against_mpmath():
    for t in [1.0, 7.5, 14.0, 30.3, 77.7, 150.0, 333.3, 499.5]:
        assert abs(hardy_z(t) - float(mpmath.siegelz(t))) < 1e-9


def test_hardy_z_vanishes_at_first_zero():
    assert abs(hardy_z(ORACLE_ZEROS[0])) < 1e-9
    assert abs(hardy_z(14.134725)) < 1e-5


@settings(max_examples=100, deadline=None)
@given(st.floats(0.0, 200.0, allow_nan=False))
def test_hardy_z_is_even(t):
    assert hardy_z(-t) == hardy_z(t)


def test_z_realness_on_grid():
    t = np.arange(0.0, 200.0 + 1e-9, 0.1)
    s = 0.5 + 1j * t
    from ceor.zeta_eval import zeta_array

    imag = np.abs((np.exp(1j * theta_array(t)) * zeta_array(s)).imag)
    assert np.max(imag) < 1e-8
    hardy_z_array(t)  # does not raise


def test_hardy_z_domain():
    with pytest.raises(DomainError):
        hardy_z(501.0)
    with pytest.raises(DomainError):
        hardy_z(float("nan"))


def test_accuracy_error_on_complex_residue(monkeypatch):
    import ceor.zero_locator as zl

    real_zeta = zl.zeta_array
    monkeypatch.setattr(zl, "zeta_array", lambda s, cfg: real_zeta(s, cfg) * np.exp(1e-3j))
    with pytest.raises(AccuracyError):
        hardy_z(20.0)
    # bisection opts out of the check
    assert zl.hardy_z_array(np.array([20.0]), check=False).shape == (1,)


# -- refinement and scanning -------------------------------------------------


@pytest.mark.parametrize("guess, idx", [(14.1, 0), (21.0, 1), (25.0, 2)])
def test_refine_zero_examples(guess, idx):
    rec = refine_zero(guess, 0.2)
    assert abs(rec.t - ORACLE_ZEROS[idx]) < 1e-8
    assert rec.bracket_width < 1e-9
    assert rec.residual < 1e-8


def test_refine_zero_without_sign_change():
    with pytest.raises(NoSignChange):
        refine_zero(10.0, 0.2)


def test_refine_zero_rejects_bad_radius():
    with pytest.raises(DomainError):
        refine_zero(14.0, 0.0)


def _fine_scan(t_lo, t_hi, step=0.01):
    # independent census: dense grid evaluated by mpmath's own Z
    n = int(round((t_hi - t_lo) / step))
    grid = [t_lo + k * step for k in range(n + 1)]
    z = [float(mpmath.siegelz(t)) for t in grid]
    return sum(1 for a, b in zip(z, z[1:]) if a * b < 0)


@pytest.mark.parametrize("t_hi, expected", [(14.0, 0), (20.0, 1), (30.0, 3)])
def test_count_zeros_small_intervals(t_hi, expected):
    assert count_zeros_online(0.0, t_hi) == expected
    assert _fine_scan(0.0, t_hi) == expected


def test_count_zeros_to_one_hundred():
    assert count_zeros_online(0.0, 100.0) == 29 == int(mpmath.nzeros(100))


def test_found_zeros_match_oracle():
    found = find_zeros_online(0.0, 50.0)
    assert len(found) == 10
    for rec, ref in zip(found, ORACLE_ZEROS):
        assert abs(rec.t - ref) < 1e-8
        assert rec.bracket_width < 1e-9
        assert abs(hardy_z(rec.t)) < 1e-8
    assert [r.t for r in found] == sorted(r.t for r in found)


def test_scan_interval_is_half_open():
    z1 = ORACLE_ZEROS[0]
    assert count_zeros_online(z1 + 1e-6, 20.0) == 0
    assert count_zeros_online(10.0, z1 + 1e-6) == 1


def test_count_additivity_seeded():
    zeros = [r.t for r in find_zeros_online(0.0, 100.0)]
    rng = np.random.default_rng(31)
    checked = 0
    while checked < 40:
        a, b, c = np.sort(rng.uniform(0.0, 100.0, 3))
        if min(abs(b - z) for z in zeros) < 0.01:
            continue
        assert count_zeros_online(a, c) == count_zeros_online(a, b) + count_zeros_online(b, c)
        checked += 1


def test_scan_domain_errors():
    with pytest.raises(DomainError):
        count_zeros_online(-1.0, 10.0)
    with pytest.raises(DomainError):
        count_zeros_online(10.0, 5.0)
    with pytest.raises(DomainError):
        count_zeros_online(0.0, 501.0)


# -- smooth count and region consistency -------------------------------------


def test_smooth_count_at_one_hundred():
    x = riemann_siegel_theta(100.0) / math.pi + 1
    assert 28.1 <= x <= 29.1
    assert smooth_count(100.0) == round(x)


@pytest.mark.parametrize(
    "lo, hi, online",
    [(0.0, 100.0, 29), (0.0, 20.0, 1), (0.0, 30.0, 3), (20.0, 50.0, 9)],
)
def test_count_zeros_region_examples(lo, hi, online):
    rc = count_zeros_region(lo, hi)
    assert rc.n_online == online
    assert rc.consistent
    assert abs(rc.n_online - rc.n_formula) <= 1


def test_count_zeros_region_empty():
    assert count_zeros_region(7.0, 7.0) == RegionCount(7.0, 7.0, 0, 0, True)


def test_lower_term_convention_at_zero():
    rc = count_zeros_region(0.0, 5.0)
    assert rc.n_formula == smooth_count(5.0) == 0


def test_n_formula_monotone_on_grid():
    # theta decreases below about 6.29, so monotonicity is checked where it increases
    counts = [count_zeros_region(0.0, hi).n_formula for hi in np.arange(7.0, 120.0, 1.5)]
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_n_formula_is_clamped():
    # smooth count dips on (0, 6.29); a region up there never reports a negative count
    assert count_zeros_region(2.0, 6.0).n_formula == 0


# -- serialization -----------------------------------------------------------


def test_zeros_csv_roundtrip():
    recs = find_zeros_online(0.0, 30.0)
    rows = list(csv.DictReader(io.StringIO(zeros_to_csv(recs))))
    assert list(rows[0]) == ["t", "residual", "bracket_width"]
    back = [ZeroRecord(float(r["t"]), float(r["residual"]), float(r["bracket_width"])) for r in rows]
    assert back == recs
