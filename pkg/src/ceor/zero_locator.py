"""Zeros of zeta on the critical line.

The Hardy function ``Z(t) = exp(i theta(t)) zeta(1/2 + it)`` is real for real
``t``, so critical-line zeros are its sign changes.  They are found by scanning
a fixed grid and refining each bracket by bisection.  The smooth count
``theta(T)/pi + 1`` supplies an independent estimate of how many zeros a
region holds.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import AccuracyError, DomainError, NoSignChange
from .zeta_eval import DEFAULT_CONFIG, LNPI, ZetaEvalConfig, log_gamma_array, zeta_array

__all__ = [
    "ZeroRecord",
    "RegionCount",
    "SCAN_STEP",
    "T_MAX",
    "riemann_siegel_theta",
    "theta_array",
    "hardy_z",
    "hardy_z_array",
    "find_zeros_online",
    "count_zeros_online",
    "count_zeros_region",
    "smooth_count",
    "refine_zero",
    "refine_brackets",
    "zeros_to_csv",
]

SCAN_STEP = 0.05
T_MAX = 500.0
BRACKET_WIDTH = 1e-9
REALNESS_TOL = 1e-8
REALNESS_HARD_TOL = 1e-6


@dataclass(frozen=True)
class ZeroRecord:
    t: float
    residual: float
    bracket_width: float


@dataclass(frozen=True)
class RegionCount:
    t_lo: float
    t_hi: float
    n_online: int
    n_formula: int
    consistent: bool


def theta_array(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    lg = log_gamma_array(0.25 + 0.5j * a)
    # evaluated on |t| so that oddness (and theta(0) = 0) is exact
    return np.sign(t) * (lg.imag - 0.5 * a * LNPI)


def riemann_siegel_theta(t: float) -> float:
    """Riemann-Siegel theta, continuous and odd in ``t``.

    ``log_gamma`` already returns the branch analytic in the upper and lower
    half-planes, so its imaginary part at ``1/4 + it/2`` is the unwrapped phase.
    """
    t = float(t)
    if not math.isfinite(t):
        raise DomainError(f"theta needs a finite t, got {t!r}")
    return float(theta_array(np.array([t]))[0])


def _z_complex(t: np.ndarray, cfg: ZetaEvalConfig) -> np.ndarray:
    rot = np.exp(1j * theta_array(t))
    return rot * zeta_array(0.5 + 1j * t, cfg)


def hardy_z_array(t, cfg: ZetaEvalConfig = DEFAULT_CONFIG, *, check: bool = True) -> np.ndarray:
    """Vectorized Hardy Z.  Raises AccuracyError if any discarded imaginary part exceeds 1e-6."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if t.size == 0:
        return np.empty(0)
    z = _z_complex(t, cfg)
    if check:
        worst = float(np.max(np.abs(z.imag)))
        if worst > REALNESS_HARD_TOL:
            raise AccuracyError(f"Hardy Z lost realness: |Im| = {worst:.3g}")
    return z.real


def hardy_z(t: float, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> float:
    t = float(t)
    if not math.isfinite(t) or abs(t) > T_MAX:
        raise DomainError(f"hardy_z is supported for |t| <= {T_MAX:g}, got {t!r}")
    return float(hardy_z_array(np.array([t]), cfg)[0])


def _check_interval(t_lo: float, t_hi: float) -> None:
    if not (0.0 <= t_lo <= t_hi <= T_MAX):
        raise DomainError(f"need 0 <= t_lo <= t_hi <= {T_MAX:g}, got ({t_lo}, {t_hi})")


def refine_brackets(lo, hi, z_lo, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> list[ZeroRecord]:
    """Bisect many sign-change brackets at once, each to width < 1e-9.

    ``z_lo`` holds ``Z(lo)``; every bracket must straddle a sign change.
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    z_lo = np.array(z_lo, dtype=float)
    if lo.size == 0:
        return []
    neg_lo = z_lo < 0.0
    while np.any(hi - lo >= BRACKET_WIDTH):
        active = hi - lo >= BRACKET_WIDTH
        mid = 0.5 * (lo + hi)
        zm = np.zeros_like(mid)
        zm[active] = hardy_z_array(mid[active], cfg, check=False)
        # keep the half whose endpoints still differ in sign
        go_right = active & ((zm < 0.0) == neg_lo) & (zm != 0.0)
        go_left = active & ~go_right
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_left, mid, hi)
        exact = active & (zm == 0.0)
        lo = np.where(exact, mid, lo)
        hi = np.where(exact, mid + 0.5 * BRACKET_WIDTH, hi)
    centre = 0.5 * (lo + hi)
    resid = np.abs(hardy_z_array(centre, cfg))
    return [ZeroRecord(float(c), float(r), float(w)) for c, r, w in zip(centre, resid, hi - lo)]


def refine_zero(t_guess: float, radius: float, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> ZeroRecord:
    """Bisect ``Z`` on ``[t_guess - radius, t_guess + radius]``.

    Raises NoSignChange when ``Z`` has the same sign at both ends.
    """
    if radius <= 0:
        raise DomainError("radius must be positive")
    lo, hi = t_guess - radius, t_guess + radius
    z = hardy_z_array(np.array([lo, hi]), cfg)
    if z[0] == 0.0:
        return ZeroRecord(lo, 0.0, BRACKET_WIDTH / 2)
    if z[1] == 0.0:
        return ZeroRecord(hi, 0.0, BRACKET_WIDTH / 2)
    if (z[0] < 0) == (z[1] < 0):
        raise NoSignChange(f"Z(t) keeps its sign on [{lo:g}, {hi:g}]")
    return refine_brackets([lo], [hi], [z[0]], cfg)[0]


def _scan_grid(t_lo: float, t_hi: float, step: float) -> np.ndarray:
    n = max(1, math.ceil((t_hi - t_lo) / step - 1e-9))
    return np.linspace(t_lo, t_hi, n + 1)


def find_zeros_online(
    t_lo: float,
    t_hi: float,
    step: float = SCAN_STEP,
    cfg: ZetaEvalConfig = DEFAULT_CONFIG,
) -> list[ZeroRecord]:
    """All sign changes of ``Z`` in ``(t_lo, t_hi]``, refined by bisection, ascending in t."""
    t_lo, t_hi = float(t_lo), float(t_hi)
    _check_interval(t_lo, t_hi)
    if t_hi == t_lo:
        return []
    grid = _scan_grid(t_lo, t_hi, step)
    z = hardy_z_array(grid, cfg)
    sign = np.sign(z)
    # grid points where Z is exactly zero take the sign of their left neighbour
    for i in range(1, sign.size):
        if sign[i] == 0:
            sign[i] = sign[i - 1]
    change = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    records = refine_brackets(grid[change], grid[change + 1], z[change], cfg)
    return [r for r in records if t_lo < r.t <= t_hi]


def count_zeros_online(t_lo: float, t_hi: float, step: float = SCAN_STEP) -> int:
    return len(find_zeros_online(t_lo, t_hi, step))


def smooth_count(t: float) -> int:
    """``round(theta(t)/pi + 1)``, the smooth part of the zero-counting function."""
    return math.floor(riemann_siegel_theta(t) / math.pi + 1.0 + 0.5)


def count_zeros_region(t_lo: float, t_hi: float) -> RegionCount:
    """Compare the scan count on ``(t_lo, t_hi]`` with the smooth theta count."""
    t_lo, t_hi = float(t_lo), float(t_hi)
    _check_interval(t_lo, t_hi)
    if t_hi == t_lo:
        return RegionCount(t_lo, t_hi, 0, 0, True)
    n_online = count_zeros_online(t_lo, t_hi)
    lower = 0 if t_lo == 0.0 else smooth_count(t_lo)
    n_formula = max(0, smooth_count(t_hi) - lower)
    return RegionCount(t_lo, t_hi, n_online, n_formula, abs(n_online - n_formula) <= 1)


def zeros_to_csv(records: Iterable[ZeroRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "residual", "bracket_width"])
    for r in records:
        writer.writerow([repr(r.t), repr(r.residual), repr(r.bracket_width)])
    return buf.getvalue()
