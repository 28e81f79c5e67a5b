"""Double-precision evaluation of the Riemann zeta function.

Inside the half-plane ``Re(s) > 0`` zeta is obtained from the Dirichlet eta
series accelerated with Borwein's Chebyshev-weighted alternating sum, divided
by ``1 - 2**(1 - s)``.  Close to the zeros of that divisor the Euler-Maclaurin
form of the zeta series is used instead.  For ``Re(s) <= 0`` the functional
equation maps the evaluation back into ``Re(s) >= 1`` and is assembled in log
space.

Every routine has a numpy-vectorized ``*_array`` core; the scalar functions are
thin wrappers that validate their argument and return a Python ``complex``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DomainError, PoleError

__all__ = [
    "ZetaEvalConfig",
    "DEFAULT_CONFIG",
    "log_gamma",
    "log_gamma_array",
    "log_sin_pi_array",
    "dirichlet_eta",
    "eta_array",
    "zeta",
    "zeta_array",
    "zeta_functional",
    "zeta_euler_maclaurin",
    "parse_complex",
    "format_complex",
]

LN2 = math.log(2.0)
LNPI = math.log(math.pi)
HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)

# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS_COEF = np.array(
    [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ]
)

# Distance below which the eta divisor 1 - 2**(1-s) is considered singular.
_ETA_SINGULAR_RADIUS = 1e-3
# Disc around s = 0 where the eta route is used even though Re(s) <= 0.
_ORIGIN_RADIUS = 0.05
# Upper bound on rows * terms for one block of the eta matrix.
_BLOCK_ELEMENTS = 1 << 21

_BERNOULLI_EVEN = [
    Fraction(1, 6),
    Fraction(-1, 30),
    Fraction(1, 42),
    Fraction(-1, 30),
    Fraction(5, 66),
    Fraction(-691, 2730),
    Fraction(7, 6),
    Fraction(-3617, 510),
    Fraction(43867, 798),
    Fraction(-174611, 330),
    Fraction(854513, 138),
    Fraction(-236364091, 2730),
]


@dataclass(frozen=True)
class ZetaEvalConfig:
    """Truncation and tolerance settings for the series evaluations.

    ``series_terms`` is the minimum number of terms in the accelerated eta sum;
    the count grows automatically with ``|Im(s)|`` so that the error bound stays
    below ``abs_tolerance``.
    """

    series_terms: int = 64
    abs_tolerance: float = 1e-12

    def __post_init__(self) -> None:
        if int(self.series_terms) != self.series_terms or self.series_terms < 8:
            raise ConfigError(f"series_terms must be an integer >= 8, got {self.series_terms!r}")
        if not (self.abs_tolerance >= 1e-14 and math.isfinite(self.abs_tolerance)):
            raise ConfigError(f"abs_tolerance must be >= 1e-14, got {self.abs_tolerance!r}")


DEFAULT_CONFIG = ZetaEvalConfig()


def _as_complex(value) -> complex:
    z = complex(value)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite argument {z!r}")
    return z


def _is_nonpositive_integer(z: complex) -> bool:
    return z.imag == 0.0 and z.real <= 0.0 and z.real == math.floor(z.real)


# ---------------------------------------------------------------------------
# log Gamma
# ---------------------------------------------------------------------------


def _lanczos_log_gamma(z: np.ndarray) -> np.ndarray:
    """log Gamma(z) for Re(z) >= 0.5 (principal logs stay on the analytic branch)."""
    zm1 = z - 1.0
    acc = np.full(z.shape, _LANCZOS_COEF[0], dtype=complex)
    for k in range(1, len(_LANCZOS_COEF)):
        acc = acc + _LANCZOS_COEF[k] / (zm1 + k)
    t = zm1 + _LANCZOS_G + 0.5
    return HALF_LN_2PI + (zm1 + 0.5) * np.log(t) - t + np.log(acc)


def log_sin_pi_array(z) -> np.ndarray:
    """Branch of log(sin(pi z)) analytic off the real axis and real on (0, 1).

    Written as ``-i pi z + i pi/2 - ln 2 + log(1 - exp(2 i pi z))`` in the
    upper half-plane (conjugated below), which never overflows for large
    ``|Im z|``.  On the real axis the upper-half-plane limit is returned.
    """
    z = np.asarray(z, dtype=complex)
    upper = np.where(z.imag >= 0.0, z, np.conj(z))
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.exp(2j * np.pi * upper)
        val = -1j * np.pi * upper + 0.5j * np.pi - LN2 + np.log1p(-w)
    return np.where(z.imag >= 0.0, val, np.conj(val))


def log_gamma_array(z) -> np.ndarray:
    """Vectorized log Gamma on the branch analytic in C minus (-inf, 0].

    Nonpositive integers yield ``nan``; the scalar wrapper raises instead.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_log_gamma(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[left] = LNPI - log_sin_pi_array(zl) - _lanczos_log_gamma(1.0 - zl)
        poles = (zl.imag == 0.0) & (zl.real == np.floor(zl.real))
        if np.any(poles):
            sub = out[left]
            sub[poles] = complex("nan+nanj")
            out[left] = sub
    return out


def log_gamma(z) -> complex:
    """Principal branch of ln Gamma(z) (Lanczos, reflected for Re(z) < 0.5).

    >>> abs(log_gamma(5) - math.log(24)) < 1e-13
    True
    """
    z = _as_complex(z)
    if _is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at {z.real:g}")
    return complex(log_gamma_array(np.array([z]))[0])


# ---------------------------------------------------------------------------
# Dirichlet eta
# ---------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _borwein_weights(n: int) -> np.ndarray:
    """Weights ``1 - d_k/d_n`` (k = 0..n-1) of Borwein's accelerated sum."""
    i = np.arange(n + 1, dtype=float)
    log_terms = np.array(
        [math.lgamma(n + k) + k * math.log(4.0) - math.lgamma(n - k + 1) - math.lgamma(2 * k + 1) for k in i]
    )
    terms = np.exp(log_terms - log_terms.max())
    partial = np.cumsum(terms)
    weights = 1.0 - partial[:-1] / partial[-1]
    signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    weights = signs * weights
    weights.setflags(write=False)
    return weights


def _eta_terms(s: np.ndarray, cfg: ZetaEvalConfig) -> int:
    t_max = float(np.max(np.abs(s.imag))) if s.size else 0.0
    sig_min = float(np.min(s.real)) if s.size else 1.0
    # error ~ 3 (1 + 2|t|) exp(pi |t| / 2) / (3 + sqrt 8)^n, padded for Re(s) < 1/2
    budget = 0.5 * math.pi * t_max + math.log(3.0 * (1.0 + 2.0 * t_max) / cfg.abs_tolerance)
    budget += max(0.0, 0.5 - sig_min) * math.log(1.0 + t_max) + 2.0
    n = math.ceil(budget / math.log(3.0 + math.sqrt(8.0)))
    return max(cfg.series_terms, n)


def eta_array(s, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Vectorized accelerated Dirichlet eta; no domain checks."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.empty(s.shape, dtype=complex)
    if s.size == 0:
        return out
    n = _eta_terms(s, cfg)
    weights = _borwein_weights(n)
    log_k = np.log(np.arange(1, n + 1, dtype=float))
    rows = max(1, _BLOCK_ELEMENTS // n)
    flat = s.ravel()
    res = out.ravel()
    for lo in range(0, flat.size, rows):
        block = flat[lo : lo + rows]
        res[lo : lo + rows] = np.exp(-np.outer(block, log_k)) @ weights
    return res.reshape(s.shape)


def dirichlet_eta(s, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> complex:
    """Alternating zeta series sum (-1)^(n+1) n^(-s), for Re(s) > 0."""
    s = _as_complex(s)
    if s.real <= 0.0:
        raise DomainError(f"dirichlet_eta requires Re(s) > 0, got {s!r}")
    return complex(eta_array(np.array([s]), cfg)[0])


# ---------------------------------------------------------------------------
# Euler-Maclaurin fallback
# ---------------------------------------------------------------------------


def zeta_euler_maclaurin(s, n_terms: int | None = None, order: int = 10) -> complex:
    """zeta(s) from the Euler-Maclaurin continuation of the Dirichlet series.

    Valid for every ``s != 1``; ``n_terms`` defaults to ``20 + ceil(|s|)``.
    """
    s = _as_complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    order = min(order, len(_BERNOULLI_EVEN))
    N = n_terms if n_terms is not None else 20 + math.ceil(abs(s))
    k = np.arange(1, N, dtype=float)
    head = complex(np.sum(np.exp(-s * np.log(k))))
    lnN = math.log(N)
    Ns = np.exp(-s * lnN)
    total = head + N * Ns / (s - 1.0) + 0.5 * Ns
    rising = s  # s (s+1) ... (s+2j-2)
    fact = 2.0  # (2j)!
    power = Ns / N  # N^(-s-2j+1)
    for j in range(1, order + 1):
        total += float(_BERNOULLI_EVEN[j - 1]) / fact * rising * power
        rising *= (s + 2 * j - 1) * (s + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
        power /= N * N
    return complex(total)


# ---------------------------------------------------------------------------
# zeta
# ---------------------------------------------------------------------------


def _near_eta_singularity(s: np.ndarray) -> np.ndarray:
    period = 2.0 * math.pi / LN2
    k = np.round(s.imag / period)
    centre = 1.0 + 1j * period * k
    return np.abs(s - centre) < _ETA_SINGULAR_RADIUS


def _functional_factor_log(s: np.ndarray) -> np.ndarray:
    """log of 2^s pi^(s-1) sin(pi s / 2) Gamma(1 - s)."""
    return s * LN2 + (s - 1.0) * LNPI + log_sin_pi_array(0.5 * s) + log_gamma_array(1.0 - s)


def zeta_array(s, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Vectorized zeta over any complex array; ``s = 1`` yields ``nan``."""
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    out = np.empty(s.shape, dtype=complex)
    flat = s.ravel()
    res = out.ravel()

    pole = flat == 1.0
    trivial = (flat.imag == 0.0) & (flat.real < 0.0) & (np.mod(flat.real, 2.0) == 0.0)
    singular = _near_eta_singularity(flat) & ~pole
    eta_route = ((flat.real > 0.0) | (np.abs(flat) < _ORIGIN_RADIUS)) & ~singular & ~pole
    functional = ~(pole | trivial | singular | eta_route)

    res[pole] = complex("nan+nanj")
    res[trivial] = 0.0
    for idx in np.flatnonzero(singular):
        res[idx] = zeta_euler_maclaurin(complex(flat[idx]))
    if np.any(eta_route):
        se = flat[eta_route]
        res[eta_route] = eta_array(se, cfg) / (1.0 - np.exp((1.0 - se) * LN2))
    if np.any(functional):
        sf = flat[functional]
        mirrored = zeta_array(1.0 - sf, cfg)
        res[functional] = np.exp(_functional_factor_log(sf)) * mirrored
    return res.reshape(s.shape)


def zeta(s, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> complex:
    """Riemann zeta at any ``s != 1``.

    Uses the accelerated eta series for ``Re(s) > 0`` and the functional
    equation for ``Re(s) <= 0``.
    """
    s = _as_complex(s)
    if s == 1:
        raise PoleError("zeta has a pole at s = 1")
    return complex(zeta_array(np.array([s]), cfg)[0])


def zeta_functional(s, cfg: ZetaEvalConfig = DEFAULT_CONFIG) -> complex:
    """Right-hand side of the functional equation, 2^s pi^(s-1) sin(pi s/2) Gamma(1-s) zeta(1-s).

    Requires ``Re(s) < 1`` so the mirrored zeta is evaluated on ``Re > 0``.
    """
    s = _as_complex(s)
    if s.real >= 1.0:
        raise DomainError(f"zeta_functional requires Re(s) < 1, got {s!r}")
    if s == 0:
        raise PoleError("functional equation is singular at s = 0 (zeta(1) pole)")
    if s.imag == 0.0 and s.real < 0.0 and s.real % 2.0 == 0.0:
        return 0j
    mirrored = zeta(1.0 - s, cfg)
    arr = np.array([s])
    return complex(np.exp(_functional_factor_log(arr))[0] * mirrored)


# ---------------------------------------------------------------------------
# text form "a+bi"
# ---------------------------------------------------------------------------

_COMPLEX_RE = re.compile(r"^[\s+\-0-9.eEij]+$")


def parse_complex(text: str) -> complex:
    """Parse the ``"a+bi"`` literal used on the command line and in configs."""
    cleaned = str(text).strip().replace(" ", "")
    if not cleaned or not _COMPLEX_RE.match(cleaned):
        raise ValueError(f"not a complex literal: {text!r}")
    cleaned = cleaned.replace("i", "j")
    try:
        return complex(cleaned)
    except ValueError:
        raise ValueError(f"not a complex literal: {text!r}") from None


def format_complex(z: complex, digits: int = 12) -> str:
    z = complex(z)
    sign = "-" if z.imag < 0 or (z.imag == 0 and math.copysign(1.0, z.imag) < 0) else "+"
    return f"{z.real:.{digits}g}{sign}{abs(z.imag):.{digits}g}i"
