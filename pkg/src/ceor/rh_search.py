"""Cross-entropy search of the critical strip for zeta zeros.

Every sampled ``s = sigma + it`` gets one of three scores:

* ``ONLINE_ZERO`` (1): ``s`` lies within ``eps_line`` of the critical line and
  Hardy Z changes sign within ``refine_radius`` of ``t``.  The bracket is
  bisected and the refined ordinate is attached to the sample.
* ``OFFLINE_ZERO`` (NEG_INF): ``|zeta(s)| <= eps_zero`` with ``s`` outside the
  band.  Any such sample ends the run and is reported as a counterexample.
* ``NEUTRAL`` (0): everything else.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .ce_engine import NEG_INF, CeParams, CeResult, RoundState, StopReason, run_ce
from .errors import ConfigError, DomainError, EmptyElite, OutOfStrip, ZeroTrials
from .zero_locator import T_MAX, ZeroRecord, hardy_z_array, refine_brackets
from .zeta_eval import DEFAULT_CONFIG, ZetaEvalConfig, zeta_array

__all__ = [
    "Score",
    "StripRegion",
    "Tolerances",
    "ScoredSample",
    "FrequencyTracker",
    "CeorReport",
    "score_sample",
    "score_samples",
    "sample_region",
    "resample_elites",
    "RhProblem",
    "run_ceor",
    "empirical_frequency",
    "distinct_zeros",
    "TRACE_COLUMNS",
]

TRACE_COLUMNS = ("round", "sigma", "t", "zeta_re", "zeta_im", "zeta_mag", "score")
ZERO_MERGE_TOL = 1e-7


class Score(Enum):
    ONLINE_ZERO = 1
    NEUTRAL = 0
    OFFLINE_ZERO = NEG_INF

    @property
    def label(self) -> str:
        return {1: "1", 0: "0"}.get(self.value, "-inf")


@dataclass(frozen=True)
class StripRegion:
    """``sigma`` in the open interval ``(sigma_lo, sigma_hi)``, ``t`` in ``[t_lo, t_hi]``."""

    t_lo: float
    t_hi: float
    sigma_lo: float = 0.0
    sigma_hi: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.sigma_lo < self.sigma_hi <= 1.0:
            raise ConfigError(f"need 0 <= sigma_lo < sigma_hi <= 1, got ({self.sigma_lo}, {self.sigma_hi})")
        if not self.t_lo < self.t_hi:
            raise ConfigError(f"need t_lo < t_hi, got ({self.t_lo}, {self.t_hi})")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Tolerances:
    eps_zero: float = 1e-6
    eps_line: float = 0.02
    refine_radius: float = 0.1

    def __post_init__(self) -> None:
        if not self.eps_zero >= 1e-12:
            raise ConfigError(f"eps_zero must be >= 1e-12, got {self.eps_zero!r}")
        if not 0.0 < self.eps_line < 0.5:
            raise ConfigError(f"eps_line must lie in (0, 0.5), got {self.eps_line!r}")
        if not self.refine_radius > 0.0:
            raise ConfigError(f"refine_radius must be positive, got {self.refine_radius!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ScoredSample:
    s: complex
    zeta_value: complex
    zeta_mag: float
    score: Score
    refined_t: Optional[float] = None
    residual: Optional[float] = None
    bracket_width: Optional[float] = None

    @property
    def point(self) -> complex:
        return self.s

    @property
    def value(self):
        return self.score.value

    def to_dict(self) -> dict:
        return {
            "sigma": self.s.real,
            "t": self.s.imag,
            "zeta_re": self.zeta_value.real,
            "zeta_im": self.zeta_value.imag,
            "zeta_mag": self.zeta_mag,
            "score": self.score.label,
        }


@dataclass(frozen=True)
class FrequencyTracker:
    """Trial count ``n`` and count ``mu`` of off-line zeros among them."""

    n: int = 0
    mu: int = 0
    epsilon: float = 1e-3

    def __post_init__(self) -> None:
        if not 0 <= self.mu <= self.n:
            raise ConfigError(f"need 0 <= mu <= n, got mu={self.mu}, n={self.n}")
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")

    def record(self, trials: int, occurrences: int) -> "FrequencyTracker":
        return FrequencyTracker(self.n + trials, self.mu + occurrences, self.epsilon)


def empirical_frequency(tracker: FrequencyTracker, p_hat: float = 0.0) -> dict:
    """``mu/n`` and whether it lies strictly within ``epsilon`` of ``p_hat``."""
    if tracker.n < 1:
        raise ZeroTrials("no trials recorded")
    freq = tracker.mu / tracker.n
    return {"freq": freq, "within_epsilon_of": p_hat, "within": abs(freq - p_hat) < tracker.epsilon}


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------


def score_samples(
    points: Sequence[complex],
    tol: Tolerances = Tolerances(),
    region: Optional[StripRegion] = None,
    cfg: ZetaEvalConfig = DEFAULT_CONFIG,
) -> list[ScoredSample]:
    """Batch form of :func:`score_sample`.

    When ``region`` is given, a refined zero only counts if its ordinate lies
    in ``[region.t_lo, region.t_hi]``.
    """
    s = np.asarray(points, dtype=complex)
    if s.size == 0:
        return []
    if np.any((s.real <= 0.0) | (s.real >= 1.0)):
        raise OutOfStrip("samples must satisfy 0 < Re(s) < 1")
    if np.any(np.abs(s.imag) + tol.refine_radius > T_MAX):
        raise OutOfStrip(f"samples must satisfy |Im(s)| + refine_radius <= {T_MAX:g}")

    zv = zeta_array(s, cfg)
    mag = np.abs(zv)
    band = np.abs(s.real - 0.5) <= tol.eps_line
    offline = ~band & (mag <= tol.eps_zero)

    refined: dict[float, ZeroRecord] = {}
    if np.any(band):
        ts = np.unique(s.imag[band])
        r = tol.refine_radius
        ends = hardy_z_array(np.concatenate([ts - r, ts + r]), cfg)
        z_lo, z_hi = ends[: ts.size], ends[ts.size :]
        straddle = (z_lo < 0.0) != (z_hi < 0.0)
        straddle &= (z_lo != 0.0) & (z_hi != 0.0)
        if np.any(straddle):
            recs = refine_brackets(ts[straddle] - r, ts[straddle] + r, z_lo[straddle], cfg)
            for t, rec in zip(ts[straddle], recs):
                if region is None or region.t_lo <= rec.t <= region.t_hi:
                    refined[float(t)] = rec

    out = []
    for k in range(s.size):
        sk = complex(s[k])
        rec = refined.get(sk.imag) if band[k] else None
        if rec is not None:
            out.append(
                ScoredSample(sk, complex(zv[k]), float(mag[k]), Score.ONLINE_ZERO, rec.t, rec.residual, rec.bracket_width)
            )
        elif offline[k]:
            out.append(ScoredSample(sk, complex(zv[k]), float(mag[k]), Score.OFFLINE_ZERO))
        else:
            out.append(ScoredSample(sk, complex(zv[k]), float(mag[k]), Score.NEUTRAL))
    return out


def score_sample(
    s: complex,
    tol: Tolerances = Tolerances(),
    region: Optional[StripRegion] = None,
    cfg: ZetaEvalConfig = DEFAULT_CONFIG,
) -> ScoredSample:
    """Score a single point of the open critical strip."""
    s = complex(s)
    if not 0.0 < s.real < 1.0:
        raise OutOfStrip(f"0 < Re(s) < 1 required, got {s!r}")
    return score_samples([s], tol, region, cfg)[0]


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _open_bounds(region: StripRegion) -> tuple[float, float]:
    return np.nextafter(region.sigma_lo, np.inf), np.nextafter(region.sigma_hi, -np.inf)


def sample_region(region: StripRegion, n: int, rng: np.random.Generator) -> list[complex]:
    """``n`` points with sigma uniform on the open sigma interval and t uniform on ``[t_lo, t_hi]``."""
    if n < 0:
        raise ConfigError("n must be nonnegative")
    if n == 0:
        return []
    sigma = rng.uniform(region.sigma_lo, region.sigma_hi, size=n)
    t = rng.uniform(region.t_lo, region.t_hi, size=n)
    # uniform() is half-open at the low end; the strip is open on both sides
    sigma = np.clip(sigma, *_open_bounds(region))
    return [complex(a, b) for a, b in zip(sigma, t)]


def resample_elites(
    elites: Sequence[complex],
    q_n: Sequence[float],
    n_v: int,
    jitter: float,
    rng: np.random.Generator,
    region: Optional[StripRegion] = None,
) -> list[complex]:
    """Draw ``n_v`` elites with replacement by weight ``q_n``.

    A nonzero ``jitter`` shifts each copy uniformly inside a square of that
    half-width, clipped back into ``region``.
    """
    if n_v <= 0:
        return []
    if len(elites) == 0:
        raise EmptyElite("cannot resample from an empty elite set")
    if jitter < 0:
        raise ConfigError("jitter must be nonnegative")
    p = np.asarray(q_n, dtype=float)
    idx = rng.choice(len(elites), size=n_v, p=p / p.sum())
    pts = np.asarray(elites, dtype=complex)[idx]
    if jitter == 0.0:
        return [complex(z) for z in pts]
    sigma = pts.real + rng.uniform(-jitter, jitter, size=n_v)
    t = pts.imag + rng.uniform(-jitter, jitter, size=n_v)
    if region is not None:
        sigma = np.clip(sigma, *_open_bounds(region))
        t = np.clip(t, region.t_lo, region.t_hi)
    return [complex(a, b) for a, b in zip(sigma, t)]


class RhProblem:
    """Adapter exposing the strip search to :func:`ceor.ce_engine.run_ce`."""

    def __init__(
        self,
        region: StripRegion,
        tol: Tolerances = Tolerances(),
        jitter: float = 0.0,
        cfg: ZetaEvalConfig = DEFAULT_CONFIG,
        scorer: Optional[Callable[[list], Sequence[ScoredSample]]] = None,
    ):
        self.region = region
        self.tol = tol
        self.jitter = jitter
        self.cfg = cfg
        self._scorer = scorer

    def draw(self, n, rng):
        return sample_region(self.region, n, rng)

    def evaluate(self, points):
        if self._scorer is not None:
            return self._scorer(points)
        return score_samples(points, self.tol, self.region, self.cfg)

    def resample(self, points, weights, n, rng):
        return resample_elites(points, weights, n, self.jitter, rng, self.region)


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def distinct_zeros(records: Sequence[ZeroRecord], tol: float = ZERO_MERGE_TOL) -> list[ZeroRecord]:
    """Sort by ordinate and merge records closer than ``tol`` (first one wins)."""
    out: list[ZeroRecord] = []
    for rec in sorted(records, key=lambda r: r.t):
        if out and rec.t - out[-1].t < tol:
            continue
        out.append(rec)
    return out


@dataclass
class CeorReport:
    region: StripRegion
    params: CeParams
    tolerances: Tolerances
    jitter: float
    rounds: list[dict]
    zeros: list[ZeroRecord]
    counterexamples: list[ScoredSample]
    tracker: FrequencyTracker
    stop_reason: StopReason
    result: Optional[CeResult] = field(default=None, repr=False, compare=False)

    @property
    def zero_ordinates(self) -> list[float]:
        return [z.t for z in self.zeros]

    def to_dict(self) -> dict:
        return {
            "region": self.region.to_dict(),
            "params": self.params.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "jitter": self.jitter,
            "rounds": self.rounds,
            "zeros": [{"t": z.t, "residual": z.residual} for z in self.zeros],
            "counterexamples": [c.to_dict() for c in self.counterexamples],
            "tracker": {"n": self.tracker.n, "mu": self.tracker.mu},
            "stop_reason": self.stop_reason.value,
        }


def _trace_rows(state: RoundState):
    for smp in state.samples:
        yield [
            state.r,
            repr(smp.s.real),
            repr(smp.s.imag),
            repr(smp.zeta_value.real),
            repr(smp.zeta_value.imag),
            repr(smp.zeta_mag),
            smp.score.label,
        ]


def run_ceor(
    region: StripRegion,
    params: CeParams = CeParams(),
    tol: Tolerances = Tolerances(),
    *,
    jitter: float = 0.0,
    cfg: ZetaEvalConfig = DEFAULT_CONFIG,
    scorer: Optional[Callable[[list], Sequence[ScoredSample]]] = None,
    trace: Optional[io.TextIOBase] = None,
    keep_result: bool = False,
) -> CeorReport:
    """Run the cross-entropy search on one strip region.

    ``trace`` receives one CSV row per evaluated sample.  ``scorer`` replaces
    the zeta-based scorer, mainly for fault-injection tests.
    """
    if region.t_lo - tol.refine_radius < -T_MAX or region.t_hi + tol.refine_radius > T_MAX:
        raise DomainError(f"region must satisfy |t| + refine_radius <= {T_MAX:g}")

    problem = RhProblem(region, tol, jitter, cfg, scorer)
    found: list[ZeroRecord] = []
    counterexamples: list[ScoredSample] = []
    summaries: list[dict] = []
    tracker = FrequencyTracker()
    writer = None
    if trace is not None:
        writer = csv.writer(trace, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)

    def on_round(state: RoundState) -> None:
        nonlocal tracker
        off = 0
        for smp in state.samples:
            if smp.score is Score.ONLINE_ZERO:
                found.append(ZeroRecord(smp.refined_t, smp.residual, smp.bracket_width))
            elif smp.score is Score.OFFLINE_ZERO:
                counterexamples.append(smp)
                off += 1
        tracker = tracker.record(len(state.samples), off)
        summary = state.summary()
        online_elites = sum(1 for i in state.elites if state.samples[i].score is Score.ONLINE_ZERO)
        summary["online_elite_fraction"] = online_elites / len(state.elites) if state.elites else 0.0
        summaries.append(summary)
        if writer is not None:
            writer.writerows(_trace_rows(state))

    result = run_ce(problem, params, on_round=on_round)
    zeros = distinct_zeros(found)
    return CeorReport(
        region=region,
        params=params,
        tolerances=tol,
        jitter=jitter,
        rounds=summaries,
        zeros=zeros,
        counterexamples=counterexamples,
        tracker=tracker,
        stop_reason=result.stop_reason,
        result=result if keep_result else None,
    )
