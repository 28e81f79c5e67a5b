"""Discrete cross-entropy optimization over an abstract sample space.

A problem supplies three callables: fresh draws, batch evaluation and
resampling from weighted elites.  Each round draws ``M`` points, takes the
top ``rho``-quantile score as the benchmark, and carries an elite weight per
distinct point.  Those weights are smoothed across rounds and renormalized
over the current elite set, which then seeds ``N_v = v M rho`` of the next
round's draws.

Scores are extended reals: ordinary floats plus the :data:`NEG_INF` sentinel.
The sentinel compares below every float and makes any sum negative, so no
floating-point ``-inf`` arithmetic is involved.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Callable, Hashable, Optional, Protocol, Sequence

import numpy as np

from .errors import ConfigError, EmptyElite, EmptyInput, ZeroMass

__all__ = [
    "NEG_INF",
    "StopReason",
    "CeParams",
    "Scored",
    "RoundState",
    "CeResult",
    "CeProblem",
    "score_key",
    "score_sum",
    "format_score",
    "elite_quota",
    "quantile_benchmark",
    "elite_set",
    "update_probabilities",
    "smooth_probabilities",
    "normalize_probabilities",
    "elite_sample_count",
    "check_termination",
    "round_rng",
    "run_ce",
]

POOL_PRUNE = 1e-6


class _NegInf:
    """Singleton minus infinity for score lattices."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NEG_INF"

    def __reduce__(self):
        return (_NegInf, ())

    def __eq__(self, other) -> bool:
        return other is self

    def __hash__(self) -> int:
        return hash("ceor.NEG_INF")

    def __lt__(self, other) -> bool:
        return other is not self

    def __le__(self, other) -> bool:
        return True

    def __gt__(self, other) -> bool:
        return False

    def __ge__(self, other) -> bool:
        return other is self


NEG_INF = _NegInf()


def score_key(x) -> tuple[int, float]:
    """Total order on extended reals usable as a sort key."""
    if x is NEG_INF:
        return (0, 0.0)
    return (1, float(x))


def score_sum(scores: Sequence) -> Any:
    """Sum of extended reals; any NEG_INF makes the whole sum NEG_INF."""
    if any(x is NEG_INF for x in scores):
        return NEG_INF
    return math.fsum(float(x) for x in scores)


def _is_negative(total) -> bool:
    return total is NEG_INF or total < 0


def format_score(x) -> Any:
    """JSON-friendly score: ``"-inf"`` for the sentinel, else a number."""
    if x is NEG_INF:
        return "-inf"
    xf = float(x)
    return int(xf) if xf.is_integer() else xf


class StopReason(str, Enum):
    CONTINUE = "Continue"
    GAMMA_STABLE = "GammaStable"
    NEGATIVE_SUM = "NegativeSum"
    MAX_ROUNDS = "MaxRounds"


@dataclass(frozen=True)
class CeParams:
    """Hyper-parameters of one CE run.

    ``M`` samples per round, elite quantile ``rho``, favourability factor
    ``v``, smoothing constant ``c``, stability window ``l``.
    """

    M: int = 2000
    rho: float = 0.01
    v: float = 10.0
    c: float = 0.7
    l: int = 5
    max_rounds: int = 50
    seed: int = 0

    def validate(self) -> "CeParams":
        def bad(msg: str):
            raise ConfigError(msg)

        if not isinstance(self.M, (int, np.integer)) or self.M < 1:
            bad(f"M must be a positive integer, got {self.M!r}")
        if not 0.0 < self.rho < 1.0:
            bad(f"rho must lie in (0, 1), got {self.rho!r}")
        if not self.v >= 1.0:
            bad(f"v must be >= 1, got {self.v!r}")
        if not 0.0 <= self.c <= 1.0:
            bad(f"c must lie in [0, 1], got {self.c!r}")
        if not isinstance(self.l, (int, np.integer)) or self.l < 1:
            bad(f"l must be a positive integer, got {self.l!r}")
        if not isinstance(self.max_rounds, (int, np.integer)) or self.max_rounds < 1:
            bad(f"max_rounds must be a positive integer, got {self.max_rounds!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2**64:
            bad(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        nv = self.v * self.M * self.rho
        if not 1.0 - 1e-9 <= nv <= self.M + 1e-9:
            bad(f"v*M*rho = {nv:g} must lie in [1, M]")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Scored:
    """Generic evaluated sample: a point and its extended-real score."""

    point: Hashable
    value: Any


@dataclass(frozen=True)
class RoundState:
    """Immutable record of one round.

    ``candidates`` are the distinct elite points in rank order; ``q_e``,
    ``q_m`` and ``q_n`` are aligned with them.
    """

    r: int
    gamma: Any
    n_v: int
    samples: tuple
    elites: tuple[int, ...]
    candidates: tuple
    q_e: tuple[float, ...]
    q_m: tuple[float, ...]
    q_n: tuple[float, ...]

    @property
    def scores(self) -> list:
        return [s.value for s in self.samples]

    def score_histogram(self) -> dict[str, int]:
        counts = Counter(self.scores)
        ordered = sorted(counts, key=score_key, reverse=True)
        return {str(format_score(k)): counts[k] for k in ordered}

    def summary(self) -> dict:
        return {
            "r": self.r,
            "gamma": format_score(self.gamma),
            "elite_count": len(self.elites),
            "n_v": self.n_v,
            "score_histogram": self.score_histogram(),
        }


@dataclass(frozen=True)
class CeResult:
    params: CeParams
    rounds: tuple[RoundState, ...]
    stop_reason: StopReason
    best_samples: tuple = field(default=())

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "rounds": [r.summary() for r in self.rounds],
            "stop_reason": self.stop_reason.value,
        }


class CeProblem(Protocol):
    def draw(self, n: int, rng: np.random.Generator) -> list: ...

    def evaluate(self, points: list) -> Sequence: ...

    def resample(self, points: Sequence, weights: Sequence[float], n: int, rng: np.random.Generator) -> list: ...


# ---------------------------------------------------------------------------
# per-round operations
# ---------------------------------------------------------------------------


def _value(x):
    return getattr(x, "value", x)


def elite_quota(n: int, rho: float) -> int:
    """``ceil(rho * n)``, at least one; guards against ``0.01 * 100 = 1.0000000000000002``."""
    return max(1, math.ceil(rho * n - 1e-9))


def quantile_benchmark(scores: Sequence, rho: float) -> Any:
    """The ``ceil(rho n)``-th largest score."""
    if len(scores) == 0:
        raise EmptyInput("quantile_benchmark needs at least one score")
    if not 0.0 < rho < 1.0:
        raise ConfigError(f"rho must lie in (0, 1), got {rho!r}")
    ranked = sorted((_value(s) for s in scores), key=score_key, reverse=True)
    return ranked[elite_quota(len(ranked), rho) - 1]


def _rank(scores: Sequence) -> list[int]:
    # descending score, ascending index among ties
    return sorted(range(len(scores)), key=lambda i: (-score_key(scores[i])[0], -score_key(scores[i])[1], i))


def elite_set(samples: Sequence, gamma: Any, rho: float) -> tuple[int, ...]:
    """Indices of the top ``ceil(rho M)`` performers scoring at least ``gamma``.

    Ties are broken by ascending sample index; the result is in rank order.
    """
    scores = [_value(s) for s in samples]
    if not scores:
        return ()
    quota = elite_quota(len(scores), rho)
    floor_key = score_key(gamma)
    return tuple(i for i in _rank(scores)[:quota] if score_key(scores[i]) >= floor_key)


def update_probabilities(elite: Sequence[int]) -> dict[int, float]:
    """Indicator-over-indicator-sum weight: ``1/|B|`` per elite index."""
    if len(elite) == 0:
        raise EmptyElite("no elite samples to weight")
    w = 1.0 / len(elite)
    return {i: w for i in elite}


def smooth_probabilities(q_e: dict, q_prev: dict, c: float) -> dict:
    """``c q_e + (1 - c) q_prev`` over the union of both key sets."""
    if not 0.0 <= c <= 1.0:
        raise ConfigError(f"c must lie in [0, 1], got {c!r}")
    keys = list(q_e) + [k for k in q_prev if k not in q_e]
    return {k: c * q_e.get(k, 0.0) + (1.0 - c) * q_prev.get(k, 0.0) for k in keys}


def normalize_probabilities(q_m: dict) -> dict:
    total = math.fsum(q_m.values())
    if not total > 0.0:
        raise ZeroMass("elite candidates carry no probability mass")
    return {k: v / total for k, v in q_m.items()}


def elite_sample_count(params: CeParams) -> int:
    """``N_v = round(v M rho)`` (half away from zero), clamped to ``[0, M]``."""
    raw = params.v * params.M * params.rho
    nv = math.floor(abs(raw) + 0.5 + 1e-9)
    return int(min(max(nv, 0), params.M))


def check_termination(gamma_history: Sequence, scores_this_round: Sequence, params: CeParams) -> StopReason:
    if scores_this_round and _is_negative(score_sum([_value(s) for s in scores_this_round])):
        return StopReason.NEGATIVE_SUM
    window = params.l + 1
    if len(gamma_history) >= window:
        tail = list(gamma_history)[-window:]
        if all(g == tail[0] for g in tail):
            return StopReason.GAMMA_STABLE
    if len(gamma_history) >= params.max_rounds:
        return StopReason.MAX_ROUNDS
    return StopReason.CONTINUE


def round_rng(seed: int, r: int, stream: int) -> np.random.Generator:
    """Philox generator keyed by ``(seed, round, stream)``; independent of call order."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(r), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


FRESH_STREAM = 0
ELITE_STREAM = 1


def run_ce(
    problem: CeProblem,
    params: CeParams,
    *,
    key: Callable[[Any], Hashable] = lambda p: p,
    on_round: Optional[Callable[[RoundState], None]] = None,
) -> CeResult:
    """Iterate draw, score, benchmark, reweight and stop-check until a stop rule fires.

    Round 1 draws ``M`` fresh points.  Later rounds take ``N_v`` points from
    the previous elite candidates by their normalized weight, followed by
    ``M - N_v`` fresh points.  ``key`` maps a point to its identity in the
    persistent weight pool.
    """
    params.validate()
    n_v = elite_sample_count(params)
    pool: dict = {}
    rounds: list[RoundState] = []
    gammas: list = []
    cand_points: list = []
    cand_qn: list[float] = []
    stop = StopReason.CONTINUE
    r = 0
    while stop is StopReason.CONTINUE:
        r += 1
        if r == 1:
            points = list(problem.draw(params.M, round_rng(params.seed, r, FRESH_STREAM)))
            drawn_nv = 0
        else:
            resampled = list(problem.resample(cand_points, cand_qn, n_v, round_rng(params.seed, r, ELITE_STREAM)))
            fresh = list(problem.draw(params.M - n_v, round_rng(params.seed, r, FRESH_STREAM)))
            points = resampled + fresh
            drawn_nv = n_v
        samples = tuple(problem.evaluate(points))
        if len(samples) != params.M:
            raise ConfigError(f"problem returned {len(samples)} evaluations for {params.M} points")
        scores = [s.value for s in samples]

        gamma = quantile_benchmark(scores, params.rho)
        gammas.append(gamma)
        elites = elite_set(scores, gamma, params.rho)

        q_e_idx = update_probabilities(elites)
        q_e: dict = {}
        first_point: dict = {}
        for i in elites:
            k = key(samples[i].point)
            q_e[k] = q_e.get(k, 0.0) + q_e_idx[i]
            first_point.setdefault(k, samples[i].point)
        smoothed = smooth_probabilities(q_e, pool, params.c)
        pool = {k: w for k, w in smoothed.items() if k in q_e or w >= POOL_PRUNE}
        q_m = {k: smoothed[k] for k in q_e}
        q_n = normalize_probabilities(q_m)

        cand_keys = list(q_e)
        cand_points = [first_point[k] for k in cand_keys]
        cand_qn = [q_n[k] for k in cand_keys]
        state = RoundState(
            r=r,
            gamma=gamma,
            n_v=drawn_nv,
            samples=samples,
            elites=elites,
            candidates=tuple(cand_points),
            q_e=tuple(q_e[k] for k in cand_keys),
            q_m=tuple(q_m[k] for k in cand_keys),
            q_n=tuple(cand_qn),
        )
        rounds.append(state)
        if on_round is not None:
            on_round(state)
        stop = check_termination(gammas, scores, params)

    last = rounds[-1]
    return CeResult(
        params=params,
        rounds=tuple(rounds),
        stop_reason=stop,
        best_samples=tuple(last.samples[i] for i in last.elites),
    )
