"""Nucleus filtering combined with beam search over accumulated path probability.

At every step each live beam is expanded by the tokens that survive top-p
filtering of the model's next-token distribution.  Extensions are scored by
the product of their renormalized step probabilities (kept as a sum of logs),
and only the best ``k`` paths survive.  Selection is deterministic; ties are
broken by lexicographic token order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path as FsPath
from typing import Optional, Protocol, Sequence

import numpy as np

from .errors import ConfigError, ZeroStep

__all__ = [
    "TokenDistribution",
    "Path",
    "DecodeParams",
    "NextTokenModel",
    "MarkovModel",
    "top_p_filter",
    "path_probability",
    "beam_step",
    "beam_decode",
    "random_markov_model",
    "load_toy_model",
]

PROB_TOL = 1e-9


@dataclass(frozen=True)
class TokenDistribution:
    entries: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        ids = [t for t, _ in self.entries]
        if len(set(ids)) != len(ids):
            raise ConfigError("token ids must be distinct")
        probs = [p for _, p in self.entries]
        if any(not (0.0 <= p <= 1.0) for p in probs):
            raise ConfigError("probabilities must lie in [0, 1]")
        if abs(math.fsum(probs) - 1.0) > PROB_TOL:
            raise ConfigError(f"probabilities sum to {math.fsum(probs)!r}, not 1")

    @classmethod
    def from_mapping(cls, mapping: dict[int, float]) -> "TokenDistribution":
        return cls(tuple((int(k), float(v)) for k, v in mapping.items()))

    def as_dict(self) -> dict[int, float]:
        return dict(self.entries)


@dataclass(frozen=True)
class Path:
    """Generated tokens after ``prompt`` and the log of their accumulated probability.

    The log probability is the correctly rounded sum of the per-step logs, so
    paths built from the same steps in a different order tie exactly.
    ``raw_log_prob`` accumulates the unfiltered model probabilities instead.
    """

    tokens: tuple[int, ...] = ()
    log_path_prob: float = 0.0
    prompt: tuple[int, ...] = field(default=(), compare=False)
    step_logs: tuple[float, ...] = field(default=(), compare=False, repr=False)
    raw_log_prob: float = field(default=0.0, compare=False)

    @property
    def prob(self) -> float:
        return math.exp(self.log_path_prob)

    def extend(self, token: int, prob: float, raw_prob: Optional[float] = None) -> "Path":
        logs = self.step_logs + (math.log(prob),)
        raw = self.raw_log_prob + math.log(prob if raw_prob is None else raw_prob)
        return Path(self.tokens + (token,), math.fsum(logs), self.prompt, logs, raw)


@dataclass(frozen=True)
class DecodeParams:
    p: float = 0.9
    k: int = 3
    max_len: int = 8
    end_token: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise ConfigError(f"p must lie in (0, 1], got {self.p!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"k must be a positive integer, got {self.k!r}")
        if int(self.max_len) != self.max_len or self.max_len < 1:
            raise ConfigError(f"max_len must be a positive integer, got {self.max_len!r}")


class NextTokenModel(Protocol):
    vocab_size: int

    def next(self, prefix: Sequence[int]) -> TokenDistribution: ...


class MarkovModel:
    """First-order Markov chain: the next token depends only on the last one."""

    def __init__(self, vocab: Sequence[str], transitions: np.ndarray, start: Sequence[int] = (0,)):
        self.vocab = list(vocab)
        self.vocab_size = len(self.vocab)
        self.transitions = np.asarray(transitions, dtype=float)
        if self.transitions.shape != (self.vocab_size, self.vocab_size):
            raise ConfigError("transition table must be vocab x vocab")
        self.start = tuple(int(t) for t in start)
        self._rows = [
            TokenDistribution(tuple((j, float(p)) for j, p in enumerate(row) if p > 0.0)) for row in self.transitions
        ]

    def next(self, prefix: Sequence[int]) -> TokenDistribution:
        if len(prefix) == 0:
            raise ConfigError("a Markov model needs a nonempty prefix")
        return self._rows[prefix[-1]]

    def token_id(self, name: str) -> int:
        return self.vocab.index(name)

    @classmethod
    def from_dict(cls, doc: dict) -> "MarkovModel":
        vocab = [str(v) for v in doc["vocab"]]
        index = {v: i for i, v in enumerate(vocab)}
        table = np.zeros((len(vocab), len(vocab)))
        for src, row in doc["transitions"].items():
            for dst, p in row.items():
                table[index[src], index[dst]] = float(p)
        start = [index[str(s)] for s in doc.get("start", vocab[:1])]
        return cls(vocab, table, start)

    def to_dict(self) -> dict:
        return {
            "vocab": self.vocab,
            "start": [self.vocab[i] for i in self.start],
            "transitions": {
                self.vocab[i]: {self.vocab[j]: float(p) for j, p in enumerate(row) if p > 0.0}
                for i, row in enumerate(self.transitions)
            },
        }

    @classmethod
    def from_json(cls, path) -> "MarkovModel":
        return cls.from_dict(json.loads(FsPath(path).read_text(encoding="utf-8")))


def random_markov_model(vocab_size: int, seed: int, concentration: float = 1.0) -> MarkovModel:
    """Seeded Markov chain with Dirichlet-distributed transition rows."""
    rng = np.random.default_rng(seed)
    table = rng.dirichlet(np.full(vocab_size, concentration), size=vocab_size)
    vocab = [chr(ord("a") + i) for i in range(vocab_size)]
    return MarkovModel(vocab, table, (0,))


def load_toy_model() -> MarkovModel:
    """The bundled three-token chain used by tests and the CLI demo."""
    text = resources.files("ceor").joinpath("data/toy_markov.json").read_text(encoding="utf-8")
    return MarkovModel.from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# filtering and beams
# ---------------------------------------------------------------------------


def top_p_filter(dist: TokenDistribution, p: float) -> TokenDistribution:
    """Smallest highest-probability prefix with cumulative mass >= p, renormalized."""
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"p must lie in (0, 1], got {p!r}")
    ranked = sorted(dist.entries, key=lambda e: (-e[1], e[0]))
    kept = []
    mass = 0.0
    for tok, prob in ranked:
        kept.append((tok, prob))
        mass += prob
        if mass >= p - PROB_TOL:
            break
    kept = [(t, q) for t, q in kept if q > 0.0] or kept
    total = math.fsum(q for _, q in kept)
    return TokenDistribution(tuple((t, q / total) for t, q in kept))


def path_probability(steps: Sequence[float]) -> float:
    """Product of step probabilities, accumulated as a sum of logs."""
    if any(q <= 0.0 for q in steps):
        raise ZeroStep("a path step has zero probability")
    return math.exp(math.fsum(math.log(q) for q in steps))


def _rank_key(path: Path):
    return (-path.log_path_prob, path.tokens)


def _finished(path: Path, params: DecodeParams) -> bool:
    if len(path.tokens) >= params.max_len:
        return True
    return params.end_token is not None and len(path.tokens) > 0 and path.tokens[-1] == params.end_token


def beam_step(beams: Sequence[Path], model: NextTokenModel, params: DecodeParams) -> list[Path]:
    """Expand every live beam by its nucleus tokens and keep the best ``k`` paths.

    Finished beams are carried over unchanged and compete with the new
    extensions on their frozen probability.
    """
    candidates: list[Path] = []
    for beam in beams:
        if _finished(beam, params):
            candidates.append(beam)
            continue
        dist = model.next(beam.prompt + beam.tokens)
        raw = dist.as_dict()
        for tok, q in top_p_filter(dist, params.p).entries:
            candidates.append(beam.extend(tok, q, raw[tok]))
    candidates.sort(key=_rank_key)
    return candidates[: params.k]


def beam_decode(model: NextTokenModel, start: Sequence[int], params: DecodeParams) -> list[Path]:
    """Beam search from ``start`` until every kept path is finished; best first."""
    beams = [Path((), 0.0, tuple(int(t) for t in start))]
    while not all(_finished(b, params) for b in beams):
        beams = beam_step(beams, model, params)
    return sorted(beams, key=_rank_key)
