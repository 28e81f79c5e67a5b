"""Small synthetic problems and brute-force oracles for the test suite."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ceor.ce_engine import NEG_INF, Scored


class PlantedGrid:
    """Uniform cells of an ``n x n`` grid; only ``planted`` scores 1."""

    def __init__(self, n: int = 100, planted: tuple[int, int] = (37, 81)):
        self.n = n
        self.planted = planted
        self.evaluated = 0

    def draw(self, k, rng):
        cells = rng.integers(0, self.n, size=(k, 2))
        return [(int(a), int(b)) for a, b in cells]

    def evaluate(self, points):
        self.evaluated += len(points)
        return [Scored(p, 1 if p == self.planted else 0) for p in points]

    def resample(self, points, weights, k, rng):
        idx = rng.choice(len(points), size=k, p=np.asarray(weights) / np.sum(weights))
        return [points[i] for i in idx]


class ConstantScore(PlantedGrid):
    def __init__(self, value=0, poison_round=None):
        super().__init__()
        self.value = value
        self.poison_round = poison_round
        self.calls = 0

    def evaluate(self, points):
        self.calls += 1
        out = [Scored(p, self.value) for p in points]
        if self.calls == self.poison_round:
            out[len(out) // 2] = Scored(out[len(out) // 2].point, NEG_INF)
        return out


def brute_force_paths(model, start, max_len, end_token=None):
    """Every complete path with its exact product probability, best first.

    Products are taken over ``Fraction`` so equal-probability paths tie
    exactly and fall back to token order.
    """
    out = []

    def walk(prefix, prob):
        done = len(prefix) == max_len or (end_token is not None and prefix and prefix[-1] == end_token)
        if done:
            out.append((tuple(prefix), prob))
            return
        row = model.transitions[(list(start) + prefix)[-1]]
        for tok, q in enumerate(row):
            if q > 0:
                walk(prefix + [tok], prob * Fraction(float(q)))

    walk([], Fraction(1))
    out.sort(key=lambda e: (-e[1], e[0]))
    return [(tokens, float(prob)) for tokens, prob in out]
