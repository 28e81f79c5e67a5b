"""Unit-height tiling of the critical strip with per-tile searches and counts.

A span ``[t_lo, t_hi)`` is cut into half-open tiles ``[t_lo + k, t_lo + k + 1)``.
Each tile gets an independent scan count, a smooth-count estimate and a CEOR
run seeded from ``(seed, k)``, so tiles can run in any order or in parallel.
Extending a sweep by more tiles reuses every earlier tile report unchanged.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .ce_engine import CeParams
from .errors import NonIntegerSpan
from .rh_search import StripRegion, Tolerances, run_ceor
from .zero_locator import RegionCount, count_zeros_online, count_zeros_region

__all__ = ["TileReport", "SweepReport", "tile_strip", "tile_seed", "run_tile", "sweep_region", "extend_sweep"]

SPAN_TOL = 1e-9


@dataclass(frozen=True)
class TileReport:
    index: int
    tile: StripRegion
    region_count: RegionCount
    ceor_zeros: tuple[float, ...]
    match: bool

    def to_dict(self) -> dict:
        rc = self.region_count
        return {
            "index": self.index,
            "tile_lo": self.tile.t_lo,
            "tile_hi": self.tile.t_hi,
            "n_online": rc.n_online,
            "n_formula": rc.n_formula,
            "region_consistent": rc.consistent,
            "ceor_zeros": list(self.ceor_zeros),
            "match": self.match,
        }


@dataclass(frozen=True)
class SweepReport:
    t_lo: float
    t_hi: float
    params: CeParams
    tolerances: Tolerances
    jitter: float
    tiles: tuple[TileReport, ...]
    total_online: int
    total_formula: int
    one_shot_online: int
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "t_lo": self.t_lo,
            "t_hi": self.t_hi,
            "params": self.params.to_dict(),
            "tolerances": self.tolerances.to_dict(),
            "jitter": self.jitter,
            "tiles": [t.to_dict() for t in self.tiles],
            "total_online": self.total_online,
            "total_formula": self.total_formula,
            "one_shot_online": self.one_shot_online,
            "consistent": self.consistent,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["tile_lo", "tile_hi", "n_online", "n_formula", "ceor_found", "match"])
        for t in self.tiles:
            w.writerow(
                [repr(t.tile.t_lo), repr(t.tile.t_hi), t.region_count.n_online, t.region_count.n_formula,
                 len(t.ceor_zeros), str(t.match).lower()]
            )
        return buf.getvalue()


def _span_tiles(t_lo: float, t_hi: float) -> int:
    span = t_hi - t_lo
    n = round(span)
    if n < 1 or abs(span - n) > SPAN_TOL:
        raise NonIntegerSpan(f"t_hi - t_lo must be a positive integer, got {span!r}")
    return int(n)


def tile_strip(t_lo: float, t_hi: float) -> list[StripRegion]:
    """Unit tiles ``[t_lo + k, t_lo + k + 1)`` covering ``[t_lo, t_hi)`` exactly."""
    n = _span_tiles(float(t_lo), float(t_hi))
    return [StripRegion(t_lo + k, t_lo + k + 1) for k in range(n)]


def tile_seed(seed: int, index: int) -> int:
    """64-bit seed for tile ``index``, hashed from the sweep seed."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_tile(index: int, tile: StripRegion, params: CeParams, tol: Tolerances, jitter: float = 0.0) -> TileReport:
    rc = count_zeros_region(tile.t_lo, tile.t_hi)
    report = run_ceor(tile, replace(params, seed=tile_seed(params.seed, index)), tol, jitter=jitter)
    zeros = tuple(z for z in report.zero_ordinates if tile.t_lo <= z < tile.t_hi)
    match = len(report.zeros) == rc.n_online and len(zeros) == len(report.zeros)
    return TileReport(index, tile, rc, zeros, match)


def _run_tiles(jobs: Sequence[tuple[int, StripRegion]], params, tol, jitter, workers: int) -> list[TileReport]:
    if workers <= 1 or len(jobs) <= 1:
        return [run_tile(i, tile, params, tol, jitter) for i, tile in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_tile, i, tile, params, tol, jitter) for i, tile in jobs]
        return [f.result() for f in futures]


def _assemble(t_lo, t_hi, params, tol, jitter, tiles: Sequence[TileReport]) -> SweepReport:
    tiles = tuple(sorted(tiles, key=lambda t: t.index))
    total_online = sum(t.region_count.n_online for t in tiles)
    total_formula = sum(t.region_count.n_formula for t in tiles)
    one_shot = count_zeros_online(t_lo, t_hi)
    consistent = all(t.match for t in tiles) and total_online == one_shot
    return SweepReport(t_lo, t_hi, params, tol, jitter, tiles, total_online, total_formula, one_shot, consistent)


def sweep_region(
    t_lo: float,
    t_hi: float,
    params: CeParams = CeParams(),
    tol: Tolerances = Tolerances(),
    *,
    jitter: float = 0.0,
    workers: int = 1,
    order: Optional[Sequence[int]] = None,
) -> SweepReport:
    """Count and search every unit tile of ``[t_lo, t_hi)``.

    ``order`` permutes tile execution; the report is the same for any order.
    """
    t_lo, t_hi = float(t_lo), float(t_hi)
    tiles = tile_strip(t_lo, t_hi)
    params.validate()
    jobs = list(enumerate(tiles))
    if order is not None:
        jobs = [jobs[i] for i in order]
    return _assemble(t_lo, t_hi, params, tol, jitter, _run_tiles(jobs, params, tol, jitter, workers))


def extend_sweep(
    report: SweepReport,
    extra_tiles: int,
    params: Optional[CeParams] = None,
    tol: Optional[Tolerances] = None,
    *,
    workers: int = 1,
) -> SweepReport:
    """Append ``extra_tiles`` unit tiles above ``report.t_hi``.

    Earlier tile reports are carried over as-is; ``params`` and ``tol``
    default to the ones the report was built with.
    """
    if int(extra_tiles) != extra_tiles or extra_tiles < 1:
        raise NonIntegerSpan(f"extra_tiles must be a positive integer, got {extra_tiles!r}")
    params = report.params if params is None else params
    tol = report.tolerances if tol is None else tol
    start = len(report.tiles)
    new_hi = report.t_lo + start + int(extra_tiles)
    if not math.isclose(report.t_lo + start, report.t_hi, abs_tol=SPAN_TOL):
        raise NonIntegerSpan("report tiles do not cover its span")
    jobs = [(start + k, StripRegion(report.t_hi + k, report.t_hi + k + 1)) for k in range(int(extra_tiles))]
    fresh = _run_tiles(jobs, params, tol, report.jitter, workers)
    return _assemble(report.t_lo, new_hi, params, tol, report.jitter, list(report.tiles) + fresh)
