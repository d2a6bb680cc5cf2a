"""Exact summatory functions streamed over sieve blocks.

Every sum here is produced by one ascending pass over ``[1, max(grid)]``.
Blocks start at absolute multiples of the block size and are additionally
cut at every checkpoint, so the pieces that make up a checkpoint segment
depend only on (grid, block_size).  Integer-valued functions are summed
exactly; real-valued pieces are summed with ``math.fsum`` and segment totals
are chained in ascending order.  Consequently the result is identical for
any worker count, and a run resumed from a stored checkpoint reproduces the
cold run bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .arith_functions import (
    LOG,
    MOBIUS,
    SQUAREFREE,
    EvaluationError,
    FunctionSpec,
    Kind,
    evaluate_block,
)
from .sieve_core import (
    DEFAULT_BLOCK_SIZE,
    N_CAP,
    base_primes_for,
    block_ranges,
    build_block,
)

DEFAULT_RATIO = 10 ** 0.25
DEFAULT_N_MIN = 1000


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class SummatorySeries:
    function_name: str
    grid: tuple
    values: tuple
    n_max: int

    def __post_init__(self):
        if len(self.grid) != len(self.values):
            raise GridError("grid and values differ in length")
        _check_grid(self.grid)

    def __len__(self):
        return len(self.grid)

    def value_at(self, n: int):
        return self.values[self.grid.index(n)]

    def prefix(self, k: int) -> "SummatorySeries":
        return SummatorySeries(self.function_name, self.grid[:k], self.values[:k], self.grid[k - 1])


@dataclass(frozen=True)
class Summand:
    """A per-integer quantity to accumulate: ``values(block)`` -> array."""

    name: str
    values: Callable
    integer: bool = False


def summand(spec: FunctionSpec) -> Summand:
    return Summand(spec.name, lambda block: evaluate_block(spec, block), spec.integer_valued)


def prime_summand(spec: FunctionSpec, name: str | None = None) -> Summand:
    """f(m) on primes, 0 elsewhere; needs a pointwise spec."""
    if spec.kind is not Kind.POINTWISE:
        raise TypeError(f"prime sums need a pointwise spec, got {spec.kind.value}")

    def values(block):
        mask = block.is_prime
        out = np.zeros(len(block))
        if mask.any():
            sub = build_prime_values(spec, block.m[mask])
            bad = ~np.isfinite(sub)
            if bad.any():
                m = int(block.m[mask][np.flatnonzero(bad)[0]])
                raise EvaluationError(f"{spec.name}: non-finite value at prime {m}", m=m)
            out[mask] = sub
        return out

    return Summand(name or f"prime_{spec.name}", values, False)


def build_prime_values(spec: FunctionSpec, primes: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        return np.broadcast_to(
            np.asarray(spec.pointwise_rule(primes.astype(float)), dtype=float), primes.shape
        )


PRIME_INDICATOR = Summand("prime_count", lambda block: block.is_prime.astype(np.int8), True)


def _check_grid(grid) -> None:
    if not len(grid):
        raise GridError("grid is empty")
    prev = 0
    for n in grid:
        if int(n) != n or n < 1:
            raise GridError(f"grid entries must be positive integers, got {n!r}")
        if n <= prev:
            raise GridError(f"grid must be strictly increasing ({prev} then {n})")
        prev = n


def geometric_grid(n_max: int, n_min: int = DEFAULT_N_MIN, ratio: float = DEFAULT_RATIO) -> list[int]:
    """round(n_min * ratio**i) up to n_max; n_max itself is always the last point."""
    if ratio <= 1:
        raise GridError(f"ratio must exceed 1, got {ratio}")
    if n_min < 1 or n_max < n_min:
        raise GridError(f"need 1 <= n_min <= n_max, got {n_min}, {n_max}")
    grid = []
    i = 0
    while True:
        n = round(n_min * ratio**i)
        # absorb float noise such as 999999.9999 -> 10**6
        if n > n_max * (1 + 1e-12):
            break
        n = min(n, n_max)
        if not grid or n > grid[-1]:
            grid.append(n)
        i += 1
    if grid[-1] != n_max:
        grid.append(n_max)
    return grid


def _block_pieces(summands, a, b, grid, base_primes):
    block = build_block(a, b, base_primes)
    cuts = [n + 1 for n in grid if a <= n < b - 1]
    edges = [a, *cuts, b]
    out = []
    for s in summands:
        vals = s.values(block)
        pieces = []
        for x, y in zip(edges[:-1], edges[1:]):
            seg = int(np.searchsorted(grid, x))
            chunk = vals[x - a : y - a]
            if s.integer:
                pieces.append((seg, int(np.rint(chunk).astype(np.int64).sum())))
            else:
                pieces.append((seg, math.fsum(np.asarray(chunk, dtype=float).tolist())))
        out.append(pieces)
    return out


def stream_sums(
    summands: Sequence[Summand],
    grid: Sequence[int],
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    n_cap: int = N_CAP,
    resume: dict | None = None,
) -> list[list]:
    """Checkpoint values of every summand on ``grid`` from one pass.

    ``resume`` maps summand names to previously computed values on a prefix
    of the grid; the pass then starts right after that prefix.
    """
    grid = [int(n) for n in grid]
    _check_grid(grid)
    if grid[-1] > n_cap:
        raise GridError(f"max(grid) = {grid[-1]} exceeds the cap {n_cap}")
    if workers < 1:
        raise ValueError("workers must be >= 1")

    start_idx = 0
    results = [[] for _ in summands]
    if resume:
        lengths = {len(resume[s.name]) for s in summands}
        if len(lengths) != 1:
            raise GridError("resume prefixes differ in length")
        start_idx = lengths.pop()
        if start_idx > len(grid):
            raise GridError("resume prefix longer than grid")
        for k, s in enumerate(summands):
            results[k] = list(resume[s.name])
    if start_idx == len(grid):
        return results

    lo = grid[start_idx - 1] + 1 if start_idx else 1
    hi = grid[-1] + 1
    base = base_primes_for(grid[-1])
    ranges = block_ranges(lo, hi, block_size)
    grid_arr = np.asarray(grid, dtype=np.int64)

    def job(r):
        return _block_pieces(summands, r[0], r[1], grid_arr, base)

    seg_pieces = [dict() for _ in summands]
    if workers == 1:
        block_results = map(job, ranges)
        pool = None
    else:
        pool = ThreadPoolExecutor(max_workers=workers)
        block_results = pool.map(job, ranges)
    try:
        # map() yields in submission order, so the reduction is ascending.
        for per_summand in block_results:
            for k, pieces in enumerate(per_summand):
                for seg, v in pieces:
                    seg_pieces[k].setdefault(seg, []).append(v)
    finally:
        if pool is not None:
            pool.shutdown()

    for k, s in enumerate(summands):
        acc = results[k][-1] if results[k] else (0 if s.integer else 0.0)
        for seg in range(start_idx, len(grid)):
            pieces = seg_pieces[k].get(seg, [])
            total = sum(pieces) if s.integer else math.fsum(pieces)
            acc = acc + total
            results[k].append(acc)
    return results


def compute_many(specs, grid, workers=1, block_size=DEFAULT_BLOCK_SIZE, n_cap=N_CAP) -> list[SummatorySeries]:
    """Series for several functions sharing one sieve pass.

    ``specs`` may mix :class:`FunctionSpec` and :class:`Summand` entries.
    """
    summands = [s if isinstance(s, Summand) else summand(s) for s in specs]
    values = stream_sums(summands, grid, workers, block_size, n_cap)
    grid = tuple(int(n) for n in grid)
    return [SummatorySeries(s.name, grid, tuple(v), grid[-1]) for s, v in zip(summands, values)]


def compute_summatory(spec, grid, workers=1, block_size=DEFAULT_BLOCK_SIZE, n_cap=N_CAP,
                      resume_from: SummatorySeries | None = None) -> SummatorySeries:
    """S(n) = sum_{m <= n} f(m) at every checkpoint of ``grid``."""
    s = spec if isinstance(spec, Summand) else summand(spec)
    resume = None
    if resume_from is not None:
        k = len(resume_from.grid)
        if tuple(resume_from.grid) != tuple(grid[:k]) or resume_from.function_name != s.name:
            raise GridError("checkpoint is not a prefix of the requested run")
        resume = {s.name: resume_from.values}
    (values,) = stream_sums([s], grid, workers, block_size, n_cap, resume)
    grid = tuple(int(n) for n in grid)
    return SummatorySeries(s.name, grid, tuple(values), grid[-1])


def mean_value(series: SummatorySeries, i: int) -> float:
    """E[f, n_i] = S(n_i) / n_i."""
    return series.values[i] / series.grid[i]


def density(series: SummatorySeries, i: int) -> float:
    """S(n_i) / n_i, the density of an indicator-type summatory function."""
    return series.values[i] / series.grid[i]


def empirical_variance(spec: FunctionSpec, n: int, workers=1, block_size=DEFAULT_BLOCK_SIZE):
    """(mean, variance) of f(1), ..., f(n) with the 1/n normalisation."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    base = summand(spec)
    square = Summand(f"{spec.name}^2", lambda block: np.square(base.values(block)), spec.integer_valued)
    s1, s2 = stream_sums([base, square], [n], workers, block_size)
    mean = s1[0] / n
    var = s2[0] / n - mean * mean
    if spec.integer_valued:
        # exact: (n*S2 - S1^2) / n^2
        var = (n * s2[0] - s1[0] * s1[0]) / (n * n)
    return mean, max(var, 0.0)


def mertens(grid, **kw) -> SummatorySeries:
    return compute_summatory(MOBIUS, grid, **kw)


def squarefree_count(grid, **kw) -> SummatorySeries:
    return compute_summatory(SQUAREFREE, grid, **kw)


def prime_sum(spec: FunctionSpec, grid, **kw) -> SummatorySeries:
    """sum_{p <= n} f(p) for a pointwise spec."""
    return compute_summatory(prime_summand(spec), grid, **kw)


def chebyshev_theta(grid, **kw) -> SummatorySeries:
    """theta(n) = sum_{p <= n} ln p; the same code path as prime_sum(LOG)."""
    return compute_summatory(prime_summand(LOG, "theta"), grid, **kw)


def prime_counting(grid, **kw) -> SummatorySeries:
    return compute_summatory(PRIME_INDICATOR, grid, **kw)
