"""Segmented sieve producing exact per-integer arithmetic data.

Each :class:`SieveBlock` covers a half-open range ``[lo, hi)`` and holds the
smallest prime factor, Moebius value, omega, big omega and Euler totient of
every integer in it.  Blocks only depend on the shared list of base primes
(all primes up to ``isqrt(hi - 1)``), so they can be built independently and
in any order.
"""

from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_BLOCK_SIZE = 1 << 20
MAX_BLOCK_SIZE = 1 << 24
# 64-bit totients and products stay exact well below this.
N_CAP = 10**9

PRIME_CACHE_MAGIC = b"SPRIMES1"
CACHE_ENV = "SUMMATORIA_CACHE"


class SieveError(ValueError):
    pass


def simple_sieve(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array (plain Eratosthenes)."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@dataclass(frozen=True)
class Factorization:
    m: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        last = 1
        for p, a in self.factors:
            if p <= last or a < 1:
                raise SieveError(f"non-canonical factorization of {self.m}: {self.factors}")
            last = p
            prod *= p**a
        if prod != self.m:
            raise SieveError(f"factors {self.factors} do not multiply to {self.m}")

    @property
    def is_squarefree(self) -> bool:
        return all(a == 1 for _, a in self.factors)


@dataclass(frozen=True, eq=False)
class SieveBlock:
    """Per-integer factorization data for ``lo <= m < hi``.

    ``spf[i]`` is the smallest prime factor of ``lo + i`` (1 for m = 1).
    ``cofactor[i]`` is the single prime factor of ``lo + i`` exceeding the
    base-prime bound, or 1 when there is none; the rule evaluators in
    :mod:`summatoria.arith_functions` need it to finish a factorization.
    """

    lo: int
    hi: int
    spf: np.ndarray
    mu: np.ndarray
    omega: np.ndarray
    big_omega: np.ndarray
    phi: np.ndarray
    cofactor: np.ndarray
    base_primes: np.ndarray

    def __len__(self):
        return self.hi - self.lo

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.lo, self.hi, dtype=np.int64)

    @property
    def is_prime(self) -> np.ndarray:
        ints = self.m
        return (self.spf == ints) & (ints >= 2)

    def index(self, m: int) -> int:
        if not self.lo <= m < self.hi:
            raise IndexError(f"{m} outside block [{self.lo}, {self.hi})")
        return m - self.lo

    def factorize(self, m: int) -> Factorization:
        return factorize(m, self)


def _check_base_primes(base_primes: np.ndarray, hi: int) -> None:
    bound = math.isqrt(hi - 1)
    required = simple_sieve(bound)
    if len(base_primes) < len(required) or not np.array_equal(
        base_primes[: len(required)], required
    ):
        raise SieveError(f"base_primes must contain every prime <= {bound}")


def build_block(lo: int, hi: int, base_primes, max_block_size: int = MAX_BLOCK_SIZE) -> SieveBlock:
    """Sieve the block ``[lo, hi)``.

    ``base_primes`` must hold every prime up to ``isqrt(hi - 1)``; extra
    larger primes are ignored.
    """
    if not 1 <= lo < hi:
        raise SieveError(f"need 1 <= lo < hi, got lo={lo}, hi={hi}")
    if hi - lo > max_block_size:
        raise SieveError(f"block length {hi - lo} exceeds capacity {max_block_size}")
    if hi - 1 > N_CAP:
        raise SieveError(f"hi - 1 = {hi - 1} exceeds the supported bound {N_CAP}")
    base_primes = np.asarray(base_primes, dtype=np.int64)
    _check_base_primes(base_primes, hi)
    bound = math.isqrt(hi - 1)
    base = base_primes[base_primes <= bound]

    size = hi - lo
    rem = np.arange(lo, hi, dtype=np.int64)
    phi = rem.copy()
    spf = np.zeros(size, dtype=np.int64)
    mu = np.ones(size, dtype=np.int8)
    omega = np.zeros(size, dtype=np.int8)
    big_omega = np.zeros(size, dtype=np.int8)

    for p in base.tolist():
        start = -lo % p
        if start >= size:
            continue
        sl = slice(start, size, p)
        spf_view = spf[sl]
        spf_view[spf_view == 0] = p
        mu[sl] = -mu[sl]
        omega[sl] += 1
        phi[sl] = phi[sl] // p * (p - 1)
        pk = p
        while pk <= hi - 1:
            first = -lo % pk
            if first >= size:
                break
            big_omega[first::pk] += 1
            rem[first::pk] //= p
            if pk > p:
                mu[first::pk] = 0
            pk *= p

    big = rem > 1
    q = rem[big]
    spf[big & (spf == 0)] = rem[big & (spf == 0)]
    mu[big] = -mu[big]
    omega[big] += 1
    big_omega[big] += 1
    phi[big] = phi[big] // q * (q - 1)
    if lo == 1:
        spf[0] = 1

    cofactor = np.where(big, rem, 1)
    return SieveBlock(lo, hi, spf, mu, omega, big_omega, phi, cofactor, base)


def factorize(m: int, sieve: SieveBlock) -> Factorization:
    """Canonical factorization of ``m`` read off the block's spf column.

    Requires ``m`` to lie in the block; repeated spf lookups walk down
    through cofactors, falling back to trial division by the block's base
    primes once the cofactor leaves the block.
    """
    if m == 0:
        raise SieveError("cannot factorize 0")
    if m < 0:
        raise SieveError(f"cannot factorize negative {m}")
    if m == 1:
        return Factorization(1, ())
    sieve.index(m)
    factors: list[tuple[int, int]] = []
    rest = m
    while rest > 1:
        if sieve.lo <= rest < sieve.hi:
            p = int(sieve.spf[rest - sieve.lo])
        else:
            p = _smallest_factor(rest, sieve.base_primes)
        a = 0
        while rest % p == 0:
            rest //= p
            a += 1
        factors.append((p, a))
    return Factorization(m, tuple(factors))


def _smallest_factor(n: int, base_primes: np.ndarray) -> int:
    for p in base_primes.tolist():
        if p * p > n:
            break
        if n % p == 0:
            return p
    return n


def block_ranges(lo: int, hi: int, block_size: int = DEFAULT_BLOCK_SIZE):
    """Split ``[lo, hi)`` at multiples of ``block_size``.

    Boundaries are absolute, so the blocks touching a given integer do not
    depend on where a scan started.
    """
    if block_size < 1:
        raise SieveError("block_size must be positive")
    out = []
    a = lo
    while a < hi:
        b = min(hi, (a // block_size + 1) * block_size)
        out.append((a, b))
        a = b
    return out


def base_primes_for(n_max: int) -> np.ndarray:
    """Base primes sufficient to sieve every integer <= n_max.

    With ``SUMMATORIA_CACHE`` set, the list is read from / written to a
    binary cache file in that directory.
    """
    bound = math.isqrt(max(n_max, 1))
    cache = _cache_dir()
    if cache is None:
        return simple_sieve(bound)
    path = cache / "base_primes.bin"
    try:
        cached_bound, cached = load_primes(path)
    except (OSError, SieveError):
        cached_bound, cached = -1, None
    if cached is not None and cached_bound >= bound:
        return cached[cached <= bound]
    primes = simple_sieve(bound)
    try:
        save_primes(path, primes, bound)
    except OSError:
        pass
    return primes


def _cache_dir() -> Path | None:
    d = os.environ.get(CACHE_ENV)
    if not d:
        return None
    path = Path(d)
    path.mkdir(parents=True, exist_ok=True)
    return path


def save_primes(path, primes, bound: int) -> None:
    """Write ``SPRIMES1`` + sieve bound + primes, all little-endian int64."""
    arr = np.asarray(primes, dtype="<i8")
    with open(path, "wb") as fh:
        fh.write(PRIME_CACHE_MAGIC)
        fh.write(struct.pack("<q", bound))
        fh.write(arr.tobytes())


def load_primes(path) -> tuple[int, np.ndarray]:
    """Read a prime cache; returns (sieve bound, primes <= bound)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != PRIME_CACHE_MAGIC:
        raise SieveError(f"{path}: bad magic header")
    if len(data) < 16 or (len(data) - 16) % 8:
        raise SieveError(f"{path}: truncated prime cache")
    (bound,) = struct.unpack("<q", data[8:16])
    return bound, np.frombuffer(data[16:], dtype="<i8").astype(np.int64)


def iter_blocks(lo: int, hi: int, block_size: int = DEFAULT_BLOCK_SIZE, base_primes=None):
    """Yield sieve blocks covering ``[lo, hi)`` in ascending order."""
    if base_primes is None:
        base_primes = base_primes_for(hi - 1)
    for a, b in block_ranges(lo, hi, block_size):
        yield build_block(a, b, base_primes)


def _prime_mask(lo: int, hi: int, base: np.ndarray) -> np.ndarray:
    mask = np.ones(hi - lo, dtype=bool)
    for p in base.tolist():
        start = max(p * p, -(-lo // p) * p)
        if start >= hi:
            continue
        mask[start - lo :: p] = False
    if lo < 2:
        mask[: 2 - lo] = False
    return mask


def primes_up_to(n: int, block_size: int = DEFAULT_BLOCK_SIZE) -> np.ndarray:
    """Every prime <= n, ascending."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    if n <= 4 * block_size:
        return simple_sieve(n)
    base = simple_sieve(math.isqrt(n))
    chunks = []
    for a, b in block_ranges(1, n + 1, block_size):
        chunks.append(np.flatnonzero(_prime_mask(a, b, base)) + a)
    return np.concatenate(chunks).astype(np.int64)


def prime_count(n: int, block_size: int = DEFAULT_BLOCK_SIZE) -> int:
    """Exact pi(n) by segmented sieve count."""
    if n < 2:
        return 0
    base = simple_sieve(math.isqrt(n))
    total = 0
    for a, b in block_ranges(1, n + 1, block_size):
        total += int(np.count_nonzero(_prime_mask(a, b, base)))
    return total
