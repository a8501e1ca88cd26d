"""Prime generation and the weighted frequency tables behind every sum.

A :class:`PrimeTable` holds the primes up to a cutoff with their natural
logarithms (the oscillation frequencies).  A :class:`WeightedEnsemble` adds
the amplitude ``p**-x`` for a chosen weight exponent.  Both are immutable:
their arrays are flagged read-only so they can be shared between worker
threads.
"""

from __future__ import annotations

import functools
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapacityError, DomainError, EmptyRangeError, ParseError

log = logging.getLogger(__name__)

SEGMENT_THRESHOLD = 10**7
MAX_CUTOFF = 10**9
CACHE_ENV = "PRIME_LAB_CACHE"


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PrimeTable:
    cutoff: int
    primes: np.ndarray
    logs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "primes", _frozen(np.asarray(self.primes, dtype=np.int64)))
        object.__setattr__(self, "logs", _frozen(np.asarray(self.logs, dtype=np.float64)))
        if self.primes.shape != self.logs.shape:
            raise ValueError("primes and logs differ in length")

    @classmethod
    def from_primes(cls, cutoff, primes):
        primes = np.asarray(primes, dtype=np.int64)
        return cls(cutoff=int(cutoff), primes=primes, logs=np.log(primes.astype(np.float64)))

    def __len__(self):
        return len(self.primes)

    def prefix(self, cutoff):
        """Sub-table of the primes ``<= cutoff`` (cutoff must not exceed ours)."""
        if cutoff > self.cutoff:
            raise DomainError(f"prefix cutoff {cutoff} exceeds table cutoff {self.cutoff}")
        n = int(np.searchsorted(self.primes, cutoff, side="right"))
        return PrimeTable(cutoff=int(cutoff), primes=self.primes[:n], logs=self.logs[:n])


@dataclass(frozen=True, eq=False)
class WeightedEnsemble:
    table: PrimeTable
    exponent: float
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _frozen(np.asarray(self.weights, dtype=np.float64)))

    @property
    def primes(self):
        return self.table.primes

    @property
    def logs(self):
        return self.table.logs

    @property
    def cutoff(self):
        return self.table.cutoff

    def __len__(self):
        return len(self.table)

    @property
    def weight_sum(self):
        """Sum of |weights|; bounds the raw signal by the triangle inequality."""
        return math.fsum(np.abs(self.weights))


def _simple_sieve(n):
    is_prime = np.ones(n + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(n) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    return np.flatnonzero(is_prime)


def _segmented_sieve(n, segment_size):
    base = _simple_sieve(math.isqrt(n))
    odd_base = base[1:]
    chunks = [base]
    low = int(base[-1]) + 1 if len(base) else 2
    while low <= n:
        high = min(low + segment_size - 1, n)
        seg = np.ones(high - low + 1, dtype=bool)
        for p in odd_base:
            p = int(p)
            start = max(p * p, ((low + p - 1) // p) * p)
            if start > high:
                # base primes are ascending; every later p*p is larger still
                if p * p > high:
                    break
                continue
            seg[start - low :: p] = False
        # evens
        first_even = low + (low & 1)
        seg[first_even - low :: 2] = False
        chunks.append(np.flatnonzero(seg) + low)
        low = high + 1
    return np.concatenate(chunks)


@functools.lru_cache(maxsize=8)
def _sieve_cached(cutoff, segment_threshold):
    if cutoff <= segment_threshold:
        primes = _simple_sieve(cutoff)
    else:
        seg = max(segment_threshold, math.isqrt(cutoff) + 1)
        primes = _segmented_sieve(cutoff, seg)
    return PrimeTable.from_primes(cutoff, primes)


def read_prime_cache(path):
    """Load a cache file: ascending integers, one per line, ``#`` comments.

    Returns ``(covered_cutoff, primes)``.  A ``# cutoff=N`` header records the
    range the file covers; without one the largest prime is assumed.
    """
    covered = None
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("cutoff="):
                    covered = int(body.split("=", 1)[1])
                continue
            try:
                values.append(int(line))
            except ValueError:
                raise ParseError(f"not an integer: {line!r}", lineno) from None
    primes = np.asarray(values, dtype=np.int64)
    if len(primes) > 1 and np.any(np.diff(primes) <= 0):
        raise ParseError(f"{path}: primes are not strictly ascending")
    if covered is None:
        covered = int(primes[-1]) if len(primes) else 1
    return covered, primes


def write_prime_cache(path, table):
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(f"# cutoff={table.cutoff}\n")
        fh.write("\n".join(map(str, table.primes.tolist())))
        fh.write("\n")
    os.replace(tmp, path)


def sieve_primes(cutoff, *, cache_path=None, segment_threshold=SEGMENT_THRESHOLD,
                 max_cutoff=MAX_CUTOFF):
    """All primes ``<= cutoff`` with their natural logarithms.

    Uses a plain Eratosthenes bit array up to ``segment_threshold`` and a
    segmented sieve above it.  ``cache_path`` names an optional on-disk cache;
    a cache that covers the requested range is read instead of sieving, and a
    missing or too-small cache is (re)written.
    """
    if isinstance(cutoff, float):
        if not cutoff.is_integer():
            raise DomainError(f"cutoff must be an integer, got {cutoff}")
        cutoff = int(cutoff)
    if cutoff < 2:
        raise EmptyRangeError(f"no primes <= {cutoff}")
    if cutoff > max_cutoff:
        raise CapacityError(f"cutoff {cutoff} exceeds the configured ceiling {max_cutoff}")

    if cache_path is not None and Path(cache_path).exists():
        covered, primes = read_prime_cache(cache_path)
        if covered >= cutoff:
            log.debug("prime cache %s covers %d", cache_path, covered)
            primes = primes[primes <= cutoff]
            return PrimeTable.from_primes(cutoff, primes)

    table = _sieve_cached(int(cutoff), int(segment_threshold))
    if cache_path is not None:
        write_prime_cache(cache_path, table)
    return table


def default_cache_path():
    return os.environ.get(CACHE_ENV) or None


def build_ensemble(table, exponent):
    """Attach amplitudes ``p**-exponent`` to a prime table.

    Each weight comes from a single correctly-rounded ``pow`` call, which keeps
    ``weights[i] * primes[i]**exponent`` within an ulp or so of 1.
    """
    exponent = float(exponent)
    if not exponent > 0 or not math.isfinite(exponent):
        raise DomainError(f"weight exponent must be > 0, got {exponent}")
    weights = np.power(table.primes.astype(np.float64), -exponent)
    return WeightedEnsemble(table=table, exponent=exponent, weights=weights)
