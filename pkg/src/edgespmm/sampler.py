"""Per-row edge sampling: Exact, Bucket (stored prefix) and FastRand (prime hash)."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .graph import CsrMatrix, from_arrays

DEFAULT_PRIME = 577
MAX_PRIME = 2**31 - 1


class Kind(str, enum.Enum):
    EXACT = "exact"
    BUCKET = "bucket"
    FASTRAND = "fastrand"


@dataclass(frozen=True)
class SamplingStrategy:
    kind: Kind = Kind.EXACT
    s_width: int = 0
    prime: int = DEFAULT_PRIME

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.kind is not Kind.EXACT and self.s_width < 1:
            raise ValueError(f"{self.kind.value} sampling needs s_width >= 1, got {self.s_width}")
        if not 2 <= self.prime <= MAX_PRIME:
            raise ValueError(f"prime must be in [2, {MAX_PRIME}], got {self.prime}")

    @classmethod
    def exact(cls) -> "SamplingStrategy":
        return cls(Kind.EXACT)

    @classmethod
    def bucket(cls, s_width: int) -> "SamplingStrategy":
        return cls(Kind.BUCKET, s_width)

    @classmethod
    def fastrand(cls, s_width: int, prime: int = DEFAULT_PRIME) -> "SamplingStrategy":
        return cls(Kind.FASTRAND, s_width, prime)

    def sampled_count(self, row_nnz):
        """min(row_nnz, S), or row_nnz for Exact. Works on scalars and arrays."""
        if self.kind is Kind.EXACT:
            return row_nnz
        return np.minimum(row_nnz, self.s_width)

    def __str__(self):
        if self.kind is Kind.EXACT:
            return "exact"
        if self.kind is Kind.FASTRAND and self.prime != DEFAULT_PRIME:
            return f"fastrand(S={self.s_width}, P={self.prime})"
        return f"{self.kind.value}(S={self.s_width})"


def fastrand_index(shmem_idx: int, row_nnz: int, prime: int = DEFAULT_PRIME) -> int:
    if row_nnz < 1:
        raise ValueError("fastrand_index needs row_nnz >= 1; skip empty rows")
    # Python ints never overflow; reduce the prime first to mirror the kernel
    return (int(shmem_idx) * (int(prime) % int(row_nnz))) % int(row_nnz)


def fastrand_indices(slots, row_nnz, prime: int = DEFAULT_PRIME) -> np.ndarray:
    """Vectorised :func:`fastrand_index` in int64, exact for slots and row_nnz below 2**31."""
    slots = np.asarray(slots, dtype=np.int64)
    row_nnz = np.asarray(row_nnz, dtype=np.int64)
    if np.any(row_nnz < 1):
        raise ValueError("fastrand_indices needs row_nnz >= 1")
    return (slots * (prime % row_nnz)) % row_nnz


def sample_positions(row_nnz: int, strategy: SamplingStrategy) -> np.ndarray:
    """Offsets into a row of ``row_nnz`` stored entries, in buffer-slot order."""
    count = int(strategy.sampled_count(row_nnz))
    slots = np.arange(count, dtype=np.int64)
    if strategy.kind is Kind.FASTRAND and count:
        return fastrand_indices(slots, row_nnz, strategy.prime)
    return slots


def sample_row(m: CsrMatrix, row: int, strategy: SamplingStrategy):
    """Return ``(cols, values, sampled_count)`` for one row.

    FastRand may repeat a position when ``gcd(prime, row_nnz) > 1``; repeats
    are returned as-is.
    """
    if not 0 <= row < m.n_rows:
        raise IndexError(f"row {row} out of range for {m.n_rows} rows")
    lo, hi = int(m.row_ptr[row]), int(m.row_ptr[row + 1])
    pos = lo + sample_positions(hi - lo, strategy)
    return m.col_ind[pos], m.values[pos], int(pos.size)


def duplicate_slots(row_nnz: int, strategy: SamplingStrategy) -> int:
    """Number of buffer slots that repeat an earlier FastRand position."""
    if strategy.kind is not Kind.FASTRAND or row_nnz == 0:
        return 0
    pos = sample_positions(row_nnz, strategy)
    return int(pos.size - np.unique(pos).size)


def sampling_rate(m: CsrMatrix, s_width: int) -> float:
    """Fraction of stored entries kept when each row is truncated to ``s_width``."""
    if s_width < 1:
        raise ValueError("s_width must be >= 1")
    if m.nnz == 0:
        return 1.0
    kept = int(np.minimum(m.row_nnz(), s_width).sum())
    return kept / m.nnz


def materialize_sampled(m: CsrMatrix, strategy: SamplingStrategy) -> CsrMatrix:
    """Offline copy of the graph the kernel sees. Repeated FastRand positions are summed."""
    if strategy.kind is Kind.EXACT:
        return m
    nnz = m.row_nnz()
    counts = strategy.sampled_count(nnz)
    rows = np.repeat(np.arange(m.n_rows, dtype=np.int64), counts)
    starts = np.repeat(m.row_ptr[:-1], counts)
    slot = np.arange(rows.size, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    if strategy.kind is Kind.FASTRAND:
        slot = fastrand_indices(slot, np.repeat(nnz, counts), strategy.prime)
    pos = starts + slot
    return from_arrays(m.n_rows, m.n_cols, rows, m.col_ind[pos], m.values[pos])
