"""Reference SpMM and the budgeted two-stage sampled SpMM.

Work is split into row blocks of ``rows_per_block`` rows. Each worker thread
owns one scratch buffer (values + column indices, ``rows_per_block * s_width``
slots each) for its whole lifetime and walks a contiguous range of blocks.
Every output element is accumulated sequentially in float32, so results do
not depend on the worker count or the block size.
"""
from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .graph import CsrMatrix, as_dense
from .sampler import Kind, SamplingStrategy

BYTES_PER_SLOT = 8  # float32 value + int32 column index
DEFAULT_ROWS_PER_BLOCK = 4
DEFAULT_BUDGET_BYTES = 49152


class BudgetError(ValueError):
    pass


class NormMode(str, enum.Enum):
    NONE = "none"
    ROW = "row"  # divide by the sampled count
    DEGREE = "degree"  # divide by the original row degree


_NORM_CODE = {NormMode.NONE: K.NORM_NONE, NormMode.ROW: K.NORM_SAMPLED, NormMode.DEGREE: K.NORM_DEGREE}


@dataclass(frozen=True)
class TileConfig:
    s_width: int
    rows_per_block: int = DEFAULT_ROWS_PER_BLOCK
    budget_bytes: int = DEFAULT_BUDGET_BYTES

    def __post_init__(self):
        if self.rows_per_block < 1:
            raise ValueError("rows_per_block must be >= 1")
        if self.s_width < 0:
            raise ValueError("s_width must be >= 0")
        if self.footprint > self.budget_bytes:
            raise BudgetError(
                f"scratch footprint {self.rows_per_block} x {self.s_width} x {BYTES_PER_SLOT}"
                f" = {self.footprint} bytes exceeds budget {self.budget_bytes}")

    @property
    def footprint(self) -> int:
        return self.rows_per_block * self.s_width * BYTES_PER_SLOT

    @classmethod
    def for_strategy(cls, strategy: SamplingStrategy, rows_per_block=DEFAULT_ROWS_PER_BLOCK,
                     budget_bytes=DEFAULT_BUDGET_BYTES) -> "TileConfig":
        return cls(strategy.s_width if strategy.kind is not Kind.EXACT else 0,
                   rows_per_block, budget_bytes)


@dataclass
class KernelStats:
    """Counters filled in by one SpMM call."""

    blocks: int = 0
    peak_scratch_bytes: int = 0
    sampled_nnz: int = 0
    max_row_iterations: int = 0
    stage1_ns: int = 0
    stage2_ns: int = 0
    elapsed_ns: int = 0
    workers: int = 1


def _check_shapes(a: CsrMatrix, b: np.ndarray):
    if a.n_cols != b.shape[0]:
        raise ValueError(f"dimension mismatch: A is {a.shape}, B is {b.shape}")


def _chunks(n_items: int, n_workers: int):
    n_workers = max(1, min(n_workers, n_items)) if n_items else 1
    edges = np.linspace(0, n_items, n_workers + 1).astype(np.int64)
    return [(int(edges[w]), int(edges[w + 1])) for w in range(n_workers)]


def _run(tasks, threads):
    if len(tasks) == 1:
        return [tasks[0]()]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda f: f(), tasks))


def spmm_exact(a: CsrMatrix, b, *, norm: NormMode = NormMode.NONE, threads: int = 1,
               stats: KernelStats | None = None) -> np.ndarray:
    """C = A @ B with each element summed in stored row order."""
    b = as_dense(b, "B")
    _check_shapes(a, b)
    norm = NormMode(norm)
    out = np.empty((a.n_rows, b.shape[1]), dtype=np.float32)
    counters = []

    def worker(r0, r1):
        acc = np.empty(b.shape[1], dtype=np.float32)
        st = np.zeros(3, dtype=np.int64)
        K.exact_rows(a.row_ptr, a.col_ind, a.values, b, out, r0, r1, _NORM_CODE[norm], acc, st)
        counters.append(st)

    chunks = _chunks(a.n_rows, threads)
    t0 = time.perf_counter_ns()
    _run([lambda r=r: worker(*r) for r in chunks], threads)
    if stats is not None:
        total = np.sum(counters, axis=0)
        stats.sampled_nnz = int(total[K.ST_SAMPLED])
        stats.max_row_iterations = int(max(c[K.ST_MAX_ITERS] for c in counters))
        stats.elapsed_ns = stats.stage2_ns = time.perf_counter_ns() - t0
        stats.workers = len(chunks)
    return out


def spmm_sampled(a: CsrMatrix, b, strategy: SamplingStrategy, tile: TileConfig,
                 norm: NormMode = NormMode.NONE, *, threads: int = 1,
                 stats: KernelStats | None = None) -> np.ndarray:
    """Edge-sampled SpMM: at most ``strategy.s_width`` entries per row contribute.

    With ``norm=ROW`` each output row is divided by its sampled count;
    ``norm=DEGREE`` divides by the original row degree instead. Exact strategy
    defers to :func:`spmm_exact` and needs no scratch.

    Passing ``stats`` fills it in. Stage timings come from an extra
    sampling-only pass: ``stage1_ns`` is that pass, ``stage2_ns`` the remainder
    of the full run.
    """
    b = as_dense(b, "B")
    _check_shapes(a, b)
    norm = NormMode(norm)
    if strategy.kind is Kind.EXACT:
        out = spmm_exact(a, b, norm=norm, threads=threads, stats=stats)
        if stats is not None:
            stats.blocks = -(-a.n_rows // tile.rows_per_block)
        return out
    if strategy.s_width > tile.s_width:
        raise BudgetError(f"strategy width {strategy.s_width} exceeds tile width {tile.s_width}")

    G, width = tile.rows_per_block, tile.s_width
    kind = K.BUCKET if strategy.kind is Kind.BUCKET else K.FASTRAND
    n_blocks = -(-a.n_rows // G)
    out = np.empty((a.n_rows, b.shape[1]), dtype=np.float32)
    chunks = _chunks(n_blocks, threads)

    def launch(compute):
        counters = []

        def worker(blk0, blk1):
            # allocated once per worker, reused by every block it runs
            sh_val = np.empty(G * width, dtype=np.float32)
            sh_col = np.empty(G * width, dtype=np.int32)
            counts = np.empty(G, dtype=np.int64)
            acc = np.empty(b.shape[1], dtype=np.float32)
            st = np.zeros(3, dtype=np.int64)
            K.sampled_blocks(a.row_ptr, a.col_ind, a.values, b, out, blk0, blk1, G, width,
                             strategy.s_width, kind, strategy.prime, _NORM_CODE[norm],
                             sh_val, sh_col, counts, acc, st, compute)
            counters.append((st, sh_val.nbytes + sh_col.nbytes))

        _run([lambda c=c: worker(*c) for c in chunks], threads)
        return counters

    if stats is None:
        launch(True)
        return out

    t0 = time.perf_counter_ns()
    launch(False)
    t1 = time.perf_counter_ns()
    counters = launch(True)
    t2 = time.perf_counter_ns()
    stats.stage1_ns = t1 - t0
    stats.elapsed_ns = t2 - t1
    stats.stage2_ns = max(stats.elapsed_ns - stats.stage1_ns, 0)
    stats.blocks = int(sum(st[K.ST_BLOCKS] for st, _ in counters))
    stats.sampled_nnz = int(sum(st[K.ST_SAMPLED] for st, _ in counters))
    stats.max_row_iterations = int(max(st[K.ST_MAX_ITERS] for st, _ in counters))
    stats.peak_scratch_bytes = int(max(nbytes for _, nbytes in counters))
    stats.workers = len(chunks)
    return out


def flop_count(a: CsrMatrix, strategy: SamplingStrategy, n_dense_cols: int) -> int:
    """Multiply-adds performed by the sampled kernel."""
    return int(np.sum(strategy.sampled_count(a.row_nnz()), dtype=np.int64)) * int(n_dense_cols)
