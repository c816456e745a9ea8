"""CSR adjacency matrices, dense matrix I/O and synthetic graph generation."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DENSE_MAGIC = b"ESMM"
DENSE_VERSION = 1


class CooIndexError(ValueError):
    """A coordinate triple points outside the declared matrix shape."""

    def __init__(self, index: int, triple: tuple, shape: tuple[int, int]):
        self.index = index
        self.triple = triple
        self.shape = shape
        super().__init__(f"triple #{index} {triple} out of range for shape {shape}")


class EdgeListError(ValueError):
    """Malformed edge-list file; ``line`` is 1-based."""

    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class Violation(NamedTuple):
    invariant: str
    row: int
    position: int
    message: str


def _frozen(arr, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True).reshape(-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Compressed sparse row matrix with float32 values.

    Arrays are copied and marked read-only on construction. Construction does
    not enforce the invariants; call :func:`validate` (or ``check``) for that.
    """

    n_rows: int
    n_cols: int
    row_ptr: np.ndarray
    col_ind: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n_rows", int(self.n_rows))
        object.__setattr__(self, "n_cols", int(self.n_cols))
        object.__setattr__(self, "row_ptr", _frozen(self.row_ptr, np.int64))
        object.__setattr__(self, "col_ind", _frozen(self.col_ind, np.int32))
        object.__setattr__(self, "values", _frozen(self.values, np.float32))

    @property
    def nnz(self) -> int:
        return int(self.col_ind.shape[0])

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def row_nnz(self) -> np.ndarray:
        return np.diff(self.row_ptr)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.row_ptr[i], self.row_ptr[i + 1]
        return self.col_ind[lo:hi], self.values[lo:hi]

    def check(self) -> "CsrMatrix":
        problems = validate(self)
        if problems:
            raise ValueError(f"invalid CSR matrix: {problems[0].message}"
                             + (f" (+{len(problems) - 1} more)" if len(problems) > 1 else ""))
        return self

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.float32)
        rows = np.repeat(np.arange(self.n_rows), self.row_nnz())
        np.add.at(out, (rows, self.col_ind), self.values)
        return out

    def to_scipy(self):
        import scipy.sparse as sp

        return sp.csr_matrix((self.values, self.col_ind, self.row_ptr), shape=self.shape)

    def transpose(self) -> "CsrMatrix":
        rows, cols, vals = to_coo(self)
        return from_arrays(self.n_cols, self.n_rows, cols, rows, vals)

    def __eq__(self, other):
        if not isinstance(other, CsrMatrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.row_ptr, other.row_ptr)
                and np.array_equal(self.col_ind, other.col_ind)
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"CsrMatrix(shape={self.shape}, nnz={self.nnz})"


def from_arrays(n_rows: int, n_cols: int, rows, cols, values=None) -> CsrMatrix:
    """Build a canonical CSR matrix from parallel COO arrays.

    Entries are sorted by (row, col); duplicates are summed in input order.
    """
    rows = np.asarray(rows, dtype=np.int64).reshape(-1)
    cols = np.asarray(cols, dtype=np.int64).reshape(-1)
    if values is None:
        values = np.ones(rows.shape[0], dtype=np.float32)
    values = np.asarray(values, dtype=np.float32).reshape(-1)
    if not (rows.shape == cols.shape == values.shape):
        raise ValueError("rows, cols and values must have equal length")
    bad = (rows < 0) | (rows >= n_rows) | (cols < 0) | (cols >= n_cols)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise CooIndexError(k, (int(rows[k]), int(cols[k]), float(values[k])), (n_rows, n_cols))

    order = np.lexsort((cols, rows))
    rows, cols, values = rows[order], cols[order], values[order]
    if rows.size:
        keys = rows * n_cols + cols
        starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
        values = np.add.reduceat(values, starts) if starts.size < keys.size else values
        rows, cols = rows[starts], cols[starts]
    counts = np.bincount(rows, minlength=n_rows)
    row_ptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=row_ptr[1:])
    return CsrMatrix(n_rows, n_cols, row_ptr, cols, values)


def from_coo(n_rows: int, n_cols: int, triples: Iterable[tuple[int, int, float]]) -> CsrMatrix:
    triples = list(triples)
    if not triples:
        return from_arrays(n_rows, n_cols, [], [], [])
    rows, cols, vals = zip(*triples)
    return from_arrays(n_rows, n_cols, rows, cols, vals)


def to_coo(m: CsrMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows = np.repeat(np.arange(m.n_rows, dtype=np.int64), m.row_nnz())
    return rows, m.col_ind.astype(np.int64), m.values.copy()


def validate(m: CsrMatrix) -> list[Violation]:
    """Return every violated CSR invariant; an empty list means ``m`` is valid."""
    out: list[Violation] = []
    rp, ci, vals = m.row_ptr, m.col_ind, m.values
    if rp.shape[0] != m.n_rows + 1:
        out.append(Violation("row_ptr_length", -1, rp.shape[0],
                             f"row_ptr has length {rp.shape[0]}, expected {m.n_rows + 1}"))
        return out
    if rp[0] != 0:
        out.append(Violation("row_ptr_start", 0, 0, f"row_ptr[0] = {rp[0]}, expected 0"))
    for i in np.flatnonzero(np.diff(rp) < 0):
        out.append(Violation("row_ptr_monotone", int(i), int(i + 1),
                             f"row_ptr decreases at row {i}: {rp[i]} > {rp[i + 1]}"))
    if rp[-1] != ci.shape[0] or ci.shape[0] != vals.shape[0]:
        out.append(Violation("nnz_length", m.n_rows, int(rp[-1]),
                             f"row_ptr[-1] = {rp[-1]}, len(col_ind) = {ci.shape[0]}, "
                             f"len(values) = {vals.shape[0]}"))
    if out:
        return out

    row_of = np.repeat(np.arange(m.n_rows), np.diff(rp))
    for k in np.flatnonzero((ci < 0) | (ci >= m.n_cols)):
        out.append(Violation("col_range", int(row_of[k]), int(k),
                             f"col_ind[{k}] = {ci[k]} outside [0, {m.n_cols})"))
    if ci.size > 1:
        same_row = row_of[1:] == row_of[:-1]
        for k in np.flatnonzero(same_row & (ci[1:] <= ci[:-1])):
            out.append(Violation("col_sorted", int(row_of[k]), int(k + 1),
                                 f"row {row_of[k]} columns not strictly increasing at {k + 1}"))
    return out


# ---------------------------------------------------------------------------
# edge lists

def _parse_edge_lines(path, lines: Sequence[str]):
    declared = None
    body_start = None
    edges_lines: list[int] = []
    tokens: list[str] = []
    for lineno, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if body_start is None:
            body_start = lineno
            if parts[0] == "n":
                if len(parts) != 2 or not parts[1].isdigit():
                    raise EdgeListError(path, lineno, f"bad node-count header {s!r}")
                declared = int(parts[1])
                continue
        if len(parts) != 2:
            raise EdgeListError(path, lineno, f"expected two indices, got {s!r}")
        tokens.extend(parts)
        edges_lines.append(lineno)
    try:
        arr = np.array(tokens, dtype=np.int64).reshape(-1, 2)
    except ValueError:
        for lineno, a, b in zip(edges_lines, tokens[0::2], tokens[1::2]):
            if not (a.isdigit() and b.isdigit()):
                raise EdgeListError(path, lineno, f"non-integer index in {a!r} {b!r}") from None
        raise
    neg = np.flatnonzero((arr < 0).any(axis=1))
    if neg.size:
        raise EdgeListError(path, edges_lines[neg[0]], "negative index")
    return declared, arr, np.asarray(edges_lines, dtype=np.int64)


def load_edge_list(path, n_nodes: int | None = None, symmetrize: bool = False,
                   add_self_loops: bool = False) -> CsrMatrix:
    """Read a whitespace-separated edge list into an unweighted adjacency matrix.

    An explicit ``n_nodes`` overrides a ``n <count>`` header; without either the
    count is inferred as max index + 1. Duplicate edges collapse to one entry.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    declared, edges, linenos = _parse_edge_lines(path, lines)
    n = n_nodes if n_nodes is not None else declared
    if n is None:
        n = int(edges.max()) + 1 if edges.size else 0
    if edges.size:
        over = np.flatnonzero((edges >= n).any(axis=1))
        if over.size:
            k = over[0]
            raise EdgeListError(path, int(linenos[k]),
                                f"index {edges[k].max()} >= declared n_nodes {n}")
    return load_edge_list_arrays(n, edges[:, 0], edges[:, 1], symmetrize, add_self_loops)


def _unweighted(n: int, src, dst) -> CsrMatrix:
    keys = np.unique(np.asarray(src, np.int64) * max(n, 1) + np.asarray(dst, np.int64))
    return from_arrays(n, n, keys // max(n, 1), keys % max(n, 1))


def write_edge_list(m: CsrMatrix, path) -> None:
    """Write the structure of ``m`` (values dropped) with an ``n`` header."""
    if m.n_rows != m.n_cols:
        raise ValueError(f"edge lists describe square adjacency matrices, got {m.shape}")
    rows, cols, _ = to_coo(m)
    with open(path, "w") as fh:
        fh.write(f"n {m.n_rows}\n")
        if rows.size:
            pairs = np.char.add(np.char.add(rows.astype(str), " "), cols.astype(str))
            fh.write("\n".join(pairs.tolist()))
            fh.write("\n")


def save_npz(m: CsrMatrix, path) -> None:
    np.savez(path, shape=np.array(m.shape, dtype=np.int64), row_ptr=m.row_ptr,
             col_ind=m.col_ind, values=m.values)


def load_npz(path) -> CsrMatrix:
    with np.load(path) as z:
        n_rows, n_cols = (int(x) for x in z["shape"])
        return CsrMatrix(n_rows, n_cols, z["row_ptr"], z["col_ind"], z["values"]).check()


def load_graph(path, symmetrize: bool = False, add_self_loops: bool = False) -> CsrMatrix:
    """Load ``.npz`` CSR archives or edge-list text, dispatching on suffix."""
    if str(path).endswith(".npz"):
        m = load_npz(path)
        if symmetrize or add_self_loops:
            rows, cols, _ = to_coo(m)
            return load_edge_list_arrays(m.n_rows, rows, cols, symmetrize, add_self_loops)
        return m
    return load_edge_list(path, symmetrize=symmetrize, add_self_loops=add_self_loops)


def load_edge_list_arrays(n: int, src, dst, symmetrize=False, add_self_loops=False) -> CsrMatrix:
    src, dst = np.asarray(src, np.int64), np.asarray(dst, np.int64)
    if symmetrize:
        src, dst = np.r_[src, dst], np.r_[dst, src]
    if add_self_loops:
        loop = np.arange(n, dtype=np.int64)
        src, dst = np.r_[src, loop], np.r_[dst, loop]
    return _unweighted(n, src, dst)


# ---------------------------------------------------------------------------
# dense matrices (row-major float32 ndarrays)

def as_dense(x, name: str = "matrix") -> np.ndarray:
    arr = np.ascontiguousarray(x, dtype=np.float32)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def write_dense(x, path) -> None:
    arr = as_dense(x)
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(DENSE_MAGIC)
        fh.write(struct.pack("<III", DENSE_VERSION, rows, cols))
        fh.write(arr.astype("<f4").tobytes())


def read_dense(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16 or head[:4] != DENSE_MAGIC:
            raise ValueError(f"{path}: not an ESMM dense file")
        version, rows, cols = struct.unpack("<III", head[4:])
        if version != DENSE_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        payload = fh.read()
    if len(payload) != rows * cols * 4:
        raise ValueError(f"{path}: expected {rows * cols * 4} payload bytes, got {len(payload)}")
    return np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(rows, cols)


# ---------------------------------------------------------------------------
# synthetic graphs

POWER_LAW_ALPHA = 1.5  # Pareto tail index; degree exponent 2.5


def _node_weights(kind: str, n: int, avg_degree: float, rng) -> np.ndarray:
    if kind == "erdos_renyi":
        return np.ones(n)
    if kind != "power_law":
        raise ValueError(f"unknown graph kind {kind!r}")
    w = (1.0 - rng.random(n)) ** (-1.0 / POWER_LAW_ALPHA)
    cap = max(n - 1, 1)
    for _ in range(20):
        w = np.minimum(w * (avg_degree / w.mean()), cap)
    return w


def gen_synthetic(kind: str, n_nodes: int, avg_degree: float, seed: int) -> CsrMatrix:
    """Symmetric, loop-free random graph with mean degree close to ``avg_degree``.

    ``erdos_renyi`` draws edge endpoints uniformly; ``power_law`` draws them in
    proportion to Pareto node weights (Chung-Lu style). Unique undirected edges
    are accepted in draw order until ``n_nodes * avg_degree`` stored entries.
    """
    if n_nodes < 1:
        raise ValueError("n_nodes must be >= 1")
    if avg_degree < 0:
        raise ValueError("avg_degree must be >= 0")
    if avg_degree >= n_nodes or avg_degree > n_nodes - 1:
        raise ValueError(f"avg_degree {avg_degree} infeasible for {n_nodes} nodes without self-loops")
    rng = np.random.default_rng(seed)
    w = _node_weights(kind, n_nodes, avg_degree, rng)
    p = w / w.sum()
    target = int(round(n_nodes * avg_degree / 2))

    seen = np.empty(0, dtype=np.int64)
    accepted: list[np.ndarray] = []
    have = 0
    batch = max(target, 16)
    for _ in range(200):
        if have >= target:
            break
        u = rng.choice(n_nodes, size=batch, p=p)
        v = rng.choice(n_nodes, size=batch, p=p)
        keep = u != v
        lo, hi = np.minimum(u[keep], v[keep]), np.maximum(u[keep], v[keep])
        keys = lo * n_nodes + hi
        _, first = np.unique(keys, return_index=True)
        keys = keys[np.sort(first)]
        keys = keys[~np.isin(keys, seen)]
        keys = keys[: target - have]
        accepted.append(keys)
        have += keys.size
        seen = np.union1d(seen, keys)
        batch = max(2 * (target - have), 16)
    keys = np.concatenate(accepted) if accepted else np.empty(0, dtype=np.int64)
    lo, hi = keys // n_nodes, keys % n_nodes
    return _unweighted(n_nodes, np.r_[lo, hi], np.r_[hi, lo])

