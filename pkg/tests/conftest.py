import numpy as np
import pytest
from hypothesis import strategies as st

from edgespmm.graph import from_arrays

ACCEPTANCE = []


def random_csr(rng, n_rows, n_cols, density, positive=True):
    """Random canonical CSR matrix with roughly ``density * n_rows * n_cols`` entries."""
    nnz = int(round(density * n_rows * n_cols))
    rows = rng.integers(0, n_rows, nnz)
    cols = rng.integers(0, n_cols, nnz)
    vals = rng.random(nnz, dtype=np.float32) + np.float32(0.5) if positive \
        else rng.standard_normal(nnz, dtype=np.float32)
    return from_arrays(n_rows, n_cols, rows, cols, vals)


@st.composite
def csr_matrices(draw, max_dim=40):
    n_rows = draw(st.integers(1, max_dim))
    n_cols = draw(st.integers(1, max_dim))
    n = draw(st.integers(0, 3 * max_dim))
    rows = draw(st.lists(st.integers(0, n_rows - 1), min_size=n, max_size=n))
    cols = draw(st.lists(st.integers(0, n_cols - 1), min_size=n, max_size=n))
    vals = draw(st.lists(st.floats(0.25, 4.0, width=32), min_size=n, max_size=n))
    return from_arrays(n_rows, n_cols, rows, cols, vals)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
