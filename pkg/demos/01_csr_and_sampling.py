"""Build a CSR graph, look at what Bucket and FastRand keep, and how much.

Run: python demos/01_csr_and_sampling.py
"""
import numpy as np

from edgespmm import (SamplingStrategy, from_arrays, gen_synthetic, materialize_sampled,
                      sample_row, sampling_rate, validate)

# One row with ten neighbours, columns 10, 20, ..., 100.
row = from_arrays(1, 101, [0] * 10, range(10, 101, 10))
print("stored row:        ", row.col_ind.tolist())

# Bucket keeps a prefix of the stored row.
cols, _, n = sample_row(row, 0, SamplingStrategy.bucket(3))
print("bucket  S=3 keeps: ", cols.tolist())

# FastRand slot i reads position (i * 577) mod 10 -> 0, 7, 4.
cols, _, n = sample_row(row, 0, SamplingStrategy.fastrand(3))
print("fastrand S=3 keeps:", cols.tolist())

# %% Sampling rate of a heavy-tailed graph
g = gen_synthetic("power_law", 20_000, 40.0, seed=1)
deg = g.row_nnz()
print(f"\npower-law graph: {g.n_rows} nodes, {g.nnz} entries, "
      f"median degree {int(np.median(deg))}, max degree {deg.max()}")
for s in (16, 32, 64, 128, 256, 512):
    print(f"  S={s:<4d} keeps {100 * sampling_rate(g, s):5.1f}% of edges")

# %% The offline (pre-sampled) graph is a legal CSR matrix with exactly that many entries
sampled = materialize_sampled(g, SamplingStrategy.fastrand(32))
print(f"\nFastRand S=32 pre-sampled graph: {sampled.nnz} entries, violations: {validate(sampled)}")
