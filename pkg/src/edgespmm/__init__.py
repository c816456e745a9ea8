"""Cache-budgeted edge-sampled SpMM over CSR graphs, with a small GNN inference engine."""
from .engine import (BudgetError, KernelStats, NormMode, TileConfig, flop_count, spmm_exact,
                     spmm_sampled)
from .gnn import GnnModel, LabeledDataset, LayerSpec, accuracy, forward, gnn_layer
from .graph import (CsrMatrix, from_arrays, from_coo, gen_synthetic, load_edge_list, load_graph,
                    read_dense, to_coo, validate, write_dense)
from .sampler import (Kind, SamplingStrategy, fastrand_index, materialize_sampled, sample_row,
                      sampling_rate)

__version__ = "0.1.0"

__all__ = [
    "BudgetError", "CsrMatrix", "GnnModel", "KernelStats", "Kind", "LabeledDataset", "LayerSpec",
    "NormMode", "SamplingStrategy", "TileConfig", "accuracy", "fastrand_index", "flop_count",
    "forward", "from_arrays", "from_coo", "gen_synthetic", "gnn_layer", "load_edge_list",
    "load_graph", "materialize_sampled", "read_dense", "sample_row", "sampling_rate",
    "spmm_exact", "spmm_sampled", "to_coo", "validate", "write_dense",
]
