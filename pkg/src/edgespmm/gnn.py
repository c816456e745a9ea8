"""GCN / GraphSage-mean inference on top of the sampled SpMM kernel."""
from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .engine import KernelStats, NormMode, TileConfig, spmm_sampled
from .graph import CsrMatrix, as_dense, read_dense, write_dense
from .sampler import SamplingStrategy

AGGREGATORS = ("sum", "mean")
ACTIVATIONS = ("relu", "none")


@dataclass(frozen=True, eq=False)
class LayerSpec:
    weight: np.ndarray
    aggregator: str = "sum"
    activation: str = "none"
    bias: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "weight", as_dense(self.weight, "weight"))
        if self.bias is not None:
            bias = np.asarray(self.bias, dtype=np.float32).reshape(-1)
            if bias.shape[0] != self.weight.shape[1]:
                raise ValueError(f"bias length {bias.shape[0]} != out_dim {self.weight.shape[1]}")
            object.__setattr__(self, "bias", bias)
        if self.aggregator not in AGGREGATORS:
            raise ValueError(f"aggregator must be one of {AGGREGATORS}, got {self.aggregator!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def in_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def out_dim(self) -> int:
        return self.weight.shape[1]


@dataclass(frozen=True)
class GnnModel:
    layers: tuple[LayerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a model needs at least one layer")
        for k in range(1, len(self.layers)):
            prev, cur = self.layers[k - 1], self.layers[k]
            if prev.out_dim != cur.in_dim:
                raise ValueError(f"layer {k} expects {cur.in_dim} inputs, "
                                 f"layer {k - 1} produces {prev.out_dim}")


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    graph: CsrMatrix
    features: np.ndarray
    labels: np.ndarray
    eval_mask: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", as_dense(self.features, "features"))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "eval_mask", np.unique(np.asarray(self.eval_mask, dtype=np.int64)))
        n = self.graph.n_rows
        if self.graph.n_cols != n:
            raise ValueError(f"graph must be square, got {self.graph.shape}")
        if self.features.shape[0] != n:
            raise ValueError(f"features has {self.features.shape[0]} rows, graph has {n} nodes")
        if self.labels.shape[0] != n:
            raise ValueError(f"labels has {self.labels.shape[0]} entries, graph has {n} nodes")
        if self.labels.size and self.labels.min() < 0:
            raise ValueError("labels must be non-negative")
        if self.eval_mask.size and (self.eval_mask.min() < 0 or self.eval_mask.max() >= n):
            raise ValueError("eval_mask refers to nodes outside the graph")


def norm_for(aggregator: str, mean_norm: NormMode = NormMode.ROW) -> NormMode:
    return mean_norm if aggregator == "mean" else NormMode.NONE


def gnn_layer(a: CsrMatrix, h, layer: LayerSpec, strategy: SamplingStrategy, tile: TileConfig,
              *, threads: int = 1, mean_norm: NormMode = NormMode.ROW,
              stats: KernelStats | None = None, spmm_times: list | None = None) -> np.ndarray:
    """activation(A_sampled @ (H @ W) + bias); the dense product runs first.

    ``spmm_times`` receives the wall time of the sparse product in nanoseconds.
    """
    h = as_dense(h, "h")
    if h.shape[1] != layer.in_dim:
        raise ValueError(f"h has {h.shape[1]} columns, weight expects {layer.in_dim}")
    hw = h @ layer.weight
    t0 = time.perf_counter_ns()
    out = spmm_sampled(a, hw, strategy, tile, norm_for(layer.aggregator, mean_norm),
                       threads=threads, stats=stats)
    if spmm_times is not None:
        spmm_times.append(time.perf_counter_ns() - t0)
    if layer.bias is not None:
        out += layer.bias
    if layer.activation == "relu":
        np.maximum(out, 0, out=out)
    return out


def forward(model: GnnModel, data: LabeledDataset, strategy: SamplingStrategy, tile: TileConfig,
            *, threads: int = 1, mean_norm: NormMode = NormMode.ROW,
            spmm_times: list | None = None) -> np.ndarray:
    """Logits for every node. ``spmm_times`` collects per-layer SpMM nanoseconds."""
    if data.features.shape[1] != model.layers[0].in_dim:
        raise ValueError(f"features have {data.features.shape[1]} columns, "
                         f"model expects {model.layers[0].in_dim}")
    h = data.features
    for layer in model.layers:
        h = gnn_layer(data.graph, h, layer, strategy, tile, threads=threads, mean_norm=mean_norm,
                      spmm_times=spmm_times)
    return h


def accuracy(logits, labels, eval_mask) -> float:
    """Masked argmax accuracy; ties go to the lowest class index."""
    logits = np.asarray(logits)
    labels = np.asarray(labels).reshape(-1)
    mask = np.asarray(eval_mask, dtype=np.int64).reshape(-1)
    if mask.size == 0:
        raise ValueError("eval_mask is empty")
    if logits.shape[0] != labels.shape[0]:
        raise ValueError(f"logits has {logits.shape[0]} rows, labels has {labels.shape[0]}")
    pred = np.argmax(logits[mask], axis=1)  # argmax returns the first maximum
    return float(np.mean(pred == labels[mask]))


# ---------------------------------------------------------------------------
# file formats

def load_model(manifest_path) -> GnnModel:
    """Read a JSON manifest; weight/bias paths are relative to the manifest."""
    manifest_path = Path(manifest_path)
    doc = json.loads(manifest_path.read_text())
    root = manifest_path.parent
    layers = []
    for k, spec in enumerate(doc["layers"]):
        try:
            weight = read_dense(root / spec["weight"])
            bias = read_dense(root / spec["bias"]).reshape(-1) if spec.get("bias") else None
            layers.append(LayerSpec(weight, spec.get("aggregator", "sum"),
                                    spec.get("activation", "none"), bias))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{manifest_path}: layer {k}: {exc}") from exc
    return GnnModel(layers)


def save_model(model: GnnModel, manifest_path) -> None:
    manifest_path = Path(manifest_path)
    root = manifest_path.parent
    stem = manifest_path.stem
    entries = []
    for k, layer in enumerate(model.layers):
        entry = {"weight": f"{stem}_w{k}.esmm", "aggregator": layer.aggregator,
                 "activation": layer.activation}
        write_dense(layer.weight, root / entry["weight"])
        if layer.bias is not None:
            entry["bias"] = f"{stem}_b{k}.esmm"
            write_dense(layer.bias.reshape(1, -1), root / entry["bias"])
        entries.append(entry)
    manifest_path.write_text(json.dumps({"layers": entries}, indent=2) + "\n")


def load_labels(path, n_nodes: int) -> np.ndarray:
    labels = np.full(n_nodes, -1, dtype=np.int64)
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].startswith("#"):
                continue
            if lineno == 1 and not row[0].strip().isdigit():
                continue  # header
            try:
                node, label = int(row[0]), int(row[1])
            except (ValueError, IndexError):
                raise ValueError(f"{path}:{lineno}: expected 'node_id,label', got {row!r}") from None
            if not 0 <= node < n_nodes:
                raise ValueError(f"{path}:{lineno}: node {node} outside [0, {n_nodes})")
            labels[node] = label
    return labels


def save_labels(labels: Sequence[int], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "label"])
        w.writerows(enumerate(int(x) for x in labels))


def load_mask(path) -> np.ndarray:
    ids = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            if not s.isdigit():
                raise ValueError(f"{path}:{lineno}: bad node id {s!r}")
            ids.append(int(s))
    return np.asarray(ids, dtype=np.int64)


def save_mask(mask, path) -> None:
    with open(path, "w") as fh:
        fh.write("".join(f"{int(i)}\n" for i in mask))


def load_dataset(graph: CsrMatrix, features_path, labels_path, mask_path) -> LabeledDataset:
    features = read_dense(features_path)
    labels = load_labels(labels_path, graph.n_rows)
    mask = load_mask(mask_path)
    missing = mask[labels[mask] < 0] if mask.size else mask
    if missing.size:
        raise ValueError(f"{labels_path}: no label for masked node {missing[0]}")
    labels = np.where(labels < 0, 0, labels)
    return LabeledDataset(graph, features, labels, mask)


def synthetic_task(graph: CsrMatrix, in_dim: int, hidden: int, n_classes: int, seed: int,
                   aggregator: str = "mean", eval_fraction: float = 0.5):
    """Random 2-layer model plus features; labels are the model's exact predictions.

    Exact inference scores 1.0 by construction, so any accuracy lost under
    sampling is attributable to the dropped edges.
    """
    rng = np.random.default_rng(seed)
    features = rng.standard_normal((graph.n_rows, in_dim), dtype=np.float32)
    model = GnnModel([
        LayerSpec(rng.standard_normal((in_dim, hidden), dtype=np.float32) / np.sqrt(in_dim),
                  aggregator, "relu", np.zeros(hidden, dtype=np.float32)),
        LayerSpec(rng.standard_normal((hidden, n_classes), dtype=np.float32) / np.sqrt(hidden),
                  aggregator, "none"),
    ])
    n_eval = max(1, int(round(eval_fraction * graph.n_rows)))
    mask = np.sort(rng.choice(graph.n_rows, size=n_eval, replace=False))
    placeholder = LabeledDataset(graph, features, np.zeros(graph.n_rows, np.int64), mask)
    logits = forward(model, placeholder, SamplingStrategy.exact(), TileConfig(0))
    labels = np.argmax(logits, axis=1)
    return model, LabeledDataset(graph, features, labels, mask)
