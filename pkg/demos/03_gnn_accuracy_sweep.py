"""Accuracy vs. speed of GraphSage-mean inference as the scratch width S shrinks.

Labels come from exact inference, so exact accuracy is 1.0 and any drop is
caused by the edges the kernel leaves out.

Run: python demos/03_gnn_accuracy_sweep.py
"""
from edgespmm import gen_synthetic, to_coo
from edgespmm.bench import sweep
from edgespmm.gnn import synthetic_task
from edgespmm.graph import load_edge_list_arrays

g = gen_synthetic("power_law", 20_000, 60.0, seed=5)
g = load_edge_list_arrays(g.n_rows, *to_coo(g)[:2], add_self_loops=True)
model, data = synthetic_task(g, in_dim=64, hidden=32, n_classes=8, seed=5)

rows = sweep(model, data, ["bucket", "fastrand"], [4, 8, 16, 32, 64, 128], repeats=3,
             dataset="power_law_20k")
print(f"{'strategy':>9} {'S':>4} {'edges kept':>10} {'speedup':>8} {'accuracy':>9}")
for r in rows:
    print(f"{r.strategy:>9} {r.s_width:>4} {100 * r.sampling_rate:9.1f}% "
          f"{r.speedup_vs_exact:7.2f}x {r.accuracy:9.4f}")

# %% The same sweep is available from the shell:
#   edgespmm gen --n-nodes 20000 --avg-degree 60 --self-loops --out g.npz --task-dir task
#   edgespmm sweep --graph g.npz --model task/model.json --features task/features.esmm \
#       --labels task/labels.csv --mask task/mask.txt --s-list 4,8,16,32,64,128 --out sweep.csv
