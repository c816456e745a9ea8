"""Command-line front end: ``edgespmm {gen,analyze,spmm-bench,infer,sweep,verify}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .engine import NormMode, TileConfig
from .gnn import load_dataset, load_model, save_labels, save_mask, save_model, synthetic_task
from .graph import (gen_synthetic, load_edge_list_arrays, load_graph, save_npz, to_coo,
                    write_dense, write_edge_list)
from .sampler import DEFAULT_PRIME, Kind, SamplingStrategy

MEAN_NORM_LABEL = {NormMode.ROW: "sampled-count", NormMode.DEGREE: "original-degree"}


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _name_list(text: str) -> list[str]:
    names = [x for x in text.replace(",", " ").split()]
    for n in names:
        if n not in {k.value for k in Kind}:
            raise argparse.ArgumentTypeError(f"unknown strategy {n!r}")
    return names


def _shared(p: argparse.ArgumentParser, graph=True, strategy=True):
    if graph:
        p.add_argument("--graph", required=True, help="edge-list text or .npz CSR archive")
        p.add_argument("--symmetrize", action="store_true", help="add the reverse of every edge")
        p.add_argument("--self-loops", action="store_true", help="add (i, i) for every node")
    if strategy:
        p.add_argument("--strategy", choices=[k.value for k in Kind], default="bucket")
        p.add_argument("--s-width", type=int, default=32)
    p.add_argument("--prime", type=int, default=DEFAULT_PRIME)
    p.add_argument("--rows-per-block", type=int, default=4)
    p.add_argument("--budget-bytes", type=int, default=49152)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--repeats", type=int, default=bench.DEFAULT_REPEATS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path")


def _task_args(p: argparse.ArgumentParser):
    p.add_argument("--model", required=True, help="JSON model manifest")
    p.add_argument("--features", required=True, help="ESMM dense feature matrix")
    p.add_argument("--labels", required=True, help="CSV node_id,label")
    p.add_argument("--mask", required=True, help="evaluation node ids, one per line")
    p.add_argument("--mean-norm", choices=["sampled", "degree"], default="sampled",
                   help="divisor used by mean aggregation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgespmm",
                                     description="Cache-budgeted edge-sampled SpMM toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic graph (and optionally a task)")
    p.add_argument("--kind", choices=["erdos_renyi", "power_law"], default="power_law")
    p.add_argument("--n-nodes", type=int, required=True)
    p.add_argument("--avg-degree", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="graph path (.npz for binary, else edge list)")
    p.add_argument("--self-loops", action="store_true")
    p.add_argument("--task-dir", help="also write features, labels, mask and model here")
    p.add_argument("--in-dim", type=int, default=32)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--aggregator", choices=["sum", "mean"], default="mean")

    p = sub.add_parser("analyze", help="sampling rate for each S")
    _shared(p, strategy=False)
    p.add_argument("--s-list", type=_int_list, default=[16, 32, 64, 128, 256, 512])

    p = sub.add_parser("spmm-bench", help="time exact vs sampled SpMM")
    _shared(p)
    p.add_argument("--dense-cols", type=int, default=128)

    p = sub.add_parser("infer", help="run GNN inference and report accuracy")
    _shared(p)
    _task_args(p)

    p = sub.add_parser("sweep", help="inference over strategies x S, written as CSV")
    _shared(p, strategy=False)
    _task_args(p)
    p.add_argument("--strategies", type=_name_list, default=["bucket", "fastrand"])
    p.add_argument("--s-list", type=_int_list, default=[16, 32, 64, 128, 256, 512])

    p = sub.add_parser("verify", help="check the kernel against SpMM on the pre-sampled graph")
    _shared(p)
    p.add_argument("--dense-cols", type=int, default=32)
    return parser


def _strategy(args) -> SamplingStrategy:
    return SamplingStrategy(Kind(args.strategy), args.s_width if args.strategy != "exact" else 0,
                            args.prime)


def _tile(args, strategy: SamplingStrategy) -> TileConfig:
    return TileConfig.for_strategy(strategy, args.rows_per_block, args.budget_bytes)


def _graph(args):
    return load_graph(args.graph, symmetrize=args.symmetrize, add_self_loops=args.self_loops)


def _dataset_name(args) -> str:
    return Path(args.graph).stem


def cmd_gen(args) -> int:
    m = gen_synthetic(args.kind, args.n_nodes, args.avg_degree, args.seed)
    if args.self_loops:
        rows, cols, _ = to_coo(m)
        m = load_edge_list_arrays(m.n_rows, rows, cols, add_self_loops=True)
    if args.out.endswith(".npz"):
        save_npz(m, args.out)
    else:
        write_edge_list(m, args.out)
    deg = m.row_nnz()
    print(f"{args.kind}: {m.n_rows} nodes, {m.nnz} entries, mean degree {m.nnz / m.n_rows:.3f}, "
          f"max degree {int(deg.max()) if deg.size else 0} -> {args.out}")
    if args.task_dir:
        task = Path(args.task_dir)
        task.mkdir(parents=True, exist_ok=True)
        model, data = synthetic_task(m, args.in_dim, args.hidden, args.classes, args.seed,
                                     args.aggregator)
        write_dense(data.features, task / "features.esmm")
        save_labels(data.labels, task / "labels.csv")
        save_mask(data.eval_mask, task / "mask.txt")
        save_model(model, task / "model.json")
        print(f"task: features {data.features.shape}, {args.classes} classes, "
              f"{data.eval_mask.size} eval nodes -> {task}")
    return 0


def cmd_analyze(args) -> int:
    m = _graph(args)
    rows = bench.analyze(m, args.s_list)
    print(f"{'S':>6}  sampling_rate")
    for s, rate in rows:
        print(f"{s:>6}  {rate:.6f}  ({100 * rate:.1f}%)")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("s_width,sampling_rate\n")
            fh.writelines(f"{s},{rate!r}\n" for s, rate in rows)
    return 0


def cmd_spmm_bench(args) -> int:
    m = _graph(args)
    strategy = _strategy(args)
    rep = bench.spmm_bench(m, args.dense_cols, strategy, _tile(args, strategy),
                           repeats=args.repeats, threads=args.threads, seed=args.seed,
                           dataset=_dataset_name(args))
    r, st = rep.result, rep.stats
    print(f"graph {r.dataset}: {m.n_rows} rows, {m.nnz} nnz; dense cols {args.dense_cols}")
    print(f"strategy {strategy}  threads {args.threads}  repeats {args.repeats}")
    print(f"exact   {rep.exact_ms:10.3f} ms")
    print(f"sampled {r.spmm_ms:10.3f} ms  speedup {r.speedup_vs_exact:.3f}x")
    print(f"sampling rate {r.sampling_rate:.6f}  flop ratio {r.flop_ratio:.6f}")
    print(f"max abs diff vs exact {rep.max_abs_diff:.6g}")
    print(f"blocks {st.blocks}  peak scratch {st.peak_scratch_bytes} B  "
          f"max row iterations {st.max_row_iterations}  sampled nnz {st.sampled_nnz}")
    print(f"stage1 {st.stage1_ns / 1e6:.3f} ms  stage2 {st.stage2_ns / 1e6:.3f} ms")
    print(f"output digest {rep.output_digest}")
    if args.out:
        bench.write_results([r], args.out)
    return 0


def _load_task(args):
    m = _graph(args)
    model = load_model(args.model)
    data = load_dataset(m, args.features, args.labels, args.mask)
    mean_norm = NormMode.ROW if args.mean_norm == "sampled" else NormMode.DEGREE
    return model, data, mean_norm


def cmd_infer(args) -> int:
    model, data, mean_norm = _load_task(args)
    strategy = _strategy(args)
    rep = bench.infer(model, data, strategy, _tile(args, strategy), repeats=args.repeats,
                      threads=args.threads, mean_norm=mean_norm)
    exact = rep
    if strategy.kind is not Kind.EXACT:
        exact = bench.infer(model, data, SamplingStrategy.exact(), TileConfig(0, args.rows_per_block),
                            repeats=args.repeats, threads=args.threads, mean_norm=mean_norm)
    speedup = exact.spmm_ms / rep.spmm_ms if rep.spmm_ms else 1.0
    print(f"strategy {strategy}  mean normalization: {MEAN_NORM_LABEL[mean_norm]}")
    print(f"accuracy {rep.accuracy:.6f}  (exact {exact.accuracy:.6f})")
    for k, ms in enumerate(rep.layer_spmm_ms):
        print(f"layer {k} spmm {ms:.3f} ms")
    print(f"spmm {rep.spmm_ms:.3f} ms  speedup vs exact {speedup:.3f}x  total {rep.total_ms:.3f} ms")
    print(f"logits digest {rep.logits_digest}")
    if args.out:
        result = bench.SweepResult(_dataset_name(args), strategy.kind.value, strategy.s_width,
                                   bench.strategy_rate(data.graph, strategy),
                                   bench.flop_ratio(data.graph, strategy), rep.spmm_ms, speedup,
                                   rep.accuracy)
        bench.write_results([result], args.out)
    return 0


def cmd_sweep(args) -> int:
    if not args.out:
        raise ValueError("sweep needs --out")
    model, data, mean_norm = _load_task(args)
    rows = bench.sweep(model, data, args.strategies, args.s_list, prime=args.prime,
                       rows_per_block=args.rows_per_block, budget_bytes=args.budget_bytes,
                       repeats=args.repeats, threads=args.threads, mean_norm=mean_norm,
                       dataset=_dataset_name(args))
    print(f"mean normalization: {MEAN_NORM_LABEL[mean_norm]}")
    print(f"{'strategy':>9} {'S':>5} {'rate':>8} {'spmm ms':>9} {'speedup':>8} {'accuracy':>8}")
    for r in rows:
        print(f"{r.strategy:>9} {r.s_width:>5} {r.sampling_rate:8.4f} {r.spmm_ms:9.3f} "
              f"{r.speedup_vs_exact:8.3f} {r.accuracy:8.4f}")
    bench.write_results(rows, args.out)
    return 0


def cmd_verify(args) -> int:
    m = _graph(args)
    strategy = _strategy(args)
    rep = bench.verify(m, strategy, _tile(args, strategy), args.dense_cols, seed=args.seed,
                       threads=args.threads)
    print(f"strategy {strategy} on {m.n_rows} rows / {m.nnz} nnz")
    print(f"max relative diff (duplicate-free rows) {rep.max_rel_diff:.3g}  "
          f"bitwise equal {rep.bitwise_equal}")
    if rep.duplicate_rows:
        print(f"note: {rep.duplicate_rows} rows repeat FastRand positions "
              f"({rep.duplicate_slots} repeated slots); max relative diff there "
              f"{rep.max_rel_diff_duplicate_rows:.3g}")
    print(f"budget ok {rep.budget_ok} (peak scratch {rep.stats.peak_scratch_bytes} B, "
          f"budget {args.budget_bytes} B)")
    print(f"load balance ok {rep.load_balance_ok} "
          f"(max row iterations {rep.stats.max_row_iterations})")
    print(f"output digest {rep.output_digest}")
    print("PASS" if rep.passed else "FAIL")
    if args.out:
        doc = {k: v for k, v in vars(rep).items() if k != "stats"}
        doc["stats"] = vars(rep.stats)
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    return 0 if rep.passed else 1


COMMANDS = {"gen": cmd_gen, "analyze": cmd_analyze, "spmm-bench": cmd_spmm_bench,
            "infer": cmd_infer, "sweep": cmd_sweep, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "repeats", 1) < 1:
        print("error: --repeats must be >= 1", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
