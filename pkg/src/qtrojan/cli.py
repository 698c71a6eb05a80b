"""``qtrojan`` command line: corpus, sweeps, datasets, training and reports.

Exit codes: 0 success, 1 usage error, 2 pipeline failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, cnn
from .dataset import (
    all_configs,
    build_dataset,
    config_by_name,
    enumerate_graphs,
    graph_id,
    graphs_with_n,
    load_dataset,
    read_graph,
    split,
    write_graph,
)
from .transpile import get_backend
from .trojan import (
    BENCHMARK_COLUMNS,
    BENCHMARK_GRAPHS,
    rows_to_csv,
    vulnerability_sweep,
    benchmark_degradation,
)

TABLE_HEADER = ("Backend", "Location", "Gate Type", "# of Gate", "Accuracy", "Precision", "Recall", "F1-Score")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _write_manifest(out: Path, args, outputs: list[Path], extra: dict | None = None) -> Path:
    manifest = {
        "command": args.command,
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command", "out")},
        "tool_version": __version__,
        "budget_unit": "cost-function evaluations",
        "outputs": sorted(str(p.relative_to(out)) if p.is_relative_to(out) else str(p) for p in outputs),
    }
    if extra:
        manifest.update(extra)
    if not args.no_timestamp:
        manifest["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    path = out / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True, default=str) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# Commands


def cmd_graphs(args) -> None:
    out = _out_dir(args)
    gdir = out / "graphs"
    gdir.mkdir(exist_ok=True)
    index = io.StringIO()
    w = csv.writer(index, lineterminator="\n")
    w.writerow(["circuit_id", "n", "m", "path"])
    outputs = []
    for g in enumerate_graphs():
        cid = graph_id(g)
        path = gdir / f"{cid}.txt"
        path.write_text(write_graph(g))
        w.writerow([cid, g.n, len(g.edges), f"graphs/{cid}.txt"])
        outputs.append(path)
    (out / "index.csv").write_text(index.getvalue())
    counts = {str(n): len(graphs_with_n(n)) for n in (3, 4, 5)}
    _write_manifest(out, args, [out / "index.csv"], {"counts": counts, "total": sum(counts.values())})
    print(f"wrote {len(outputs)} graphs to {gdir} ({counts})")


def cmd_sweep(args) -> None:
    out = _out_dir(args)
    g = read_graph(Path(args.graph_file).read_text())
    rows = vulnerability_sweep(g, get_backend(args.backend), args.budget, args.seed)
    csv_path = out / "sweep.csv"
    csv_path.write_text(rows_to_csv(rows))
    worst = max(range(len(rows)), key=lambda i: rows[i]["loss_pct"])
    r = rows[worst]
    flag = {"max_loss_row": worst, "max_loss_spec": f"{r['gate_type']}/{r['position']}/{r['path_kind']}",
            "max_loss_pct": r["loss_pct"]}
    _write_manifest(out, args, [csv_path], flag)
    print(rows_to_csv(rows), end="")
    print(f"max loss: row {worst} ({flag['max_loss_spec']}) {r['loss_pct']:.3f}%")


def cmd_benchmark(args) -> None:
    out = _out_dir(args)
    rows = benchmark_degradation(get_backend(args.backend), args.budget, args.seed)
    csv_path = out / "benchmark.csv"
    csv_path.write_text(rows_to_csv(rows, BENCHMARK_COLUMNS))
    graphs = {name: write_graph(g) for name, g in BENCHMARK_GRAPHS.items()}
    _write_manifest(out, args, [csv_path], {
        "benchmark_graphs": graphs,
        "max_loss_pct": max(r["loss_pct"] for r in rows),
    })
    print(rows_to_csv(rows, BENCHMARK_COLUMNS), end="")


def cmd_dataset(args) -> None:
    if not args.config:
        raise UsageError("--config is required")
    out = _out_dir(args)
    cfg = config_by_name(args.config, args.seed, args.budget)
    graphs = enumerate_graphs()
    if args.limit:
        graphs = graphs[: args.limit]
    ds = build_dataset(cfg, graphs)
    base = ds.save(out)
    _write_manifest(out, args, [base / "manifest.json", base / "features.bin"],
                    {"examples": len(ds.examples)})
    print(f"{cfg.name}: {len(ds.examples)} examples -> {base}")


def _splits(ds, seed: int):
    train, test = split(ds.examples, 0.8, seed)
    fit, val = split(train, 0.9, seed)
    return fit, val, test


def _xy(examples):
    return np.stack([e.features for e in examples]), np.array([e.label for e in examples])


def cmd_train(args) -> None:
    out = _out_dir(args)
    ds = load_dataset(args.dataset_dir)
    fit, val, _ = _splits(ds, args.seed)
    tcfg = cnn.TrainConfig(epochs=args.epochs, seed=args.seed)
    model, history = cnn.train(cnn.init_weights(args.seed), *_xy(fit), tcfg, *_xy(val))
    cnn.save_checkpoint(model, out / "model.qtnet")
    (out / "history.csv").write_text(cnn.history_csv(history))
    _write_manifest(out, args, [out / "model.qtnet", out / "history.csv"], {
        "dataset": ds.config.name,
        "train_config": asdict(tcfg),
        "split": {"train": len(fit), "validation": len(val), "test": len(ds.examples) - len(fit) - len(val)},
    })
    last = history[-1]
    print(f"epoch {last.epoch}: train_acc={last.train_acc:.4f} val_acc={last.val_acc:.4f}")


def table_row(cfg, metrics: dict) -> list[str]:
    backend = {"ideal": "Qasm", "linear5": "Linear5"}[cfg["backend"]]
    gate = {"X": "X", "H": "H", "RX": "Rx", "CX": "CX"}[cfg["gate_type"].upper()]
    pct = [f"{100 * metrics[k]:.2f}%" for k in ("accuracy", "precision", "recall", "f1")]
    return [backend, cfg["position"].capitalize(), gate, str(cfg["count"]), *pct]


def _md(rows: list[list[str]], header=TABLE_HEADER) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> None:
    out = _out_dir(args)
    ds = load_dataset(args.dataset_dir)
    _, _, test = _splits(ds, args.seed)
    model = cnn.load_checkpoint(args.model)
    metrics = cnn.evaluate(model, *_xy(test)).as_dict()
    cfg = {"name": ds.config.name, "backend": ds.config.backend, "position": ds.config.position,
           "gate_type": ds.config.gate_type, "count": ds.config.count}
    (out / "eval.json").write_text(json.dumps({"config": cfg, "metrics": metrics}, indent=1, sort_keys=True) + "\n")
    (out / "table_row.md").write_text(_md([table_row(cfg, metrics)]))
    _write_manifest(out, args, [out / "eval.json", out / "table_row.md"])
    print(_md([table_row(cfg, metrics)]), end="")


def cmd_report(args) -> None:
    root = Path(args.results_dir)
    found = {}
    for path in sorted(root.rglob("eval.json")):
        data = json.loads(path.read_text())
        found[data["config"]["name"]] = data
    order = [c.name for c in all_configs()]
    missing = [n for n in order if n not in found]
    if missing:
        raise FileNotFoundError(f"missing eval results for: {', '.join(missing)}")
    rows = [table_row(found[n]["config"], found[n]["metrics"]) for n in order]
    acc = [found[n]["metrics"]["accuracy"] for n in order]
    f1 = [found[n]["metrics"]["f1"] for n in order]
    avg = {"accuracy": float(np.mean(acc)), "f1": float(np.mean(f1))}
    by_backend = {
        b: float(np.mean([found[n]["metrics"]["accuracy"] for n in order if found[n]["config"]["backend"] == b]))
        for b in ("ideal", "linear5")
    }
    out = Path(args.out) if args.out else root
    out.mkdir(parents=True, exist_ok=True)
    text = _md(rows) + f"\nAverage accuracy: {100 * avg['accuracy']:.2f}%\nAverage F1-score: {100 * avg['f1']:.2f}%\n"
    (out / "results_table.md").write_text(text)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER)
    w.writerows(rows)
    (out / "results_table.csv").write_text(buf.getvalue())
    _write_manifest(out, args, [out / "results_table.md", out / "results_table.csv"],
                    {"average": avg, "average_accuracy_by_backend": by_backend})
    print(text, end="")


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--backend", choices=["ideal", "linear5"], default="ideal")
    common.add_argument("--budget", type=int, default=2500)
    common.add_argument("--out", default=None)
    common.add_argument("--config", default=None)
    common.add_argument("--no-timestamp", action="store_true")

    parser = _Parser(prog="qtrojan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("graphs", parents=[common], help="write the 813-graph corpus")
    p.set_defaults(func=cmd_graphs)

    p = sub.add_parser("sweep", parents=[common], help="Trojan position/gate-type AR-loss sweep")
    p.add_argument("graph_file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("benchmark", parents=[common], help="X-front AR loss on the benchmark graphs")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("dataset", parents=[common], help="build one of the 12 dataset configs")
    p.add_argument("--limit", type=int, default=None, help="use only the first N graphs")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", parents=[common], help="train TrojanNet on a built dataset")
    p.add_argument("dataset_dir")
    p.add_argument("--epochs", type=int, default=50)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint on a dataset's test split")
    p.add_argument("model")
    p.add_argument("dataset_dir")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", parents=[common], help="aggregate the 12 eval results into one table")
    p.add_argument("results_dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.out is None and args.command != "report":
        args.out = "."
    try:
        args.func(args)
    except UsageError as exc:
        print(f"qtrojan: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # any pipeline stage failing
        print(f"qtrojan: {args.command} failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
