"""Command-line entry point for the batch workflows.

Subcommands: train, inject, extract, sweep, synth, grid, eval, contest,
serve. Exit codes: 0 ok, 1 usage error, 2 data error, 3 internal error.
Flag values override config-file values, which override built-in defaults;
the resolved configuration lands in the run manifest next to the outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

try:  # stdlib from 3.11 on
    import tomllib
except ImportError:  # pragma: no cover
    tomllib = None

import numpy as np

from . import discovery, experiments
from .data import (
    Dataset,
    SyntheticSpec,
    load_csv,
    load_synthetic_bundle,
    save_synthetic_bundle,
    standardize,
)
from .errors import ConfigError, DomainError, IngestionError, RevisionError, SessionError, ShapeError
from .graphs import complete_partial_graph, graph_from_json, graph_to_json
from .manifest import RunManifest
from .metrics import evaluate_fold, two_sample_ttest
from .network import compute_adjacency, init_network, load_checkpoint, save_checkpoint
from .training import TrainConfig, inject_graph, train_unconstrained

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        raise SystemExit((EXIT_USAGE, message))


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if p.suffix == ".toml":
        if tomllib is None:
            raise ConfigError("TOML config files need Python >= 3.11; use JSON instead")
        with open(p, "rb") as fh:
            return tomllib.load(fh)
    with open(p, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _resolve_train_config(args) -> TrainConfig:
    base = _load_config_file(getattr(args, "config", None))
    merged = dict(base.get("train", base))
    for key, attr in [
        ("max_steps", "steps"),
        ("patience", "patience"),
        ("batch_size", "batch_size"),
        ("learning_rate", "learning_rate"),
        ("validation_fraction", "validation_fraction"),
        ("seed", "seed"),
        ("patience_unit", "patience_unit"),
    ]:
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value
    weights = dict(merged.get("loss_weights", {}))
    for key in ("eta", "beta", "lambda1"):
        value = getattr(args, key, None)
        if value is not None:
            weights[key] = value
    if weights:
        merged["loss_weights"] = weights
    return TrainConfig.from_json(merged)


def _load_dataset(args) -> Dataset:
    path = Path(args.data)
    if path.is_dir():
        data, _ = load_synthetic_bundle(path)
        return data
    target = getattr(args, "target", None)
    if target is None:
        with open(path, "r", encoding="utf-8") as fh:
            target = fh.readline().split(",")[0].strip()
    data = load_csv(path, target_column=target, task=getattr(args, "task", "regression"))
    return standardize(data)


def _add_train_flags(sub) -> None:
    sub.add_argument("--config", help="JSON or TOML config file")
    sub.add_argument("--steps", type=int, help="max gradient steps")
    sub.add_argument("--patience", type=int, help="early-stopping patience")
    sub.add_argument("--batch-size", dest="batch_size", type=int)
    sub.add_argument("--learning-rate", dest="learning_rate", type=float)
    sub.add_argument("--validation-fraction", dest="validation_fraction", type=float)
    sub.add_argument("--patience-unit", dest="patience_unit", choices=["epoch", "step"])
    sub.add_argument("--eta", type=float, help="structure loss weight")
    sub.add_argument("--beta", type=float, help="acyclicity weight")
    sub.add_argument("--lambda1", type=float, help="L1 weight")
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--hidden-sizes", dest="hidden_sizes", help="comma-separated hidden widths")


def _add_data_flags(sub) -> None:
    sub.add_argument("--data", required=True, help="CSV file or synthetic bundle directory")
    sub.add_argument("--target", help="target column name (CSV input)")
    sub.add_argument("--task", choices=["regression", "classification"], default="regression")


def _hidden_sizes(args) -> tuple[int, ...] | None:
    raw = getattr(args, "hidden_sizes", None)
    if raw is None:
        return None
    return tuple(int(v) for v in raw.split(","))


def _write_metrics_log(result, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in result.loss_trace:
            fh.write(json.dumps(record.to_json()) + "\n")


def _manifest(args, command: str, config: TrainConfig | None, artifacts: dict[str, str]) -> None:
    out = Path(getattr(args, "out", ".") or ".")
    directory = out if out.is_dir() else out.parent
    directory.mkdir(parents=True, exist_ok=True)
    seed = config.seed if config is not None else (getattr(args, "seed", 0) or 0)
    manifest = RunManifest(
        command=command,
        config={"train": config.to_json()} if config is not None else {k: getattr(args, k) for k in vars(args) if k != "func"},
        seed=seed,
        artifacts=artifacts,
    )
    manifest.write(directory / f"{command}.manifest.json")


def cmd_train(args) -> int:
    config = _resolve_train_config(args)
    data = _load_dataset(args)
    net = init_network(data.d, hidden_sizes=_hidden_sizes(args), task=data.task, seed=config.seed)
    result = train_unconstrained(data, net, config)
    out = Path(args.out)
    save_checkpoint(result.final_network, out)
    _write_metrics_log(result, out.with_suffix(".metrics.jsonl"))
    _manifest(args, "train", config, {"checkpoint": str(out)})
    print(f"trained {result.steps_taken} steps, best validation loss {result.best_validation_loss:.6f}")
    return EXIT_OK


def cmd_inject(args) -> int:
    config = _resolve_train_config(args)
    data = _load_dataset(args)
    if args.net:
        net = load_checkpoint(args.net)
    else:
        net = init_network(data.d, hidden_sizes=_hidden_sizes(args), task=data.task, seed=config.seed)
    if args.graph == "complete":
        graph = complete_partial_graph(data.n_columns, data.column_names)
    else:
        with open(args.graph, "r", encoding="utf-8") as fh:
            graph = graph_from_json(json.load(fh))
    result = inject_graph(data, net, config, graph)
    out = Path(args.out)
    save_checkpoint(result.final_network, out)
    _write_metrics_log(result, out.with_suffix(".metrics.jsonl"))
    _manifest(args, "inject", config, {"checkpoint": str(out)})
    print(f"injected, {result.steps_taken} steps, best validation loss {result.best_validation_loss:.6f}")
    return EXIT_OK


def cmd_extract(args) -> int:
    net = load_checkpoint(args.checkpoint)
    w = compute_adjacency(net)
    dag = discovery.extract_dag(
        w, discovery.ExtractionConfig(tau=args.tau, repair_cycles=not args.no_repair)
    )
    payload = graph_to_json(dag)
    payload["weights"] = [
        {"edge": [i, k], "w": float(w[i, k])} for i, k in sorted(dag.edges)
    ]
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
    _manifest(args, "extract", None, {"graph": str(out)})
    print(f"extracted {len(dag.edges)} edges at tau={args.tau}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _resolve_train_config(args)
    data = _load_dataset(args)
    grid = [float(t) for t in args.taus.split(",")] if args.taus else None
    report = discovery.threshold_sweep(
        data, config, tau_grid=grid, folds=args.folds, hidden_sizes=_hidden_sizes(args)
    )
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(report.to_json(), fh, indent=2)
    _manifest(args, "sweep", config, {"report": str(out)})
    print(f"selected tau={report.selected_tau:.6g} over {len(report.rows)} thresholds")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SyntheticSpec(
        node_count=args.nodes,
        edge_multiplier=args.edge_mult,
        sample_multiplier=args.sample_mult,
        noise_fraction=args.noise_frac,
        seed=args.seed if args.seed is not None else 0,
    )
    dataset, truth = save_synthetic_bundle(args.out, spec)
    _manifest(args, "synth", None, {"bundle": str(args.out)})
    print(f"wrote bundle: N={dataset.n_rows}, columns={dataset.n_columns}, true edges={len(truth.edges)}")
    return EXIT_OK


def cmd_grid(args) -> int:
    config = _resolve_train_config(args)
    spec = experiments.GridSpec(
        nodes=tuple(int(v) for v in args.nodes.split(",")),
        edge_mults=tuple(float(v) for v in args.edge_mult.split(",")),
        sample_mults=tuple(float(v) for v in args.sample_mult.split(",")),
        inject_fractions=tuple(float(v) for v in args.inject.split(",")),
        noise_fractions=tuple(float(v) for v in args.noise.split(",")),
        repeats=args.repeats,
    )
    outcomes = experiments.run_grid(spec, config, hidden_sizes=_hidden_sizes(args))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    experiments.write_report_csv(outcomes, out / "report.csv")
    experiments.write_summary_json(outcomes, out / "summary.json")
    _manifest(args, "grid", config, {"report": str(out / "report.csv"), "summary": str(out / "summary.json")})
    print(f"grid complete: {len(outcomes)} runs -> {out / 'report.csv'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.report:
        import csv as _csv

        with open(args.report, "r", encoding="utf-8") as fh:
            rows = list(_csv.DictReader(fh))
        metric = args.metric
        by_scenario: dict[str, list[float]] = {}
        for row in rows:
            if row["metric"] == metric:
                by_scenario.setdefault(row["scenario"], []).append(float(row["value"]))
        for scenario, values in sorted(by_scenario.items()):
            arr = np.asarray(values)
            print(f"{scenario}: mean={arr.mean():.6f} std={arr.std(ddof=1) if len(arr) > 1 else 0.0:.6f} n={len(arr)}")
        if args.compare:
            left, right = args.compare.split(",")
            result = two_sample_ttest(by_scenario[left], by_scenario[right])
            print(
                f"t-test {left} vs {right}: t={result.t_statistic:.4f} "
                f"p={result.p_value:.4f} df={result.degrees_of_freedom:.2f} ({result.variant})"
            )
        return EXIT_OK
    net = load_checkpoint(args.checkpoint)
    data = _load_dataset(args)
    score = evaluate_fold(net, data)
    name = "auc" if net.task == "classification" else "mse"
    print(f"{name}={score:.6f} on {data.n_rows} rows")
    return EXIT_OK


def cmd_contest(args) -> int:
    config = _resolve_train_config(args)
    data = _load_dataset(args)
    if args.net:
        net = load_checkpoint(args.net)
    else:
        base = init_network(data.d, hidden_sizes=_hidden_sizes(args), task=data.task, seed=config.seed)
        net = train_unconstrained(data, base, config).final_network
    with open(args.revisions, "r", encoding="utf-8") as fh:
        script = [discovery.Revision.from_json(r) for r in json.load(fh)]
    iterator = iter(script)

    def reviser(graph, metrics):
        return next(iterator)

    graph, final_net = discovery.contest_graph(data, net, config, reviser, tau=args.tau)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "final_graph.json", "w", encoding="utf-8") as fh:
        json.dump(graph_to_json(graph), fh, indent=2)
    save_checkpoint(final_net, out / "final_checkpoint.json")
    _manifest(args, "contest", config, {"graph": str(out / "final_graph.json")})
    print(f"contest finished with {len(graph.edges)} edges")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(frontend_dir=args.frontend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="causenet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="unconstrained training")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("inject", help="train with a causal graph injected")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--graph", required=True, help="graph JSON path or 'complete'")
    p.add_argument("--net", help="warm-start checkpoint")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_inject)

    p = sub.add_parser("extract", help="extract a DAG from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--no-repair", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("sweep", help="threshold optimisation via cross validation")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--taus", help="comma-separated thresholds (default: auto grid)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", help="generate a synthetic bundle")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--edge-mult", dest="edge_mult", type=float, default=1.0)
    p.add_argument("--sample-mult", dest="sample_mult", type=float, default=50.0)
    p.add_argument("--noise-frac", dest="noise_frac", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="bundle directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("grid", help="synthetic experiment grid")
    _add_train_flags(p)
    p.add_argument("--nodes", default="10")
    p.add_argument("--edge-mult", dest="edge_mult", default="1")
    p.add_argument("--sample-mult", dest="sample_mult", default="50")
    p.add_argument("--inject", default="0.2")
    p.add_argument("--noise", default="0")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("eval", help="metrics and t-tests")
    p.add_argument("--checkpoint")
    p.add_argument("--data")
    p.add_argument("--target")
    p.add_argument("--task", choices=["regression", "classification"], default="regression")
    p.add_argument("--report", help="grid report CSV to summarize")
    p.add_argument("--metric", default="mse")
    p.add_argument("--compare", help="scenarioA,scenarioB t-test on --report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("contest", help="scripted contestation loop")
    _add_data_flags(p)
    _add_train_flags(p)
    p.add_argument("--revisions", required=True, help="JSON list of revisions")
    p.add_argument("--net", help="checkpoint to start from (default: train first)")
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_contest)

    p = sub.add_parser("serve", help="start the contest HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--frontend", help="static frontend directory to mount")
    p.set_defaults(func=cmd_serve)

    return parser


def cli_dispatch(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, tuple):
            code, message = exc.code
            print(f"usage error: {message}", file=sys.stderr)
            return code
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, RevisionError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, IngestionError, ShapeError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SessionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - safety net
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> int:
    return cli_dispatch()


if __name__ == "__main__":
    sys.exit(main())
