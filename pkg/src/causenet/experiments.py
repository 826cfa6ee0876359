"""Synthetic experiment grid: compare unconstrained training plus
extraction (the baseline) against partial-knowledge injection across graph
size, density, sample size and noise settings.

Per run both methods share the data and the network init seed; each
method's DAG is read off at the threshold minimizing edge mismatches
against the (known) true graph, and predictive MSE is measured on a
held-out split. Rows are emitted in a long format:
(scenario, nodes, edge_mult, sample_mult, inject_fraction, seed, metric, value).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset, SyntheticSpec, generate_synthetic, sample_known_edges
from .discovery import ExtractionConfig, extract_dag, extract_edges
from .errors import ConfigError
from .graphs import CausalGraph
from .metrics import edge_mismatches, mse, reconstruction_accuracy, two_sample_ttest
from .network import JointNetwork, compute_adjacency, forward, init_network
from .numerics import derive_seed, rng
from .training import TrainConfig, inject_graph, train_unconstrained

TEST_FRACTION = 0.2


@dataclass(frozen=True)
class GridSpec:
    nodes: tuple[int, ...] = (10,)
    edge_mults: tuple[float, ...] = (1.0,)
    sample_mults: tuple[float, ...] = (50.0,)
    inject_fractions: tuple[float, ...] = (0.2,)
    noise_fractions: tuple[float, ...] = (0.0,)
    repeats: int = 10

    def __post_init__(self) -> None:
        if self.repeats < 1:
            raise ConfigError("repeats must be positive")


@dataclass(frozen=True)
class RunOutcome:
    scenario: str
    nodes: int
    edge_mult: float
    sample_mult: float
    inject_fraction: float
    seed: int
    metrics: dict[str, float]


def _split_train_test(data: Dataset, seed: int) -> tuple[Dataset, Dataset]:
    perm = rng(derive_seed(seed, 91)).permutation(data.n_rows)
    n_test = max(1, int(round(TEST_FRACTION * data.n_rows)))
    return data.subset(perm[: data.n_rows - n_test]), data.subset(perm[data.n_rows - n_test :])


def _pad_truth(truth: CausalGraph, total_nodes: int, names: tuple[str, ...]) -> CausalGraph:
    """Extend the true graph with isolated noise nodes so mismatch counting
    penalizes spurious noise edges."""
    if truth.node_count == total_nodes:
        return truth
    return CausalGraph(total_nodes, truth.edges, names)


def best_tau_by_mismatches(w: np.ndarray, truth: CausalGraph, names: tuple[str, ...]) -> tuple[float, CausalGraph]:
    """The threshold whose extraction has the fewest edge mismatches.

    Mismatches (missing plus spurious edges against the true graph, with
    noise nodes counted as isolated) are scored on the raw thresholded edge
    sets; only the winning threshold's graph goes through cycle repair.
    """
    candidates = sorted({0.0} | {float(v) for v in w[~np.eye(w.shape[0], dtype=bool)] if v > 0})
    padded = _pad_truth(truth, w.shape[0], names)
    best: tuple[int, float] | None = None
    for tau in candidates:
        raw = extract_edges(w, tau)
        mism = len(raw ^ set(padded.edges))
        if best is None or mism < best[0]:
            best = (mism, tau)
    assert best is not None
    tau = best[1]
    return tau, extract_dag(w, ExtractionConfig(tau=tau), names)


def _causal_subgraph(dag: CausalGraph, causal_nodes: int, names: tuple[str, ...]) -> CausalGraph:
    """Restrict a graph over causal+noise columns to the causal block."""
    edges = frozenset((i, k) for i, k in dag.edges if i < causal_nodes and k < causal_nodes)
    return CausalGraph(causal_nodes, edges, names[:causal_nodes])


def evaluate_method(
    net: JointNetwork,
    test: Dataset,
    truth: CausalGraph,
    names: tuple[str, ...],
) -> dict[str, float]:
    w = compute_adjacency(net)
    tau, dag = best_tau_by_mismatches(w, truth, names)
    causal_dag = _causal_subgraph(dag, truth.node_count, names)
    pred, _ = forward(net, test.values)
    noise_edges = len(dag.edges) - len(causal_dag.edges)
    return {
        "mse": mse(pred, test.values[:, 0]),
        "reconstruction_accuracy": reconstruction_accuracy(causal_dag, truth),
        "edge_mismatches": float(edge_mismatches(causal_dag, truth) + noise_edges),
        "edges": float(len(dag.edges)),
        "selected_tau": tau,
    }


@dataclass(frozen=True)
class PreparedRun:
    """One synthetic draw with its train/test split and paired seeds."""

    data: Dataset
    truth: CausalGraph
    train: Dataset
    test: Dataset
    run_config: TrainConfig
    init_seed: int
    partial: object  # PartialGraph covering all columns

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.data.column_names


def prepare_run(
    nodes: int,
    edge_mult: float,
    sample_mult: float,
    inject_fraction: float,
    noise_fraction: float,
    repeat: int,
    config: TrainConfig,
) -> PreparedRun:
    data_seed = derive_seed(config.seed, nodes, int(edge_mult * 10), int(sample_mult * 10),
                            int(noise_fraction * 100), repeat)
    spec = SyntheticSpec(
        node_count=nodes,
        edge_multiplier=edge_mult,
        sample_multiplier=sample_mult,
        noise_fraction=noise_fraction,
        seed=data_seed,
    )
    data, truth = generate_synthetic(spec)
    train, test = _split_train_test(data, data_seed)
    partial = sample_known_edges(truth, inject_fraction, seed=derive_seed(data_seed, 9))
    if data.n_columns > truth.node_count:
        # Noise columns are unknown nodes: unconstrained by the partial graph.
        from .graphs import PartialGraph

        partial = PartialGraph(data.n_columns, partial.known_nodes, partial.edges, data.column_names)
    return PreparedRun(
        data=data,
        truth=truth,
        train=train,
        test=test,
        run_config=replace(config, seed=derive_seed(data_seed, 5)),
        init_seed=derive_seed(data_seed, 7),
        partial=partial,
    )


def train_scenario(prepared: PreparedRun, method: str, hidden_sizes: tuple[int, ...] | None = None) -> JointNetwork:
    """Train one method on a prepared run; both methods share the init seed."""
    net = init_network(
        prepared.data.d, hidden_sizes=hidden_sizes, task=prepared.data.task, seed=prepared.init_seed
    )
    if method == "castle_plus":
        return train_unconstrained(prepared.train, net, prepared.run_config).final_network
    if method == "injected":
        return inject_graph(prepared.train, net, prepared.run_config, prepared.partial).final_network
    raise ConfigError(f"unknown method {method!r}")


def run_single(
    nodes: int,
    edge_mult: float,
    sample_mult: float,
    inject_fraction: float,
    noise_fraction: float,
    repeat: int,
    config: TrainConfig,
    hidden_sizes: tuple[int, ...] | None = None,
) -> list[RunOutcome]:
    """One seed of baseline-vs-injected on a fresh synthetic draw."""
    prepared = prepare_run(nodes, edge_mult, sample_mult, inject_fraction, noise_fraction, repeat, config)
    suffix = "_noisy" if noise_fraction > 0 else ""
    outcomes = []
    for method, fraction in (("castle_plus", 0.0), ("injected", inject_fraction)):
        net = train_scenario(prepared, method, hidden_sizes)
        outcomes.append(
            RunOutcome(
                scenario=f"{method}{suffix}",
                nodes=nodes, edge_mult=edge_mult, sample_mult=sample_mult,
                inject_fraction=fraction, seed=repeat,
                metrics=evaluate_method(net, prepared.test, prepared.truth, prepared.column_names),
            )
        )
    return outcomes


def run_grid(spec: GridSpec, config: TrainConfig, hidden_sizes: tuple[int, ...] | None = None) -> list[RunOutcome]:
    outcomes: list[RunOutcome] = []
    for nodes in spec.nodes:
        for edge_mult in spec.edge_mults:
            for sample_mult in spec.sample_mults:
                for fraction in spec.inject_fractions:
                    for noise in spec.noise_fractions:
                        for repeat in range(spec.repeats):
                            outcomes.extend(
                                run_single(
                                    nodes, edge_mult, sample_mult, fraction, noise,
                                    repeat, config, hidden_sizes,
                                )
                            )
    return outcomes


def outcomes_to_rows(outcomes: list[RunOutcome]) -> list[tuple]:
    rows = []
    for o in outcomes:
        for metric, value in o.metrics.items():
            rows.append(
                (o.scenario, o.nodes, o.edge_mult, o.sample_mult, o.inject_fraction, o.seed, metric, value)
            )
    return rows


def write_report_csv(outcomes: list[RunOutcome], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["scenario", "nodes", "edge_mult", "sample_mult", "inject_fraction", "seed", "metric", "value"]
        )
        for row in outcomes_to_rows(outcomes):
            writer.writerow(row)


def summarize(outcomes: list[RunOutcome]) -> dict:
    """Per-setting means/stds plus injected-vs-baseline t-tests."""
    groups: dict[tuple, dict[str, list[float]]] = {}
    for o in outcomes:
        key = (o.scenario, o.nodes, o.edge_mult, o.sample_mult)
        for metric, value in o.metrics.items():
            groups.setdefault(key, {}).setdefault(metric, []).append(value)
    summary: dict[str, dict] = {}
    for (scenario, nodes, e, s), metrics in sorted(groups.items()):
        entry = {}
        for metric, values in sorted(metrics.items()):
            arr = np.asarray(values)
            entry[metric] = {
                "mean": float(arr.mean()),
                "std": float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
                "n": int(arr.size),
            }
        summary[f"{scenario}|V={nodes}|e={e}|s={s}"] = entry
    tests = {}
    for (scenario, nodes, e, s), metrics in sorted(groups.items()):
        if not scenario.startswith("injected"):
            continue
        baseline_key = (scenario.replace("injected", "castle_plus"), nodes, e, s)
        if baseline_key not in groups:
            continue
        for metric in ("mse", "reconstruction_accuracy"):
            if metric not in metrics or metric not in groups[baseline_key]:
                continue
            a = metrics[metric]
            b = groups[baseline_key][metric]
            if len(a) < 2 or len(b) < 2:
                continue
            r = two_sample_ttest(a, b)
            tests[f"{scenario}_vs_baseline|V={nodes}|e={e}|s={s}|{metric}"] = {
                "t": r.t_statistic,
                "p": r.p_value,
                "df": r.degrees_of_freedom,
                "variant": r.variant,
            }
    return {"groups": summary, "t_tests": tests}


def write_summary_json(outcomes: list[RunOutcome], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summarize(outcomes), fh, indent=2)
