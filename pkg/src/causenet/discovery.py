"""DAG extraction from a trained network, threshold sweeps, and the
iterative contestation loop.

Extraction orients each feature pair by comparing the two adjacency
entries and keeps an edge only when its weight also clears the threshold:

    edges(tau) = {(i, k) : w[i, k] > w[k, i] and w[i, k] > tau}

Ties produce no edge. A contest session repeatedly shows the extracted
graph to a reviser (a human behind the HTTP service, or a scripted one in
tests); threshold changes re-extract without retraining, edge cuts rebuild
the graph, re-inject it and retrain. Cut edges stay banned for the session's
lifetime: every later mask excludes them, so they can never reappear.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .data import Dataset, kfold_splits
from .errors import ConfigError, DomainError, RevisionError, SessionError
from .graphs import CausalGraph, Edge, break_cycles, is_acyclic
from .metrics import evaluate_fold
from .network import JointNetwork, compute_adjacency, init_network
from .numerics import derive_seed
from .training import TrainConfig, inject_graph, train_unconstrained, validation_split


@dataclass(frozen=True)
class ExtractionConfig:
    tau: float = 0.0
    repair_cycles: bool = True

    def __post_init__(self) -> None:
        if not np.isfinite(self.tau) or self.tau < 0:
            raise ConfigError(f"tau must be finite and >= 0, got {self.tau}")


def extract_edges(w: np.ndarray, tau: float) -> set[Edge]:
    """Raw edge set before any cycle repair."""
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    return {
        (i, k)
        for i in range(n)
        for k in range(n)
        if i != k and w[i, k] > w[k, i] and w[i, k] > tau
    }


def extract_dag(
    w: np.ndarray,
    config: ExtractionConfig,
    node_names: tuple[str, ...] = (),
) -> CausalGraph:
    """Threshold-and-orient extraction; optionally repairs residual cycles.

    Pairwise orientation already rules out 2-cycles; longer cycles can
    survive when the acyclicity loss has not fully converged, in which case
    the weakest edge of each detected cycle is dropped.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ConfigError(f"adjacency must be square, got {w.shape}")
    n = w.shape[0]
    edges = extract_edges(w, config.tau)
    if not is_acyclic(edges, n):
        if not config.repair_cycles:
            raise DomainError("extraction produced a cyclic graph and repair is disabled")
        edges = break_cycles({e: float(w[e]) for e in edges}, n)
    return CausalGraph(n, frozenset(edges), node_names)


def default_tau_grid(w: np.ndarray, points: int = 12) -> list[float]:
    """Log-spaced thresholds from 1e-3 up to the 90th percentile of the
    off-diagonal adjacency entries."""
    w = np.asarray(w, dtype=float)
    off = w[~np.eye(w.shape[0], dtype=bool)]
    top = float(np.percentile(off, 90))
    low = 1e-3
    if top <= low:
        top = low * 10
    return [float(t) for t in np.geomspace(low, top, points)]


@dataclass(frozen=True)
class SweepRow:
    tau: float
    edge_count: int
    metric_mean: float
    metric_std: float

    def to_json(self) -> dict:
        return {
            "tau": self.tau,
            "edge_count": self.edge_count,
            "metric_mean": self.metric_mean,
            "metric_std": self.metric_std,
        }


@dataclass(frozen=True)
class SweepReport:
    metric_name: str
    rows: tuple[SweepRow, ...]
    selected_tau: float
    adjacency: np.ndarray

    def to_json(self) -> dict:
        return {
            "metric_name": self.metric_name,
            "rows": [r.to_json() for r in self.rows],
            "selected_tau": self.selected_tau,
            "adjacency": [[float(v) for v in row] for row in self.adjacency],
        }


# Metric means are compared at reporting precision so that the edge-count
# tiebreak can actually fire; with raw float comparison two cross-validated
# means never tie and fold noise would decide the threshold.
METRIC_DECIMALS = 2


def select_tau(rows, metric_name: str) -> float:
    """Best predictive metric at reporting precision; fewest edges, then the
    largest threshold, break ties (standardized data keeps MSE near 1, so
    two decimals resolve real differences)."""
    if metric_name == "mse":
        best = min(rows, key=lambda r: (round(r.metric_mean, METRIC_DECIMALS), r.edge_count, -r.tau))
    else:
        best = min(rows, key=lambda r: (-round(r.metric_mean, METRIC_DECIMALS), r.edge_count, -r.tau))
    return best.tau


def threshold_sweep(
    data: Dataset,
    config: TrainConfig,
    tau_grid: list[float] | None = None,
    folds: int = 5,
    hidden_sizes: tuple[int, ...] | None = None,
) -> SweepReport:
    """Train unconstrained once, then score each threshold's DAG.

    For every tau the extracted DAG is re-injected into fresh networks under
    k-fold cross validation and the held-out predictive metric is averaged.
    Edge counts are non-increasing along the (ascending) grid because the
    extractions all read the same adjacency matrix.
    """
    if folds < 2:
        raise ConfigError("folds must be at least 2")
    if tau_grid is not None and len(tau_grid) == 0:
        raise ConfigError("tau grid must be non-empty")
    base_net = init_network(data.d, hidden_sizes=hidden_sizes, task=data.task, seed=config.seed)
    base = train_unconstrained(data, base_net, config)
    w = compute_adjacency(base.final_network)
    grid = sorted(tau_grid) if tau_grid is not None else default_tau_grid(w)
    splits = kfold_splits(data, folds, seed=derive_seed(config.seed, 11))
    metric_name = "auc" if data.task == "classification" else "mse"
    rows: list[SweepRow] = []
    for t_index, tau in enumerate(grid):
        dag = extract_dag(w, ExtractionConfig(tau=tau), data.column_names)
        scores = []
        for f_index, (train_idx, test_idx) in enumerate(splits):
            fold_seed = derive_seed(config.seed, 13, t_index, f_index)
            fold_net = init_network(data.d, hidden_sizes=hidden_sizes, task=data.task, seed=fold_seed)
            fold_config = replace(config, seed=fold_seed)
            result = inject_graph(data.subset(train_idx), fold_net, fold_config, dag)
            scores.append(evaluate_fold(result.final_network, data.subset(test_idx)))
        arr = np.asarray(scores)
        rows.append(
            SweepRow(
                tau=float(tau),
                edge_count=len(dag.edges),
                metric_mean=float(arr.mean()),
                metric_std=float(arr.std(ddof=1)) if arr.size > 1 else 0.0,
            )
        )
    return SweepReport(
        metric_name=metric_name,
        rows=tuple(rows),
        selected_tau=select_tau(rows, metric_name),
        adjacency=w,
    )


@dataclass(frozen=True)
class Revision:
    kind: str  # "set-tau" | "cut-edges" | "accept"
    tau: float | None = None
    removed_edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        if self.kind not in ("set-tau", "cut-edges", "accept"):
            raise RevisionError(f"unknown revision kind {self.kind!r}")
        object.__setattr__(self, "removed_edges", tuple(tuple(e) for e in self.removed_edges))
        if self.kind == "set-tau":
            if self.tau is None or not np.isfinite(self.tau) or self.tau < 0:
                raise RevisionError("set-tau revision needs a finite tau >= 0")
        if self.kind == "cut-edges" and not self.removed_edges:
            raise RevisionError("cut-edges revision needs at least one edge")

    @classmethod
    def from_json(cls, payload: dict) -> "Revision":
        return cls(
            kind=payload.get("kind", ""),
            tau=payload.get("tau"),
            removed_edges=tuple(tuple(e) for e in payload.get("edges", [])),
        )


@dataclass(frozen=True)
class HistoryRecord:
    revision: Revision | None
    injected_graph: CausalGraph | None
    extracted_graph: CausalGraph
    metrics: dict

    def to_json(self) -> dict:
        from .graphs import graph_to_json

        return {
            "revision": None
            if self.revision is None
            else {
                "kind": self.revision.kind,
                "tau": self.revision.tau,
                "edges": [list(e) for e in self.revision.removed_edges],
            },
            "injected_graph": None if self.injected_graph is None else graph_to_json(self.injected_graph),
            "extracted_graph": graph_to_json(self.extracted_graph),
            "metrics": self.metrics,
        }


@dataclass
class ContestSession:
    """Mutable state of one contestation loop."""

    session_id: str
    data: Dataset
    network: JointNetwork
    config: TrainConfig
    tau: float = 0.0
    contested: bool = True
    banned_edges: set[Edge] = field(default_factory=set)
    history: list[HistoryRecord] = field(default_factory=list)

    @property
    def current_graph(self) -> CausalGraph:
        return self.history[-1].extracted_graph

    @property
    def current_metrics(self) -> dict:
        return self.history[-1].metrics


def _session_metrics(session: ContestSession, graph: CausalGraph, validation_total: float | None) -> dict:
    _, val_idx = validation_split(session.data.n_rows, session.config)
    metric_name = "auc" if session.data.task == "classification" else "mse"
    score = evaluate_fold(session.network, session.data.subset(val_idx))
    metrics = {metric_name: float(score), "edges": len(graph.edges)}
    if validation_total is not None:
        metrics["validation_total"] = float(validation_total)
    return metrics


def _extract_current(session: ContestSession) -> CausalGraph:
    w = compute_adjacency(session.network)
    return extract_dag(w, ExtractionConfig(tau=session.tau), session.data.column_names)


def open_session(
    data: Dataset,
    net: JointNetwork,
    config: TrainConfig,
    tau: float = 0.0,
    session_id: str | None = None,
) -> ContestSession:
    """Start a contest session on the current network weights."""
    if data.n_columns != net.d + 1:
        raise ConfigError(f"dataset has {data.n_columns} columns, network expects {net.d + 1}")
    session = ContestSession(
        session_id=session_id or uuid.uuid4().hex,
        data=data,
        network=net.copy(),
        config=config,
        tau=tau,
    )
    graph = _extract_current(session)
    session.history.append(
        HistoryRecord(None, None, graph, _session_metrics(session, graph, None))
    )
    return session


def contest_step(session: ContestSession, revision: Revision) -> tuple[CausalGraph, dict]:
    """Apply one revision to an open session.

    set-tau re-extracts from the current weights without touching them;
    cut-edges removes edges from the shown graph, re-injects the revised
    graph and retrains; accept closes the session.
    """
    if not session.contested:
        raise SessionError(f"session {session.session_id} is already closed")
    if revision.kind == "accept":
        session.contested = False
        graph = session.current_graph
        metrics = dict(session.current_metrics)
        session.history.append(HistoryRecord(revision, None, graph, metrics))
        return graph, metrics

    if revision.kind == "set-tau":
        session.tau = float(revision.tau)
        graph = _extract_current(session)
        metrics = _session_metrics(session, graph, None)
        session.history.append(HistoryRecord(revision, None, graph, metrics))
        return graph, metrics

    # cut-edges
    shown = session.current_graph
    cuts = set(revision.removed_edges)
    missing = cuts - set(shown.edges)
    if missing:
        raise RevisionError(f"cannot cut edges not in the shown graph: {sorted(missing)}")
    # Rebind rather than mutate: concurrent readers see old or new, never half.
    session.banned_edges = session.banned_edges | cuts
    revised = shown.without_edges(cuts)
    result = inject_graph(session.data, session.network, session.config, revised)
    session.network = result.final_network
    graph = _extract_current(session)
    leaked = set(graph.edges) & session.banned_edges
    if leaked:  # masked entries are exactly zero, so this cannot happen
        raise SessionError(f"banned edges reappeared: {sorted(leaked)}")
    metrics = _session_metrics(session, graph, result.best_validation_loss)
    session.history.append(HistoryRecord(revision, revised, graph, metrics))
    return graph, metrics


Reviser = Callable[[CausalGraph, dict], Revision]


def contest_graph(
    data: Dataset,
    net: JointNetwork,
    config: TrainConfig,
    reviser: Reviser,
    tau: float = 0.0,
    max_rounds: int = 100,
) -> tuple[CausalGraph, JointNetwork]:
    """Drive a session with a revision source until it accepts."""
    session = open_session(data, net, config, tau=tau)
    for _ in range(max_rounds):
        if not session.contested:
            break
        try:
            revision = reviser(session.current_graph, session.current_metrics)
        except Exception as exc:
            error = SessionError(f"reviser failed: {exc}")
            error.session = session  # history preserved for inspection
            raise error from exc
        contest_step(session, revision)
    if session.contested:
        raise SessionError(f"reviser did not accept within {max_rounds} rounds")
    return session.current_graph, session.network
