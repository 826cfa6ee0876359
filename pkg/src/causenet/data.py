"""Dataset ingestion, standardization, fold splitting and the synthetic
benchmark generator (random DAGs, nonlinear SEM sampling, noise features).

Column 0 is always the target. Synthetic data is drawn from
x_node = tanh(sum_parents c * x_parent) + eps with coefficients c uniform on
+/-[0.5, 2.0] and eps ~ N(0, 0.5^2); root nodes are standard normal. This
functional form is a documented stand-in: it is nonlinear with additive
Gaussian noise and recoverable at desk scale.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError, IngestionError
from .graphs import CausalGraph, graph_to_json
from .numerics import rng

logger = logging.getLogger(__name__)

SEM_COEF_RANGE = (0.5, 2.0)
SEM_NOISE_STD = 0.5


@dataclass(frozen=True)
class Standardization:
    """Per-column affine parameters (mean, std) used to standardize."""

    means: np.ndarray
    stds: np.ndarray


@dataclass(frozen=True)
class Dataset:
    """Immutable tabular dataset with the target in column 0."""

    values: np.ndarray
    column_names: tuple[str, ...]
    task: str
    standardization: Standardization | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if values.ndim != 2:
            raise DomainError("dataset values must be a 2-d matrix")
        if len(self.column_names) != values.shape[1]:
            raise DomainError("column_names length must match column count")
        if self.task not in ("regression", "classification"):
            raise DomainError(f"unknown task {self.task!r}")
        if self.task == "classification":
            target = values[:, 0]
            if not np.isin(target, (0.0, 1.0)).all():
                raise DomainError("classification target must be 0/1 valued")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_columns(self) -> int:
        return self.values.shape[1]

    @property
    def d(self) -> int:
        """Feature count excluding the target."""
        return self.values.shape[1] - 1

    def subset(self, indices: np.ndarray) -> "Dataset":
        return replace(self, values=self.values[np.asarray(indices, dtype=int)])


def load_csv(
    path: str | Path,
    target_column: str,
    task: str,
    mapping_path: str | Path | None = None,
) -> Dataset:
    """Load a headered numeric CSV, moving the target to column 0.

    Rows with empty cells are dropped (one warning with the count). A cell
    that is neither numeric nor covered by the optional sidecar label
    mapping raises an ingestion error with its coordinates.
    """
    path = Path(path)
    if not path.exists():
        raise IngestionError(f"no such file: {path}")
    mapping: dict[str, dict[str, float]] = {}
    if mapping_path is not None:
        with open(mapping_path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        mapping = {col: {str(k): float(v) for k, v in table.items()} for col, table in raw.items()}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise ConfigError(f"target column {target_column!r} not in header {header}")
        rows: list[list[float]] = []
        dropped = 0
        for row_number, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise IngestionError(f"{path}:{row_number}: expected {len(header)} cells, got {len(row)}")
            parsed: list[float] = []
            missing = False
            for col_name, cell in zip(header, row):
                cell = cell.strip()
                if cell == "" or cell.upper() in ("NA", "NAN"):
                    missing = True
                    break
                if col_name in mapping and cell in mapping[col_name]:
                    parsed.append(mapping[col_name][cell])
                    continue
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise IngestionError(
                        f"{path}:{row_number}: cannot parse cell {cell!r} in column {col_name!r}"
                    ) from None
            if missing:
                dropped += 1
                continue
            rows.append(parsed)
    if dropped:
        logger.warning("dropped %d row(s) with missing values from %s", dropped, path)
    if not rows:
        raise IngestionError(f"{path} contains no complete rows")
    matrix = np.array(rows, dtype=float)
    target_index = header.index(target_column)
    order = [target_index] + [i for i in range(len(header)) if i != target_index]
    matrix = matrix[:, order]
    names = tuple(header[i] for i in order)
    return Dataset(values=matrix, column_names=names, task=task)


def standardize(data: Dataset) -> Dataset:
    """Per-column affine transform to mean 0 and std 1.

    The target column of classification datasets keeps its 0/1 coding.
    Raises on zero-variance feature columns, naming the offender.
    """
    if data.n_rows < 2:
        raise DomainError("standardization needs at least two rows")
    values = data.values.copy()
    means = values.mean(axis=0)
    stds = values.std(axis=0)
    start = 1 if data.task == "classification" else 0
    for col in range(start, data.n_columns):
        if stds[col] == 0.0:
            raise DomainError(f"column {data.column_names[col]!r} has zero variance")
    if data.task == "classification":
        means[0], stds[0] = 0.0, 1.0
    values = (values - means) / stds
    return replace(
        data,
        values=values,
        standardization=Standardization(means=means, stds=stds),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Dimensions of one synthetic benchmark draw."""

    node_count: int
    edge_multiplier: float = 1.0
    sample_multiplier: float = 50.0
    noise_fraction: float = 0.0
    seed: int = 0

    @property
    def edge_count(self) -> int:
        return int(round(self.node_count * self.edge_multiplier))

    @property
    def sample_count(self) -> int:
        return int(round(self.node_count * self.sample_multiplier))

    def __post_init__(self) -> None:
        if self.node_count < 2:
            raise ConfigError("need at least two nodes")
        max_edges = self.node_count * (self.node_count - 1) // 2
        if self.edge_count > max_edges:
            raise ConfigError(
                f"{self.edge_count} edges cannot fit an acyclic graph on {self.node_count} nodes"
            )
        if self.edge_count < 1:
            raise ConfigError("need at least one edge so some node has a parent")
        if self.noise_fraction < 0:
            raise ConfigError("noise_fraction must be >= 0")


def _random_dag(generator: np.random.Generator, node_count: int, edge_count: int) -> set[tuple[int, int]]:
    """Uniform topological order, then a uniform sample of forward pairs."""
    order = generator.permutation(node_count)
    position = np.argsort(order)
    forward = [
        (int(i), int(k))
        for i in range(node_count)
        for k in range(node_count)
        if i != k and position[i] < position[k]
    ]
    chosen = generator.choice(len(forward), size=edge_count, replace=False)
    return {forward[int(c)] for c in chosen}


def generate_synthetic(spec: SyntheticSpec) -> tuple[Dataset, CausalGraph]:
    """Random DAG + SEM sample + optional disconnected noise columns.

    The target is drawn uniformly among nodes with at least one parent and
    relabeled to column 0; the returned true graph covers the causal nodes
    only (noise columns have no edges by construction). The dataset comes
    back already standardized.
    """
    g = rng(spec.seed)
    v = spec.node_count
    edges = _random_dag(g, v, spec.edge_count)
    n_rows = spec.sample_count

    parents: list[list[int]] = [[] for _ in range(v)]
    for i, k in sorted(edges):
        parents[k].append(i)
    coefs = {
        (i, k): float(g.uniform(*SEM_COEF_RANGE) * g.choice((-1.0, 1.0)))
        for k in range(v)
        for i in parents[k]
    }
    # Sample in topological order: parents always precede children.
    topo = _topological_order(edges, v)
    columns = np.zeros((n_rows, v))
    for node in topo:
        noise = g.normal(0.0, SEM_NOISE_STD if parents[node] else 1.0, size=n_rows)
        if parents[node]:
            drive = sum(coefs[(p, node)] * columns[:, p] for p in parents[node])
            columns[:, node] = np.tanh(drive) + noise
        else:
            columns[:, node] = noise

    with_parents = [k for k in range(v) if parents[k]]
    target = int(with_parents[int(g.integers(len(with_parents)))])

    # Relabel so the target owns index 0; other causal nodes shift up by one.
    relabel = {target: 0}
    for old in range(v):
        if old != target:
            relabel[old] = old + 1 if old < target else old
    causal_order = sorted(range(v), key=lambda old: relabel[old])
    columns = columns[:, causal_order]
    true_edges = frozenset((relabel[i], relabel[k]) for i, k in edges)

    noise_count = int(round(spec.noise_fraction * v))
    if noise_count:
        noise_cols = g.normal(0.0, 1.0, size=(n_rows, noise_count))
        columns = np.hstack([columns, noise_cols])

    names = ("Y",) + tuple(f"X{i}" for i in range(1, v)) + tuple(
        f"noise{j}" for j in range(1, noise_count + 1)
    )
    dataset = standardize(Dataset(values=columns, column_names=names, task="regression"))
    truth = CausalGraph(v, true_edges, names[:v])
    return dataset, truth


def _topological_order(edges: set[tuple[int, int]], node_count: int) -> list[int]:
    indegree = [0] * node_count
    children: list[list[int]] = [[] for _ in range(node_count)]
    for i, k in sorted(edges):
        indegree[k] += 1
        children[i].append(k)
    ready = [n for n in range(node_count) if indegree[n] == 0]
    order: list[int] = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        for child in children[node]:
            indegree[child] -= 1
            if indegree[child] == 0:
                ready.append(child)
    if len(order) != node_count:
        raise DomainError("edge set contains a cycle")
    return order


def sample_known_edges(g: CausalGraph, fraction: float, seed: int):
    """Partial graph for a random fraction of the true edges.

    Each sampled edge (i, j) becomes known: the reverse (j, i) is forbidden
    while (i, j) stays allowed. Every other ordered pair among the touched
    nodes is left allowed in both directions, and pairs touching other nodes
    are unconstrained.
    """
    from .graphs import PartialGraph

    if not 0 < fraction <= 1:
        raise DomainError(f"fraction must be in (0, 1], got {fraction}")
    edges = sorted(g.edges)
    count = int(len(edges) * fraction + 0.5)
    generator = rng(seed)
    picked_idx = generator.choice(len(edges), size=count, replace=False) if count else []
    picked = {edges[int(i)] for i in picked_idx}
    known = frozenset(n for e in picked for n in e)
    partial_edges = {
        (i, k)
        for i in known
        for k in known
        if i != k and (k, i) not in picked
    }
    return PartialGraph(g.node_count, known, frozenset(partial_edges), g.node_names)


def kfold_splits(data: Dataset, k: int, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Seeded shuffled k-fold partition; fold sizes differ by at most one."""
    if k < 2:
        raise ConfigError("k must be at least 2")
    if k > data.n_rows:
        raise ConfigError(f"k={k} exceeds the {data.n_rows} available rows")
    perm = rng(seed).permutation(data.n_rows)
    folds = np.array_split(perm, k)
    splits = []
    for f in range(k):
        test = folds[f]
        train = np.concatenate([folds[j] for j in range(k) if j != f])
        splits.append((train, test))
    return splits


def save_synthetic_bundle(directory: str | Path, spec: SyntheticSpec) -> tuple[Dataset, CausalGraph]:
    """Write data.csv, true_graph.json and spec.json into a directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    dataset, truth = generate_synthetic(spec)
    with open(directory / "data.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.column_names)
        for row in dataset.values:
            writer.writerow([repr(float(v)) for v in row])
    with open(directory / "true_graph.json", "w", encoding="utf-8") as fh:
        json.dump(graph_to_json(truth), fh, indent=2)
    with open(directory / "spec.json", "w", encoding="utf-8") as fh:
        json.dump(
            {
                "node_count": spec.node_count,
                "edge_multiplier": spec.edge_multiplier,
                "sample_multiplier": spec.sample_multiplier,
                "noise_fraction": spec.noise_fraction,
                "seed": spec.seed,
            },
            fh,
            indent=2,
        )
    return dataset, truth


def load_synthetic_bundle(directory: str | Path) -> tuple[Dataset, CausalGraph]:
    """Read back a bundle written by save_synthetic_bundle."""
    from .graphs import graph_from_json

    directory = Path(directory)
    with open(directory / "true_graph.json", "r", encoding="utf-8") as fh:
        truth = graph_from_json(json.load(fh))
    names = None
    with open(directory / "data.csv", "r", encoding="utf-8") as fh:
        names = next(csv.reader(fh))
    dataset = load_csv(directory / "data.csv", target_column=names[0], task="regression")
    return standardize(dataset), truth
