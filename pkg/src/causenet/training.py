"""Graph injection and plain training: derive a mask from a causal graph,
apply it, then run mini-batch Adam with validation-based early stopping.

Unconstrained training is injection with the complete partial graph: the
two entry points share one code path, so their weight trajectories are
identical for identical seeds.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import ConfigError, DomainError
from .graphs import CausalGraph, PartialGraph, complete_partial_graph, mask_from_full, mask_from_partial
from .losses import LossReport, LossWeights, evaluate_loss, mean_report, total_loss
from .network import JointNetwork, apply_mask
from .numerics import AdamState, adam_update, derive_seed, rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    max_steps: int = 1000
    patience: int = 50
    batch_size: int = 32
    learning_rate: float = 0.001
    loss_weights: LossWeights = field(default_factory=LossWeights)
    validation_fraction: float = 0.2
    seed: int = 0
    patience_unit: str = "epoch"  # "epoch" or "step"

    def __post_init__(self) -> None:
        if self.patience >= self.max_steps:
            raise ConfigError(f"patience ({self.patience}) must be < max_steps ({self.max_steps})")
        if not 0 < self.validation_fraction < 1:
            raise ConfigError("validation_fraction must be strictly between 0 and 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.patience_unit not in ("epoch", "step"):
            raise ConfigError("patience_unit must be 'epoch' or 'step'")

    def to_json(self) -> dict:
        return {
            "max_steps": self.max_steps,
            "patience": self.patience,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "loss_weights": {
                "eta": self.loss_weights.eta,
                "beta": self.loss_weights.beta,
                "lambda1": self.loss_weights.lambda1,
            },
            "validation_fraction": self.validation_fraction,
            "seed": self.seed,
            "patience_unit": self.patience_unit,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "TrainConfig":
        payload = dict(payload)
        weights = payload.pop("loss_weights", None)
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown train config keys: {sorted(unknown)}")
        if weights is not None:
            payload["loss_weights"] = LossWeights(**weights)
        return cls(**payload)


@dataclass(frozen=True)
class EpochRecord:
    """One metrics-log line: global step, mean train losses, validation total."""

    step: int
    train: LossReport
    validation_total: float

    def to_json(self) -> dict:
        return {"step": self.step, "train": self.train.to_json(), "validation_total": self.validation_total}


@dataclass
class TrainResult:
    final_network: JointNetwork
    steps_taken: int
    best_validation_loss: float
    loss_trace: list[EpochRecord]


def validation_split(n_rows: int, config: TrainConfig) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle; the trailing validation_fraction of rows validate."""
    perm = rng(derive_seed(config.seed, 0)).permutation(n_rows)
    n_val = int(round(config.validation_fraction * n_rows))
    n_val = min(max(1, n_val), n_rows - 1)
    return perm[: n_rows - n_val], perm[n_rows - n_val :]


def _resolve_mask(net: JointNetwork, graph: CausalGraph | PartialGraph) -> np.ndarray:
    if graph.node_count != net.d + 1:
        raise ConfigError(
            f"graph covers {graph.node_count} nodes but the network has {net.d + 1}"
        )
    if isinstance(graph, CausalGraph):
        return mask_from_full(graph)
    return mask_from_partial(graph)


def inject_graph(
    data: Dataset,
    net: JointNetwork,
    config: TrainConfig,
    graph: CausalGraph | PartialGraph,
) -> TrainResult:
    """Mask the network with the graph's constraints, then train.

    Training touches only unmasked input-weight groups plus all shared and
    output parameters. It stops after max_steps mini-batch updates or once
    the validation loss has gone `patience` evaluations without improving,
    whichever comes first, and the best-validation weights are restored.
    Adam state starts fresh on every call, so re-injecting a trained network
    cannot leak momentum into newly masked entries.
    """
    if data.n_rows == 0:
        raise DomainError("cannot train on an empty dataset")
    if data.standardization is None:
        raise DomainError("dataset must be standardized before training")
    if data.n_columns != net.d + 1:
        raise ConfigError(f"dataset has {data.n_columns} columns, network expects {net.d + 1}")
    mask = _resolve_mask(net, graph)
    work = apply_mask(net, mask)
    weights = config.loss_weights

    train_idx, val_idx = validation_split(data.n_rows, config)
    train_rows = data.values[train_idx]
    val_rows = data.values[val_idx]

    states = {
        name: AdamState(learning_rate=config.learning_rate) for name, _ in work.parameters()
    }
    shuffler = rng(derive_seed(config.seed, 1))

    best_loss = np.inf
    best_weights: JointNetwork | None = None
    stale = 0
    steps = 0
    trace: list[EpochRecord] = []
    stop = False

    def evaluate() -> float:
        nonlocal best_loss, best_weights, stale, stop
        val_total = evaluate_loss(work, val_rows, weights).total
        if val_total < best_loss:
            best_loss = val_total
            best_weights = work.copy()
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                stop = True
        return val_total

    while steps < config.max_steps and not stop:
        order = shuffler.permutation(train_rows.shape[0])
        epoch_reports: list[LossReport] = []
        for start in range(0, len(order), config.batch_size):
            batch = train_rows[order[start : start + config.batch_size]]
            report, grads = total_loss(work, batch, weights)
            epoch_reports.append(report)
            grad_map = dict(grads.parameters())
            for name, param in work.parameters():
                work.set_parameter(name, adam_update(param, grad_map[name], states[name]))
            # Re-pin masked groups: Adam must never move them off zero.
            work.theta1 *= work.mask[:, None, :]
            steps += 1
            if config.patience_unit == "step":
                evaluate()
            if steps >= config.max_steps or stop:
                break
        if config.patience_unit == "epoch":
            val_total = evaluate()
        else:
            val_total = evaluate_loss(work, val_rows, weights).total
        trace.append(EpochRecord(step=steps, train=mean_report(epoch_reports), validation_total=val_total))

    if best_weights is None:
        evaluate()
    final = best_weights if best_weights is not None else work
    return TrainResult(
        final_network=final,
        steps_taken=steps,
        best_validation_loss=float(best_loss),
        loss_trace=trace,
    )


def train_unconstrained(data: Dataset, net: JointNetwork, config: TrainConfig) -> TrainResult:
    """Plain training: injection with the complete partial graph."""
    return inject_graph(data, net, config, complete_partial_graph(net.d + 1))
