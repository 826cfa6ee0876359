"""Composite training objective: prediction loss plus a structure loss made
of feature reconstruction, an acyclicity penalty on the adjacency matrix,
and an L1 term on the adjacency entries; all with analytic gradients.

total = prediction + eta * (reconstruction + beta * acyclicity + lambda1 * l1)

The acyclicity penalty is trace(e^{W.W}) - (d+1) for the hollow nonnegative
adjacency W of input-weight group norms; it is zero exactly when W's support
is a DAG. Its gradient reaches the input weights through
d/d theta1[i,j,k] trace(e^S) = 2 * (e^S)[k,i] * theta1[i,j,k]
with S[i,k] = sum_j theta1[i,j,k]^2, so no square roots are involved. The L1
term is a group lasso on the same weight groups with subgradient 0 at zero
norm. Biases never appear in the structure terms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .network import JointNetwork, forward_pass, sigmoid
from .numerics import matrix_exponential

PROB_CLAMP = 1e-12


@dataclass(frozen=True)
class LossWeights:
    """Coefficients of the composite objective; all must be >= 0."""

    eta: float = 1.0
    beta: float = 1.0
    lambda1: float = 0.1

    def __post_init__(self) -> None:
        for name in ("eta", "beta", "lambda1"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise DomainError(f"loss weight {name} must be finite and >= 0, got {v}")


@dataclass(frozen=True)
class LossReport:
    prediction: float
    reconstruction: float
    acyclicity: float
    l1: float
    total: float

    def to_json(self) -> dict:
        return {
            "prediction": self.prediction,
            "reconstruction": self.reconstruction,
            "acyclicity": self.acyclicity,
            "l1": self.l1,
            "total": self.total,
        }


@dataclass
class LossGradients:
    """Gradients mirroring JointNetwork's parameter layout."""

    theta1: np.ndarray
    hidden_weights: list[np.ndarray]
    hidden_biases: list[np.ndarray]
    out_weights: np.ndarray
    out_biases: np.ndarray

    def parameters(self) -> list[tuple[str, np.ndarray]]:
        pairs: list[tuple[str, np.ndarray]] = [("theta1", self.theta1)]
        pairs += [(f"hidden_w{i}", w) for i, w in enumerate(self.hidden_weights)]
        pairs += [(f"hidden_b{i}", b) for i, b in enumerate(self.hidden_biases)]
        pairs += [("out_w", self.out_weights), ("out_b", self.out_biases)]
        return pairs


def prediction_loss(pred: np.ndarray, truth: np.ndarray, task: str) -> float:
    """MSE for regression, mean binary cross-entropy for classification."""
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    if pred.size == 0:
        raise DomainError("prediction loss of an empty batch")
    if pred.shape != truth.shape:
        raise ShapeError(f"prediction/truth length mismatch: {pred.shape} vs {truth.shape}")
    if task == "regression":
        return float(np.mean((pred - truth) ** 2))
    if task == "classification":
        p = np.clip(pred, PROB_CLAMP, 1.0 - PROB_CLAMP)
        return float(-np.mean(truth * np.log(p) + (1.0 - truth) * np.log(1.0 - p)))
    raise DomainError(f"unknown task {task!r}")


def reconstruction_loss(recon: np.ndarray, truth: np.ndarray) -> float:
    """Mean over sub-networks of the per-feature MSE."""
    recon = np.asarray(recon, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if recon.shape != truth.shape:
        raise ShapeError(f"reconstruction shape {recon.shape} != truth {truth.shape}")
    if recon.size == 0:
        raise DomainError("reconstruction loss of an empty batch")
    return float(np.mean((recon - truth) ** 2))


def acyclicity_penalty(w: np.ndarray) -> float:
    """trace(e^{W.W}) - n; zero exactly when W's support is acyclic."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ShapeError(f"adjacency must be square, got {w.shape}")
    e = matrix_exponential(w * w)
    return float(np.trace(e) - w.shape[0])


def l1_penalty(w: np.ndarray) -> float:
    """Sum of off-diagonal adjacency entries (already nonnegative norms)."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ShapeError(f"adjacency must be square, got {w.shape}")
    return float(w.sum() - np.trace(w))


def _output_report_and_grad(
    net: JointNetwork, batch: np.ndarray, outputs: np.ndarray, weights: LossWeights
) -> tuple[float, float, np.ndarray]:
    """Data-dependent loss pieces and d(loss)/d(outputs)."""
    n = batch.shape[0]
    width = batch.shape[1]
    d_out = np.zeros_like(outputs)
    truth_y = batch[:, 0]
    if net.task == "classification":
        p = sigmoid(outputs[:, 0])
        pred_value = prediction_loss(p, truth_y, net.task)
        # Exact for unclamped probabilities; the clamp only guards log(0).
        d_out[:, 0] += (p - truth_y) / n
    else:
        residual = outputs[:, 0] - truth_y
        pred_value = float(np.mean(residual**2))
        d_out[:, 0] += 2.0 * residual / n
    recon_err = outputs - batch
    recon_value = float(np.mean(recon_err**2))
    d_out += weights.eta * 2.0 * recon_err / (n * width)
    return pred_value, recon_value, d_out


def _backprop(net: JointNetwork, batch: np.ndarray, zs, acts, d_out) -> LossGradients:
    """Propagate d(loss)/d(outputs) back to every parameter tensor."""
    grads = LossGradients(
        theta1=np.zeros_like(net.theta1),
        hidden_weights=[np.zeros_like(w) for w in net.hidden_weights],
        hidden_biases=[np.zeros_like(b) for b in net.hidden_biases],
        out_weights=np.zeros_like(net.out_weights),
        out_biases=np.zeros_like(net.out_biases),
    )
    grads.out_weights = np.einsum("ngk,nk->gk", acts[-1], d_out)
    grads.out_biases = d_out.sum(axis=0)
    d_act = net.out_weights[None, :, :] * d_out[:, None, :]
    for layer in range(len(net.hidden_biases) - 1, 0, -1):
        d_z = d_act * (zs[layer] > 0)
        grads.hidden_weights[layer - 1] = np.einsum("nhk,ngk->hg", acts[layer - 1], d_z)
        grads.hidden_biases[layer] = d_z.sum(axis=(0, 2))
        d_act = np.einsum("hg,ngk->nhk", net.hidden_weights[layer - 1], d_z)
    d_z1 = d_act * (zs[0] > 0)
    grads.theta1 = np.einsum("ni,njk->ijk", batch, d_z1)
    grads.hidden_biases[0] = d_z1.sum(axis=(0, 2))
    return grads


def evaluate_loss(net: JointNetwork, batch: np.ndarray, weights: LossWeights) -> LossReport:
    """Loss components only, no gradients (validation/reporting path)."""
    batch = np.asarray(batch, dtype=float)
    _, _, outputs = forward_pass(net, batch)
    pred_value, recon_value, _ = _output_report_and_grad(net, batch, outputs, weights)
    s = np.einsum("ihk,ihk->ik", net.theta1, net.theta1)
    acyc_value = float(np.trace(matrix_exponential(s)) - s.shape[0])
    l1_value = l1_penalty(np.sqrt(s))
    total = pred_value + weights.eta * (recon_value + weights.beta * acyc_value + weights.lambda1 * l1_value)
    return LossReport(pred_value, recon_value, acyc_value, l1_value, total)


def total_loss(
    net: JointNetwork, batch: np.ndarray, weights: LossWeights
) -> tuple[LossReport, LossGradients]:
    """Composite loss with gradients for every unmasked parameter.

    Gradients of masked input-weight groups (including the diagonal) are
    zeroed so the optimizer can never write to them.
    """
    batch = np.asarray(batch, dtype=float)
    zs, acts, outputs = forward_pass(net, batch)
    pred_value, recon_value, d_out = _output_report_and_grad(net, batch, outputs, weights)
    grads = _backprop(net, batch, zs, acts, d_out)

    s = np.einsum("ihk,ihk->ik", net.theta1, net.theta1)
    e_s = matrix_exponential(s)
    acyc_value = float(np.trace(e_s) - s.shape[0])
    grads.theta1 += weights.eta * weights.beta * 2.0 * e_s.T[:, None, :] * net.theta1

    norms = np.sqrt(s)
    l1_value = l1_penalty(norms)
    safe = np.where(norms > 0.0, norms, 1.0)
    grads.theta1 += weights.eta * weights.lambda1 * net.theta1 / safe[:, None, :]

    grads.theta1 *= net.mask[:, None, :]

    total = pred_value + weights.eta * (recon_value + weights.beta * acyc_value + weights.lambda1 * l1_value)
    report = LossReport(pred_value, recon_value, acyc_value, l1_value, total)
    return report, grads


def mean_report(reports: list[LossReport]) -> LossReport:
    """Componentwise mean; the composition identity is linear so it holds."""
    if not reports:
        raise DomainError("cannot average an empty list of loss reports")
    arr = np.array([[r.prediction, r.reconstruction, r.acyclicity, r.l1, r.total] for r in reports])
    m = arr.mean(axis=0)
    return LossReport(*[float(v) for v in m])
