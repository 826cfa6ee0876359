"""Dense numeric kernels: matrix product, matrix exponential, Adam updates.

Everything operates on float64 numpy arrays. The matrix exponential is
computed by scaling-and-squaring over a fixed-order Taylor polynomial,
which is plenty accurate for the small square matrices this package
trains on (a few dozen rows at most).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError

# Taylor order 16 with the input scaled to 1-norm <= 0.5 keeps the
# truncation error near machine precision for moderate-magnitude outputs.
TAYLOR_ORDER = 16
SCALING_TARGET_NORM = 0.5


def rng(seed: int) -> np.random.Generator:
    """Seeded PCG64 generator; the single PRNG family used package-wide."""
    return np.random.Generator(np.random.PCG64(seed))


def derive_seed(base: int, *keys: int) -> int:
    """Stable child seed for (base, keys), for decorrelating folds/repeats."""
    return int(np.random.SeedSequence(base, spawn_key=keys).generate_state(1)[0])


def require_finite(a: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(a).all():
        raise DomainError(f"{what} contains non-finite values")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Standard matrix product with explicit shape validation."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def matrix_exponential(m: np.ndarray) -> np.ndarray:
    """e^M via scaling-and-squaring with an order-16 Taylor polynomial.

    M is scaled by 2^-s until its 1-norm is at most 0.5, the truncated
    series is evaluated with Horner's scheme, and the result is squared
    s times back up.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"matrix exponential needs a square matrix, got {m.shape}")
    require_finite(m, "matrix_exponential input")
    n = m.shape[0]
    norm = np.linalg.norm(m, 1)
    squarings = 0
    if norm > SCALING_TARGET_NORM:
        squarings = int(np.ceil(np.log2(norm / SCALING_TARGET_NORM)))
    scaled = m / (2.0**squarings)
    eye = np.eye(n)
    # Horner: result = I + A(I + A/2 (I + A/3 (...)))
    result = eye.copy()
    for i in range(TAYLOR_ORDER, 0, -1):
        result = eye + scaled @ result / i
    for _ in range(squarings):
        result = result @ result
    return require_finite(result, "matrix_exponential result")


@dataclass
class AdamState:
    """Per-parameter Adam accumulators; owned by exactly one training loop."""

    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: np.ndarray | None = None
    second_moment: np.ndarray | None = None


def adam_update(param: np.ndarray, grad: np.ndarray, state: AdamState) -> np.ndarray:
    """One Adam step with bias correction; advances `state` in place.

    Returns the updated parameter; the input array is not modified.
    """
    param = np.asarray(param, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if param.shape != grad.shape:
        raise ShapeError(f"parameter/gradient shapes differ: {param.shape} vs {grad.shape}")
    if state.first_moment is None:
        state.first_moment = np.zeros_like(param)
        state.second_moment = np.zeros_like(param)
    if state.first_moment.shape != param.shape:
        raise ShapeError(
            f"Adam state tracks shape {state.first_moment.shape}, got {param.shape}"
        )
    state.step += 1
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grad
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grad * grad
    m_hat = state.first_moment / (1.0 - state.beta1**state.step)
    v_hat = state.second_moment / (1.0 - state.beta2**state.step)
    updated = param - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return require_finite(updated, "adam_update result")
