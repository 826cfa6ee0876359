import math

import numpy as np
import pytest

from causenet.errors import ShapeError
from causenet.numerics import AdamState, adam_update, matmul, matrix_exponential, rng


def naive_matmul(a, b):
    """Triple-loop product oracle."""
    out = np.zeros((a.shape[0], b.shape[1]))
    for i in range(a.shape[0]):
        for j in range(b.shape[1]):
            for k in range(a.shape[1]):
                out[i, j] += a[i, k] * b[k, j]
    return out


def taylor_expm(m, terms=50):
    """Plain truncated Taylor series; independent of the scaling route."""
    out = np.eye(m.shape[0])
    term = np.eye(m.shape[0])
    for i in range(1, terms):
        term = term @ m / i
        out = out + term
    return out


class TestMatmul:
    def test_identity(self):
        a = rng(0).normal(size=(3, 3))
        assert np.array_equal(matmul(np.eye(3), a), a)

    def test_zero_annihilates(self):
        a = rng(1).normal(size=(3, 4))
        assert np.array_equal(matmul(a, np.zeros((4, 2))), np.zeros((3, 2)))

    def test_matches_triple_loop(self):
        g = rng(2)
        a, b = g.normal(size=(4, 3)), g.normal(size=(3, 2))
        assert np.allclose(matmul(a, b), naive_matmul(a, b), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeError):
            matmul(np.zeros((2, 3)), np.zeros((2, 3)))


class TestMatrixExponential:
    def test_exp_of_zero_is_identity(self):
        assert np.allclose(matrix_exponential(np.zeros((4, 4))), np.eye(4), atol=1e-15)

    def test_diagonal_case(self):
        m = np.diag([1.0, 1.0, 1.0])
        assert np.allclose(matrix_exponential(m), np.diag([math.e] * 3), atol=1e-12)

    def test_cosh_sinh_block(self):
        m = np.array([[0.0, 1.0], [1.0, 0.0]])
        expected = np.array(
            [[math.cosh(1.0), math.sinh(1.0)], [math.sinh(1.0), math.cosh(1.0)]]
        )
        result = matrix_exponential(m)
        assert np.allclose(result, expected, atol=1e-12)
        assert np.allclose(result, taylor_expm(m), atol=1e-12)

    def test_against_taylor_oracle_moderate_entries(self):
        # Result entries stay moderate; absolute error must be <= 1e-10.
        g = rng(3)
        for _ in range(10):
            n = int(g.integers(2, 7))
            m = g.uniform(-0.8, 0.8, size=(n, n))
            assert np.max(np.abs(matrix_exponential(m) - taylor_expm(m, 60))) <= 1e-10

    def test_nilpotent_equals_finite_series(self):
        g = rng(4)
        for _ in range(10):
            n = int(g.integers(2, 8))
            m = np.triu(g.uniform(-3, 3, size=(n, n)), k=1)
            result = matrix_exponential(m)
            assert np.allclose(np.diag(result), 1.0, atol=1e-10)
            # Nilpotency: the series terminates after n terms.
            assert np.allclose(result, taylor_expm(m, n), atol=1e-10)

    def test_trace_gradient_is_transpose(self):
        # d/dM trace(e^M) = (e^M)^T, checked by central differences.
        g = rng(5)
        m = g.uniform(-0.9, 0.9, size=(4, 4))
        analytic = matrix_exponential(m).T
        step = 1e-5
        for i in range(4):
            for k in range(4):
                up, down = m.copy(), m.copy()
                up[i, k] += step
                down[i, k] -= step
                fd = (np.trace(matrix_exponential(up)) - np.trace(matrix_exponential(down))) / (2 * step)
                assert abs(fd - analytic[i, k]) <= 1e-4 * max(1.0, abs(fd))

    def test_non_square_rejected(self):
        with pytest.raises(ShapeError):
            matrix_exponential(np.zeros((2, 3)))

    def test_deterministic(self):
        m = rng(6).normal(size=(5, 5))
        assert np.array_equal(matrix_exponential(m), matrix_exponential(m.copy()))


def scalar_adam(grads, lr=0.001, b1=0.9, b2=0.999, eps=1e-8, x0=1.0):
    """Reference scalar Adam trajectory."""
    x, m, v = x0, 0.0, 0.0
    xs = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        x = x - lr * m_hat / (math.sqrt(v_hat) + eps)
        xs.append(x)
    return xs


class TestAdam:
    def test_zero_gradient_keeps_param(self):
        state = AdamState()
        param = np.array([[1.0, -2.0], [0.5, 3.0]])
        for _ in range(5):
            param = adam_update(param, np.zeros_like(param), state)
        assert np.array_equal(param, [[1.0, -2.0], [0.5, 3.0]])
        assert state.step == 5

    def test_first_step_moves_by_learning_rate(self):
        state = AdamState(learning_rate=0.01)
        grad = np.array([[3.0, -0.2]])
        updated = adam_update(np.zeros((1, 2)), grad, state)
        # Bias correction makes m_hat/sqrt(v_hat) = sign(g) on step one.
        assert np.allclose(updated, -0.01 * np.sign(grad), atol=1e-8)

    def test_quadratic_matches_scalar_oracle(self):
        state = AdamState()
        x = np.array([[1.0]])
        mine = []
        oracle_grads = []
        x_oracle = 1.0
        for _ in range(100):
            grad = 2.0 * x  # f(x) = x^2
            x = adam_update(x, grad, state)
            mine.append(float(x[0, 0]))
        # Recompute with the scalar oracle using its own trajectory.
        x_o, m, v = 1.0, 0.0, 0.0
        oracle = []
        for t in range(1, 101):
            g = 2.0 * x_o
            m = 0.9 * m + 0.1 * g
            v = 0.999 * v + 0.001 * g * g
            x_o = x_o - 0.001 * (m / (1 - 0.9**t)) / (math.sqrt(v / (1 - 0.999**t)) + 1e-8)
            oracle.append(x_o)
        assert np.allclose(mine, oracle, atol=1e-12)
        # Past warm-up the iterate walks monotonically toward the minimum.
        tail = mine[5:]
        assert all(b <= a for a, b in zip(tail, tail[1:]))
        assert all(v >= 0 for v in tail)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            adam_update(np.zeros((2, 2)), np.zeros((2, 3)), AdamState())

    def test_state_shape_mismatch(self):
        state = AdamState()
        adam_update(np.zeros((2, 2)), np.ones((2, 2)), state)
        with pytest.raises(ShapeError):
            adam_update(np.zeros((3, 3)), np.ones((3, 3)), state)


def test_rng_is_deterministic():
    assert np.array_equal(rng(123).normal(size=10), rng(123).normal(size=10))
