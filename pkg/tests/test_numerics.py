import numpy as np
import pytest

from embedder.errors import ShapeError, TrainingError
from embedder.numerics import (
    Optimizer,
    as_dense,
    concat_cols,
    finite_difference_check,
    make_rng,
    matmul,
    optimizer_step,
    relu,
    row_normalize,
    row_softmax,
    sigmoid,
)


def test_primitives():
    assert sigmoid(np.array(0.0)) == 0.5
    assert relu(np.array(-3.5)) == 0.0
    assert relu(np.array(2.0)) == 2.0
    np.testing.assert_allclose(row_softmax(np.zeros((1, 3))), [[1 / 3, 1 / 3, 1 / 3]])


def test_row_softmax_rows_sum_to_one():
    a = make_rng(0, "softmax").normal(size=(5, 7)) * 50
    np.testing.assert_allclose(row_softmax(a).sum(axis=1), 1.0, atol=1e-12)


def test_row_normalize_keeps_zero_rows():
    out = row_normalize(np.array([[1.0, 3.0], [0.0, 0.0]]))
    np.testing.assert_array_equal(out, [[0.25, 0.75], [0.0, 0.0]])


def test_shape_errors_list_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        matmul(np.ones((2, 3)), np.ones((2, 3)))
    with pytest.raises(ShapeError):
        concat_cols(np.ones((2, 1)), np.ones((3, 1)))


def test_as_dense_rejects_non_finite():
    with pytest.raises(ShapeError):
        as_dense([[1.0, np.nan]])


def test_rng_streams_are_reproducible_and_independent():
    a = make_rng(7, "walks", 1).random(4)
    b = make_rng(7, "walks", 1).random(4)
    c = make_rng(7, "walks", 2).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


# ----- gradient checking -----

def test_fd_check_sum_of_squares():
    W = make_rng(0, "fd").normal(size=(3, 4))
    error = finite_difference_check(lambda p: float(np.sum(p["W"] ** 2)), {"W": W}, {"W": 2 * W})
    assert error < 1e-6


def test_fd_check_constant_loss():
    W = np.ones((2, 2))
    assert finite_difference_check(lambda p: 3.0, {"W": W}, {"W": np.zeros_like(W)}) == 0.0


def test_fd_check_detects_wrong_gradient():
    W = make_rng(1, "fd").normal(size=(3, 3)) + 2.0
    error = finite_difference_check(lambda p: float(np.sum(p["W"] ** 2)), {"W": W}, {"W": 4 * W})
    assert error == pytest.approx(1.0, rel=1e-4)


def test_fd_check_non_finite_objective():
    with pytest.raises(TrainingError, match="non-finite objective"):
        finite_difference_check(lambda p: float("nan"), {"W": np.ones((1, 1))}, {"W": np.zeros((1, 1))})


def test_fd_check_rejects_non_positive_epsilon():
    with pytest.raises(ValueError):
        finite_difference_check(lambda p: 0.0, {"W": np.ones((1, 1))}, {"W": np.zeros((1, 1))}, epsilon=0.0)


# ----- optimizers -----

def test_sgd_step():
    opt = Optimizer(kind="sgd", learning_rate=0.1)
    out = optimizer_step(opt, {"p": np.array([1.0])}, {"p": np.array([1.0])})
    assert out["p"][0] == pytest.approx(0.9)


def test_sgd_zero_gradient_is_identity():
    p = {"p": np.array([1.5, -2.0])}
    out = Optimizer(kind="sgd", learning_rate=0.5).step(p, {"p": np.zeros(2)})
    np.testing.assert_array_equal(out["p"], p["p"])


def test_adam_first_step_moves_by_learning_rate():
    out = Optimizer(kind="adam", learning_rate=0.01).step({"p": np.array([1.0])}, {"p": np.array([3.0])})
    assert out["p"][0] == pytest.approx(0.99, abs=1e-6)


def test_identical_runs_identical_trajectories():
    def run():
        rng = make_rng(3, "opt")
        params = {"w": rng.normal(size=4)}
        opt = Optimizer(kind="adam", learning_rate=0.05)
        for _ in range(20):
            params = opt.step(params, {"w": 2 * params["w"] - 1})
        return params["w"]

    assert run().tobytes() == run().tobytes()


def test_step_shape_mismatch():
    with pytest.raises(ShapeError):
        Optimizer(kind="sgd").step({"p": np.ones(2)}, {"p": np.ones(3)})
