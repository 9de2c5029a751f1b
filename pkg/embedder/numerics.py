"""
Numerics - dense kernels, nonlinearities, seeded randomness, optimizers and
finite-difference gradient checks used by every trainable component
"""

import zlib
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np
from scipy.special import expit, softmax

from .errors import ShapeError, TrainingError

# Trainable state is always a flat name -> float64 array mapping
ParamSet = Dict[str, np.ndarray]


def as_dense(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array and reject NaN/Inf"""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ShapeError(f"{name}: expected a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ShapeError(f"{name}: contains non-finite values")
    return arr


def _require(cond: bool, op: str, a: np.ndarray, b: np.ndarray):
    if not cond:
        raise ShapeError(f"{op}: incompatible shapes {a.shape} and {b.shape}")


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _require(a.shape[-1] == b.shape[0], "matmul", a, b)
    return a @ b


def add(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _require(a.shape == b.shape, "add", a, b)
    return a + b


def hadamard(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _require(a.shape == b.shape, "hadamard", a, b)
    return a * b


def transpose(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a.T)


def concat_cols(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _require(a.shape[0] == b.shape[0], "concat_cols", a, b)
    return np.hstack([a, b])


def relu(a: np.ndarray) -> np.ndarray:
    return np.maximum(a, 0.0)


def sigmoid(a: np.ndarray) -> np.ndarray:
    return expit(a)


def row_softmax(a: np.ndarray) -> np.ndarray:
    return softmax(np.atleast_2d(a), axis=1)


def row_normalize(a: np.ndarray) -> np.ndarray:
    """Scale each row to sum 1; all-zero rows stay zero"""
    sums = a.sum(axis=1, keepdims=True)
    safe = np.where(sums == 0.0, 1.0, sums)
    return a / safe


# ===== RANDOMNESS =====

def _stream_key(key) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def make_rng(seed: int, *keys) -> np.random.Generator:
    """
    Build an independent Philox stream for (seed, *keys).

    Philox is counter based, so the same seed and keys give the same stream
    on every platform, and distinct keys never overlap.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(_stream_key(k) for k in keys))
    return np.random.Generator(np.random.Philox(seq))


# ===== GRADIENT CHECKING =====

def finite_difference_check(
    loss: Callable[[ParamSet], float],
    params: ParamSet,
    analytic: ParamSet,
    epsilon: float = 1e-5,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    floor: float = 1e-8,
) -> float:
    """
    Compare analytic gradients against central differences

    Args:
        loss: Deterministic scalar objective of the parameter set
        params: Point at which gradients are checked
        analytic: Analytic gradient for every entry of params
        epsilon: Central-difference step
        max_coords: If set, number of coordinates sampled per parameter
        rng: Generator used for coordinate sampling
        floor: Lower bound of the relative-error denominator

    Returns:
        Max over checked coordinates of |analytic - fd| / max(floor, |fd|)
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    rng = rng or make_rng(0, "fd-check")
    worst = 0.0

    for name, value in params.items():
        if name not in analytic:
            raise ShapeError(f"missing analytic gradient for '{name}'")
        grad = np.asarray(analytic[name], dtype=np.float64)
        _require(grad.shape == value.shape, f"gradient '{name}'", grad, value)

        coords = np.arange(value.size)
        if max_coords is not None and value.size > max_coords:
            coords = rng.choice(value.size, size=max_coords, replace=False)

        for flat in coords:
            shifted = {k: v.copy() for k, v in params.items()}
            shifted[name].flat[flat] = value.flat[flat] + epsilon
            upper = loss(shifted)
            shifted[name].flat[flat] = value.flat[flat] - epsilon
            lower = loss(shifted)
            if not (np.isfinite(upper) and np.isfinite(lower)):
                raise TrainingError("non-finite objective")

            central = (upper - lower) / (2.0 * epsilon)
            error = abs(grad.flat[flat] - central) / max(floor, abs(central))
            worst = max(worst, error)

    return worst


# ===== OPTIMIZERS =====

@dataclass
class Optimizer:
    """SGD or Adam over a ParamSet; state is owned by a single training loop"""

    kind: str = "adam"
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: ParamSet = field(default_factory=dict)
    second_moment: ParamSet = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer '{self.kind}'")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")

    def step(self, params: ParamSet, grads: ParamSet) -> ParamSet:
        """Return updated parameters; inputs are left untouched"""
        for name, value in params.items():
            _require(grads[name].shape == value.shape, f"step '{name}'", value, grads[name])

        self.step_count += 1
        if self.kind == "sgd":
            return {name: value - self.learning_rate * grads[name] for name, value in params.items()}

        updated = {}
        t = self.step_count
        for name, value in params.items():
            g = grads[name]
            m = self.beta1 * self.first_moment.get(name, np.zeros_like(value)) + (1.0 - self.beta1) * g
            v = self.beta2 * self.second_moment.get(name, np.zeros_like(value)) + (1.0 - self.beta2) * g * g
            self.first_moment[name] = m
            self.second_moment[name] = v
            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            updated[name] = value - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)
        return updated


def optimizer_step(opt: Optimizer, params: ParamSet, grads: ParamSet) -> ParamSet:
    return opt.step(params, grads)
