"""
Complex Pooling - attention-weighted sum of simplex embeddings into a single
complex-level vector, trained against a distance matrix or with triplets
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ShapeError, TrainingError
from .numerics import Optimizer, as_dense, make_rng, relu, sigmoid

MODES = ("stress", "triplet")
WEIGHT_EPS = np.finfo(np.float64).eps


@dataclass
class ComplexEmbedding:
    """h_X together with the weights that produced it"""

    vector: np.ndarray
    weights: np.ndarray
    name: Optional[str] = None
    label: Optional[str] = None


@dataclass
class PoolingModel:
    W: np.ndarray
    mode: str = "stress"
    margin: float = 1.0

    def __post_init__(self):
        if self.W.ndim != 2 or self.W.shape[0] != self.W.shape[1]:
            raise ShapeError(f"pooling matrix must be square, got {self.W.shape}")
        if self.mode not in MODES:
            raise ConfigError(f"unknown pooling mode '{self.mode}'")
        if self.margin < 0:
            raise ConfigError("margin must be non-negative")


def _check_width(U: np.ndarray, W: np.ndarray):
    if U.shape[0] == 0:
        raise ShapeError("cannot pool an empty embedding table")
    if U.shape[1] != W.shape[0] or W.shape[0] != W.shape[1]:
        raise ShapeError(f"width mismatch: U_X {U.shape} vs W {W.shape}")


def attention_weights(U: np.ndarray, W: np.ndarray) -> np.ndarray:
    """w_m = σ(z_m^T relu(W Σ_n z_n)), one weight per row of U, each in (0, 1)"""
    return _attention(U, W)[1]


def _attention(U: np.ndarray, W: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    _check_width(U, W)
    pre = W @ U.sum(axis=0)
    # float64 sigmoid rounds to exactly 1 once a logit passes ~37
    weights = np.clip(sigmoid(U @ relu(pre)), WEIGHT_EPS, 1.0 - WEIGHT_EPS)
    return pre, weights


def pool(U: np.ndarray, W: np.ndarray, name: Optional[str] = None, label: Optional[str] = None) -> ComplexEmbedding:
    weights = attention_weights(U, W)
    return ComplexEmbedding(vector=U.T @ weights, weights=weights, name=name, label=label)


def pool_backward(U: np.ndarray, W: np.ndarray, d_h: np.ndarray) -> np.ndarray:
    """Gradient with respect to W of <d_h, h_X(U; W)>"""
    pre, weights = _attention(U, W)
    d_logit = (U @ d_h) * weights * (1.0 - weights)
    d_pre = (U.T @ d_logit) * (pre > 0)
    return np.outer(d_pre, U.sum(axis=0))


# ===== OBJECTIVES =====

def validate_distance_matrix(D: np.ndarray, size: Optional[int] = None) -> np.ndarray:
    D = as_dense(D, "distance matrix")
    if D.shape[0] != D.shape[1]:
        raise ShapeError(f"distance matrix must be square, got {D.shape}")
    if size is not None and D.shape[0] != size:
        raise ShapeError(f"distance matrix is {D.shape}, dataset has {size} complexes")
    if not np.array_equal(D, D.T):
        raise ShapeError("distance matrix is not symmetric")
    if np.any(np.diag(D) != 0):
        raise ShapeError("distance matrix has a nonzero diagonal")
    return D


def stress_loss(H: np.ndarray, D: np.ndarray) -> Tuple[float, np.ndarray]:
    """
    Σ_i Σ_j (||h_i - h_j|| - d_ij)^2 over ordered pairs

    Returns:
        (loss, dL/dH); the subgradient at coincident embeddings is 0
    """
    H = np.atleast_2d(np.asarray(H, dtype=np.float64))
    D = validate_distance_matrix(D, H.shape[0])
    diff = H[:, None, :] - H[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    err = dist - D
    loss = float(np.sum(err * err))
    scale = np.divide(err, dist, out=np.zeros_like(err), where=dist > 0)
    grad = 4.0 * np.einsum("ij,ijk->ik", scale, diff)
    return loss, grad


def triplet_loss(h: np.ndarray, h_pos: np.ndarray, h_neg: np.ndarray, margin: float):
    """
    max(0, ||h - h+||^2 - ||h - h-||^2 + margin)

    Returns:
        (loss, (d_h, d_h_pos, d_h_neg))
    """
    to_pos, to_neg = h - h_pos, h - h_neg
    value = float(to_pos @ to_pos - to_neg @ to_neg + margin)
    if value <= 0:
        zero = np.zeros_like(h, dtype=np.float64)
        return 0.0, (zero, zero.copy(), zero.copy())
    return value, (2.0 * (h_neg - h_pos), -2.0 * to_pos, 2.0 * to_neg)


def mine_triplets(labels: Sequence) -> np.ndarray:
    """All (anchor, positive, negative) index triples; rows in lexicographic order"""
    labels = list(labels)
    if any(lab is None for lab in labels):
        raise ConfigError("triplet mode requires a class label for every complex")
    triples = [
        (a, p, n)
        for a in range(len(labels))
        for p in range(len(labels))
        if p != a and labels[p] == labels[a]
        for n in range(len(labels))
        if labels[n] != labels[a]
    ]
    return np.asarray(triples, dtype=np.int64).reshape(-1, 3)


def batch_triplet_loss(H: np.ndarray, triplets: np.ndarray, margin: float) -> Tuple[float, np.ndarray, np.ndarray]:
    """Summed hinge over index triples; returns (loss, dL/dH, per-triplet hinge)"""
    grad = np.zeros_like(H)
    if triplets.size == 0:
        return 0.0, grad, np.zeros(0)
    a, p, n = triplets[:, 0], triplets[:, 1], triplets[:, 2]
    to_pos, to_neg = H[a] - H[p], H[a] - H[n]
    hinge = np.maximum(0.0, np.sum(to_pos * to_pos, axis=1) - np.sum(to_neg * to_neg, axis=1) + margin)
    active = hinge > 0
    np.add.at(grad, a[active], 2.0 * (H[n[active]] - H[p[active]]))
    np.add.at(grad, p[active], -2.0 * to_pos[active])
    np.add.at(grad, n[active], 2.0 * to_neg[active])
    return float(hinge.sum()), grad, hinge


# ===== EVALUATION =====

def _pairwise_distances(H: np.ndarray) -> np.ndarray:
    diff = H[:, None, :] - H[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def nearest_neighbor_accuracy(H: np.ndarray, labels: Sequence) -> float:
    """Leave-one-out 1-NN classification accuracy over complex embeddings"""
    if len(labels) < 2:
        return float("nan")
    dist = _pairwise_distances(np.asarray(H, dtype=np.float64))
    np.fill_diagonal(dist, np.inf)
    nearest = np.argmin(dist, axis=1)
    return float(np.mean([labels[i] == labels[j] for i, j in enumerate(nearest)]))


def triplet_satisfaction(H: np.ndarray, labels: Sequence, margin: float) -> float:
    """Fraction of all valid triplets whose hinge is zero"""
    triplets = mine_triplets(labels)
    if triplets.size == 0:
        return float("nan")
    _, _, hinge = batch_triplet_loss(np.asarray(H, dtype=np.float64), triplets, margin)
    return float(np.mean(hinge == 0))


def rank_neighbors(H: np.ndarray, query: int, k: int = 5) -> List[int]:
    """Indices of the k complexes closest to H[query], nearest first"""
    dist = _pairwise_distances(np.asarray(H, dtype=np.float64))[query]
    order = [int(i) for i in np.argsort(dist, kind="stable") if i != query]
    return order[:k]


# ===== TRAINING =====

@dataclass
class PoolingResult:
    model: PoolingModel
    embeddings: List[ComplexEmbedding]
    log: List[Dict] = field(default_factory=list)

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([e.vector for e in self.embeddings])


class PoolingTrainer:
    """Gradient descent on the shared matrix W; simplex embeddings stay frozen"""

    def __init__(
        self,
        mode: str = "stress",
        epochs: int = 300,
        optimizer: str = "adam",
        learning_rate: float = 0.01,
        margin: float = 1.0,
        init_scale: float = 0.1,
        seed: int = 0,
        verbose: bool = False,
        progress_callback: Optional[Callable] = None,
    ):
        if mode not in MODES:
            raise ConfigError(f"unknown pooling mode '{mode}'")
        self.mode = mode
        self.epochs = epochs
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.margin = margin
        self.init_scale = init_scale
        self.seed = seed
        self.verbose = verbose
        self.progress_callback = progress_callback

    def _emit_progress(self, event_type: str, data: dict):
        """Emit a progress event if callback is set"""
        if self.progress_callback:
            self.progress_callback(event_type, data)

    def init_matrix(self, width: int) -> np.ndarray:
        """Identity plus N(0, init_scale / sqrt(d)) noise; the initial context is relu(Σ_n z_n)"""
        rng = make_rng(self.seed, "pool-init")
        return np.eye(width) + rng.normal(0.0, self.init_scale / math.sqrt(width), size=(width, width))

    def objective(self, W: np.ndarray, dataset: List[np.ndarray], target) -> Tuple[float, np.ndarray]:
        """Training loss and its gradient with respect to W"""
        H = np.vstack([pool(U, W).vector for U in dataset])
        if self.mode == "stress":
            loss, d_H = stress_loss(H, target)
        else:
            loss, d_H, _ = batch_triplet_loss(H, target, self.margin)
            loss, d_H = loss / len(target), d_H / len(target)
        d_W = np.zeros_like(W)
        for U, d_h in zip(dataset, d_H):
            d_W += pool_backward(U, W, d_h)
        return loss, d_W

    def train(
        self,
        dataset: List[np.ndarray],
        distance: Optional[np.ndarray] = None,
        labels: Optional[Sequence] = None,
        names: Optional[Sequence[str]] = None,
    ) -> PoolingResult:
        if not dataset:
            raise ConfigError("pooling needs at least one embedding table")
        dataset = [as_dense(U, "U_X") for U in dataset]
        widths = {U.shape[1] for U in dataset}
        if len(widths) != 1:
            raise ShapeError(f"width mismatch across dataset: {sorted(widths)}")
        width = widths.pop()
        names = list(names) if names is not None else [None] * len(dataset)
        labels = list(labels) if labels is not None else [None] * len(dataset)

        if self.mode == "stress":
            if distance is None:
                raise ConfigError("stress mode requires a distance matrix")
            target = validate_distance_matrix(distance, len(dataset))
        else:
            target = mine_triplets(labels)
            if target.size == 0:
                raise ConfigError("no valid (anchor, positive, negative) triplets in the dataset")

        if self.verbose:
            print(f"\n🧲 Training {self.mode} pooling on {len(dataset)} complexes (d={width})")
        self._emit_progress("pool_started", {"mode": self.mode, "complexes": len(dataset)})

        W = self.init_matrix(width)
        opt = Optimizer(kind=self.optimizer, learning_rate=self.learning_rate)
        log = []
        report_every = max(1, self.epochs // 10)
        for epoch in range(0, self.epochs + 1):
            loss, d_W = self.objective(W, dataset, target)
            if not math.isfinite(loss):
                raise TrainingError(f"pooling objective diverged at epoch {epoch}")
            record = {"epoch": epoch, "loss": loss}
            log.append(record)
            self._emit_progress("epoch", record)
            if self.verbose and epoch % report_every == 0:
                print(f"   epoch {epoch:>5}  loss {loss:.6f}")
            if epoch < self.epochs:
                W = opt.step({"W": W}, {"W": d_W})["W"]

        embeddings = [pool(U, W, name, label) for U, name, label in zip(dataset, names, labels)]
        if self.verbose:
            print(f"✅ Pooling trained: loss {log[0]['loss']:.6f} -> {log[-1]['loss']:.6f}")
        return PoolingResult(PoolingModel(W, self.mode, self.margin), embeddings, log)


def train_pooling(
    dataset: List[np.ndarray],
    mode: str = "stress",
    distance: Optional[np.ndarray] = None,
    labels: Optional[Sequence] = None,
    epochs: int = 300,
    optimizer: str = "adam",
    learning_rate: float = 0.01,
    margin: float = 1.0,
    seed: int = 0,
) -> PoolingResult:
    trainer = PoolingTrainer(mode, epochs, optimizer, learning_rate, margin, seed=seed)
    return trainer.train(dataset, distance=distance, labels=labels)
