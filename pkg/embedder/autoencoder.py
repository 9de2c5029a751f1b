"""
Simplicial Autoencoder - encoder/decoder/similarity/loss framework and its
three standard instantiations (Laplacian eigenmaps, inner product, random walk)
"""

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.csgraph import connected_components
from scipy.special import logsumexp
from scipy.stats import rankdata

from .complex_core import SimplicialComplex
from .errors import ComplexError, ConfigError, ShapeError, TrainingError
from .message_passing import CXNEncoder, embedded_dims
from .numerics import Optimizer, ParamSet, make_rng

# method -> (decoder, similarity, loss)
METHODS = {
    "laplacian": ("laplacian", "adjacency", "lap_product"),
    "inner_product": ("inner_product", "adjacency", "squared_error"),
    "random_walk": ("softmax_rw", "random_walk", "neg_log_likelihood"),
}
ENCODERS = ("shallow", "cxn")


@dataclass
class RandomWalkConfig:
    walks_per_simplex: int = 10
    walk_length: int = 10
    window: int = 2
    seed: int = 0

    def __post_init__(self):
        for name in ("walks_per_simplex", "walk_length", "window"):
            if getattr(self, name) < 1:
                raise ConfigError(f"random walk {name} must be positive")


@dataclass
class AutoencoderModel:
    """Configuration of one simplicial autoencoder"""

    method: str = "inner_product"
    encoder: str = "shallow"
    scheme: str = "amps"
    layers: int = 2
    embed_dim: int = 16
    feature_scheme: str = "structural"
    hcmps_split: bool = False
    negative_ratio: int = 5
    walk: RandomWalkConfig = field(default_factory=RandomWalkConfig)
    decoder: Optional[str] = None
    similarity: Optional[str] = None
    loss: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.walk, dict):
            self.walk = RandomWalkConfig(**self.walk)
        self.validate()

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown autoencoder method '{self.method}'")
        expected = METHODS[self.method]
        chosen = (
            self.decoder or expected[0],
            self.similarity or expected[1],
            self.loss or expected[2],
        )
        if chosen not in METHODS.values():
            raise ConfigError(f"invalid (decoder, similarity, loss) triple {chosen}")
        if chosen != expected:
            raise ConfigError(f"triple {chosen} does not belong to method '{self.method}'")
        self.decoder, self.similarity, self.loss = chosen

        if self.encoder not in ENCODERS:
            raise ConfigError(f"unknown encoder '{self.encoder}'")
        if self.method == "laplacian" and self.encoder != "shallow":
            raise ConfigError("laplacian eigenmaps is solved directly and requires the shallow encoder")
        if self.embed_dim < 1:
            raise ConfigError("embedding dimension must be positive")
        if self.negative_ratio < 0:
            raise ConfigError("negative ratio must be non-negative")

    def to_dict(self) -> Dict:
        return asdict(self)


# ===== ENCODERS =====

class ShallowEncoder:
    """Trainable lookup table with one row per simplex of X^{<n}"""

    def __init__(self, width: int):
        self.width = width

    def embedded_dims(self, X: SimplicialComplex) -> List[int]:
        return list(range(X.dim))

    def init_params(self, X: SimplicialComplex, rng: np.random.Generator) -> ParamSet:
        return {"table": rng.normal(0.0, 0.1, size=(X.n_hat, self.width))}

    def forward(self, X: SimplicialComplex, params: ParamSet):
        return params["table"], None

    def backward(self, X: SimplicialComplex, trace, d_U: np.ndarray) -> ParamSet:
        return {"table": d_U}


def make_encoder(model: AutoencoderModel):
    if model.encoder == "shallow":
        return ShallowEncoder(model.embed_dim)
    return CXNEncoder(model.scheme, model.layers, model.embed_dim, model.feature_scheme, model.hcmps_split)


def encoder_dims(model: AutoencoderModel, X: SimplicialComplex) -> List[int]:
    if model.encoder == "shallow":
        return list(range(X.dim))
    return embedded_dims(X, model.scheme)


def block_offsets(X: SimplicialComplex, dims: List[int]) -> Dict[int, Tuple[int, int]]:
    """Row range of each dimension's block inside U_X"""
    spans, start = {}, 0
    for k in dims:
        spans[k] = (start, start + X.counts[k])
        start += X.counts[k]
    return spans


def loss_dims(model: AutoencoderModel, X: SimplicialComplex) -> List[int]:
    """Dimensions k < n that carry an adjacency loss and are embedded"""
    embedded = set(encoder_dims(model, X))
    return [k for k in range(X.dim) if k in embedded]


# ===== RANDOM WALK SIMILARITY =====

def _adjacency_or_empty(X: SimplicialComplex, k: int) -> sp.csr_matrix:
    if k == X.dim:
        return sp.csr_matrix((X.counts[k], X.counts[k]), dtype=np.int64)
    return X.per_dim_adjacency(k)


def random_walk_corpus(X: SimplicialComplex, k: int, cfg: RandomWalkConfig) -> List[np.ndarray]:
    """
    Weighted random walks on the k-adjacency graph

    Every k-simplex starts cfg.walks_per_simplex walks; a step from a picks a
    neighbor with probability proportional to A^k_adj(a, .). Walks stop early
    at simplices without neighbors.
    """
    A = _adjacency_or_empty(X, k)
    rng = make_rng(cfg.seed, "walks", k)
    indptr, indices = A.indptr, A.indices
    cumulative = [np.cumsum(A.data[indptr[i]:indptr[i + 1]]).astype(np.float64) for i in range(A.shape[0])]

    corpus = []
    for start in range(A.shape[0]):
        for _ in range(cfg.walks_per_simplex):
            walk = [start]
            for _ in range(cfg.walk_length - 1):
                current = walk[-1]
                weights = cumulative[current]
                if weights.size == 0:
                    break
                pick = int(np.searchsorted(weights, rng.random() * weights[-1], side="right"))
                walk.append(int(indices[indptr[current] + min(pick, weights.size - 1)]))
            corpus.append(np.asarray(walk, dtype=np.int64))
    return corpus


@dataclass
class WalkSimilarity:
    """Row-stochastic p(a|c); rows without co-occurrences are flagged absent"""

    probs: np.ndarray
    populated: np.ndarray


def empirical_similarity(corpus: List[np.ndarray], window: int, size: int) -> WalkSimilarity:
    """Skip-gram style window co-occurrence estimate of p(a|c)"""
    counts = np.zeros((size, size))
    for walk in corpus:
        for offset in range(1, window + 1):
            if walk.size <= offset:
                break
            left, right = walk[:-offset], walk[offset:]
            np.add.at(counts, (left, right), 1.0)
            np.add.at(counts, (right, left), 1.0)

    totals = counts.sum(axis=1)
    populated = totals > 0
    probs = np.zeros_like(counts)
    probs[populated] = counts[populated] / totals[populated, None]
    return WalkSimilarity(probs=probs, populated=populated)


# ===== DECODERS =====

def decode(model, z_a: np.ndarray, z_c: np.ndarray, context: Optional[np.ndarray] = None) -> float:
    """
    Similarity score between two simplex embeddings

    Args:
        model: AutoencoderModel or decoder name
        z_a: First embedding
        z_c: Second embedding
        context: All embeddings of X^k (softmax decoder only)
    """
    kind = model if isinstance(model, str) else model.decoder
    z_a, z_c = np.asarray(z_a, dtype=np.float64), np.asarray(z_c, dtype=np.float64)
    if z_a.shape != z_c.shape:
        raise ShapeError(f"decode: shapes {z_a.shape} and {z_c.shape} differ")

    if kind == "laplacian":
        diff = z_a - z_c
        return float(diff @ diff)
    if kind == "inner_product":
        return float(z_a @ z_c)
    if kind == "softmax_rw":
        if context is None or len(context) == 0:
            raise ShapeError("softmax decoder needs a non-empty context")
        logits = np.asarray(context, dtype=np.float64) @ z_a
        return float(np.exp(z_a @ z_c - logsumexp(logits)))
    raise ConfigError(f"unknown decoder '{kind}'")


# ===== PAIRS AND LOSSES =====

@dataclass
class PairSet:
    """Index pairs within X^k and their similarity targets"""

    left: np.ndarray
    right: np.ndarray
    target: np.ndarray

    def __len__(self):
        return int(self.left.size)

    def take(self, idx: np.ndarray) -> "PairSet":
        return PairSet(self.left[idx], self.right[idx], self.target[idx])

    @staticmethod
    def empty() -> "PairSet":
        return PairSet(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), np.zeros(0))


def positive_pairs(X: SimplicialComplex, k: int) -> PairSet:
    """Unordered adjacent pairs of k-simplices with target |CO[a, c]|; none at the top dimension"""
    upper = sp.triu(_adjacency_or_empty(X, k), k=1).tocoo()
    order = np.lexsort((upper.col, upper.row))
    return PairSet(
        upper.row[order].astype(np.int64),
        upper.col[order].astype(np.int64),
        upper.data[order].astype(np.float64),
    )


def negative_pairs(X: SimplicialComplex, k: int, count: int, rng: np.random.Generator) -> PairSet:
    """Uniform samples of distinct non-adjacent pairs, target 0"""
    size = X.counts[k]
    if count <= 0 or size < 2:
        return PairSet.empty()
    adjacent = X.per_dim_adjacency(k).toarray() > 0
    rows, cols = np.triu_indices(size, k=1)
    free = ~adjacent[rows, cols]
    rows, cols = rows[free], cols[free]
    if rows.size == 0:
        return PairSet.empty()
    picks = rng.integers(0, rows.size, size=count)
    return PairSet(rows[picks].astype(np.int64), cols[picks].astype(np.int64), np.zeros(count))


def walk_pairs(similarity: WalkSimilarity) -> PairSet:
    """(center, context) pairs weighted by p(context | center)"""
    centers, contexts = np.nonzero(similarity.probs)
    return PairSet(centers.astype(np.int64), contexts.astype(np.int64), similarity.probs[centers, contexts])


def build_pairs(
    model: AutoencoderModel,
    X: SimplicialComplex,
    k: int,
    rng: Optional[np.random.Generator] = None,
    similarity: Optional[WalkSimilarity] = None,
) -> PairSet:
    if model.loss == "neg_log_likelihood":
        if similarity is None:
            raise ConfigError("random walk loss needs an empirical similarity")
        return walk_pairs(similarity)

    positives = positive_pairs(X, k)
    if model.loss == "lap_product" or model.negative_ratio == 0 or len(positives) == 0:
        return positives
    rng = rng or make_rng(model.walk.seed, "negatives", k)
    negatives = negative_pairs(X, k, model.negative_ratio * len(positives), rng)
    return PairSet(
        np.concatenate([positives.left, negatives.left]),
        np.concatenate([positives.right, negatives.right]),
        np.concatenate([positives.target, negatives.target]),
    )


def pair_loss(model: AutoencoderModel, Z: np.ndarray, pairs: PairSet) -> Tuple[float, np.ndarray]:
    """Loss over a pair set and its exact gradient with respect to Z"""
    grad = np.zeros_like(Z)
    if len(pairs) == 0:
        return 0.0, grad
    left, right, target = pairs.left, pairs.right, pairs.target

    if model.loss == "lap_product":
        diff = Z[left] - Z[right]
        loss = float(np.sum(target * np.sum(diff * diff, axis=1)))
        g = 2.0 * target[:, None] * diff
        np.add.at(grad, left, g)
        np.add.at(grad, right, -g)
        return loss, grad

    if model.loss == "squared_error":
        err = np.sum(Z[left] * Z[right], axis=1) - target
        loss = float(err @ err)
        coeff = 2.0 * err[:, None]
        np.add.at(grad, left, coeff * Z[right])
        np.add.at(grad, right, coeff * Z[left])
        return loss, grad

    if model.loss == "neg_log_likelihood":
        # logits[p, b] = z_center(p) . z_b, normalised over all b in X^k
        logits = Z[left] @ Z.T
        norm = logsumexp(logits, axis=1)
        loss = float(-np.sum(target * (logits[np.arange(len(pairs)), right] - norm)))
        d_logits = target[:, None] * np.exp(logits - norm[:, None])
        d_logits[np.arange(len(pairs)), right] -= target
        np.add.at(grad, left, d_logits @ Z)
        grad += d_logits.T @ Z[left]
        return loss, grad

    raise ConfigError(f"unknown loss '{model.loss}'")


def ae_loss(
    model: AutoencoderModel,
    X: SimplicialComplex,
    k: int,
    Z: np.ndarray,
    similarity: Optional[WalkSimilarity] = None,
    rng: Optional[np.random.Generator] = None,
) -> Tuple[float, np.ndarray]:
    """
    L_k over the k-simplex block Z (|X^k| x d)

    Returns:
        (loss, dL/dZ)
    """
    if Z.shape[0] != X.counts[k]:
        raise ShapeError(f"ae_loss: block has shape {Z.shape}, expected {X.counts[k]} rows")
    pairs = build_pairs(model, X, k, rng=rng, similarity=similarity)
    if len(pairs) == 0:
        warnings.warn(f"no adjacent pairs at dimension {k}; L_{k} = 0", RuntimeWarning)
    return pair_loss(model, Z, pairs)


# ===== LAPLACIAN EIGENMAPS =====

@dataclass
class EigenmapsResult:
    embedding: np.ndarray       # |X^k| x d
    eigenvalues: np.ndarray     # components x d
    labels: np.ndarray          # component id per row


def laplacian_eigenmaps_solve(A: sp.spmatrix, d: int) -> EigenmapsResult:
    """
    Generalized eigenvectors of (L, D), L = D - A, per connected component

    Columns are the d smallest nonzero eigenpairs of each component and
    satisfy Z_c^T D_c Z_c = I. Components with fewer than d + 1 simplices
    fill the remaining columns with zeros.
    """
    A = sp.csr_matrix(A, dtype=np.float64)
    size = A.shape[0]
    if size == 0:
        raise ComplexError("empty adjacency matrix")
    if d < 1:
        raise ConfigError("embedding dimension must be positive")

    n_comp, labels = connected_components(A, directed=False)
    sizes = np.bincount(labels, minlength=n_comp)
    maximum = int(sizes.max()) - 1
    if d > maximum:
        raise ConfigError(f"embedding dimension {d} too large; maximum is {maximum}")

    Z = np.zeros((size, d))
    values = np.zeros((n_comp, d))
    for comp in range(n_comp):
        idx = np.flatnonzero(labels == comp)
        if idx.size < 2:
            continue
        sub = A[idx][:, idx].toarray()
        deg = sub.sum(axis=1)
        lam, vecs = eigh(np.diag(deg) - sub, np.diag(deg))
        cols = min(d, idx.size - 1)
        block = vecs[:, 1:1 + cols]
        # first clearly nonzero entry positive, for a reproducible sign
        for j in range(cols):
            lead = np.flatnonzero(np.abs(block[:, j]) > 1e-9)
            if lead.size and block[lead[0], j] < 0:
                block[:, j] = -block[:, j]
        Z[idx, :cols] = block
        values[comp, :cols] = lam[1:1 + cols]
    return EigenmapsResult(embedding=Z, eigenvalues=values, labels=labels)


# ===== EVALUATION =====

def reconstruction_auc(
    model: AutoencoderModel,
    X: SimplicialComplex,
    U: np.ndarray,
    dims: Optional[List[int]] = None,
) -> float:
    """
    Ranking AUC separating adjacent from non-adjacent same-dimension pairs

    Scores are decoder values (negated distances for the laplacian decoder);
    every distinct pair of every requested dimension is ranked jointly.
    """
    dims = loss_dims(model, X) if dims is None else dims
    spans = block_offsets(X, encoder_dims(model, X))
    scores, labels = [], []
    for k in dims:
        start, stop = spans[k]
        Z = U[start:stop]
        rows, cols = np.triu_indices(Z.shape[0], k=1)
        adjacent = X.per_dim_adjacency(k).toarray() > 0
        if model.decoder == "laplacian":
            diff = Z[rows] - Z[cols]
            score = -np.sum(diff * diff, axis=1)
        else:
            score = np.sum(Z[rows] * Z[cols], axis=1)
        scores.append(score)
        labels.append(adjacent[rows, cols])

    if not scores:
        return float("nan")
    scores, labels = np.concatenate(scores), np.concatenate(labels)
    n_pos, n_neg = int(labels.sum()), int((~labels).sum())
    if n_pos == 0 or n_neg == 0:
        return float("nan")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


# ===== TRAINING =====

@dataclass
class TrainedAutoencoder:
    model: AutoencoderModel
    embedding: np.ndarray
    params: ParamSet
    dims: List[int]
    log: List[Dict] = field(default_factory=list)


class AutoencoderTrainer:
    """Trains one autoencoder on one complex"""

    def __init__(
        self,
        model: AutoencoderModel,
        epochs: int = 200,
        optimizer: str = "adam",
        learning_rate: float = 0.01,
        batch_size: int = 0,
        seed: int = 0,
        verbose: bool = False,
        progress_callback: Optional[Callable] = None,
    ):
        self.model = model
        self.epochs = epochs
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.verbose = verbose
        self.progress_callback = progress_callback
        self.encoder = make_encoder(model)

    def _emit_progress(self, event_type: str, data: dict):
        """Emit a progress event if callback is set"""
        if self.progress_callback:
            self.progress_callback(event_type, data)

    def similarities(self, X: SimplicialComplex) -> Dict[int, WalkSimilarity]:
        if self.model.similarity != "random_walk":
            return {}
        cfg = RandomWalkConfig(
            walks_per_simplex=self.model.walk.walks_per_simplex,
            walk_length=self.model.walk.walk_length,
            window=self.model.walk.window,
            seed=int(make_rng(self.seed, "walk-seed", self.model.walk.seed).integers(2 ** 31)),
        )
        return {
            k: empirical_similarity(random_walk_corpus(X, k, cfg), cfg.window, X.counts[k])
            for k in loss_dims(self.model, X)
        }

    def objective(self, X: SimplicialComplex, params: ParamSet, pairs: Dict[int, PairSet]):
        """Total loss, per-dimension losses and parameter gradients"""
        U, trace = self.encoder.forward(X, params)
        spans = block_offsets(X, encoder_dims(self.model, X))
        d_U = np.zeros_like(U)
        per_k = {}
        for k, pair_set in pairs.items():
            start, stop = spans[k]
            loss, d_Z = pair_loss(self.model, U[start:stop], pair_set)
            per_k[k] = loss
            d_U[start:stop] += d_Z
        grads = self.encoder.backward(X, trace, d_U)
        return float(sum(per_k.values())), per_k, grads

    def train(self, X: SimplicialComplex) -> TrainedAutoencoder:
        if X.dim == 0:
            raise ComplexError("complex has no simplices below the top dimension")
        dims = loss_dims(self.model, X)
        if not dims:
            raise ConfigError(f"scheme '{self.model.scheme}' embeds no dimension with an adjacency loss")

        if self.verbose:
            print(f"\n🧠 Training {self.model.method} autoencoder on {X.name or 'complex'} "
                  f"(counts {X.counts}, encoder {self.model.encoder})")
        self._emit_progress("ae_started", {"complex": X.name, "method": self.model.method})

        if self.model.method == "laplacian":
            return self._solve_eigenmaps(X, dims)

        # not keyed on the complex: every complex starts from the same encoder parameters
        rng = make_rng(self.seed, "ae-train")
        params = self.encoder.init_params(X, rng)
        similarity = self.similarities(X)

        opt = Optimizer(kind=self.optimizer, learning_rate=self.learning_rate)
        log = []
        report_every = max(1, self.epochs // 10)
        for epoch in range(1, self.epochs + 1):
            pairs = {k: build_pairs(self.model, X, k, rng=rng, similarity=similarity.get(k)) for k in dims}
            pairs = {k: p.take(rng.permutation(len(p))) for k, p in pairs.items()}
            longest = max(len(p) for p in pairs.values())
            size = self.batch_size if self.batch_size > 0 else max(longest, 1)
            n_batches = max(1, math.ceil(longest / size))

            epoch_k = {k: 0.0 for k in dims}
            for b in range(n_batches):
                batch = {k: p.take(np.arange(b * size, min((b + 1) * size, len(p)))) for k, p in pairs.items()}
                total, per_k, grads = self.objective(X, params, batch)
                if not math.isfinite(total):
                    raise TrainingError(f"objective diverged at epoch {epoch}")
                for k, v in per_k.items():
                    epoch_k[k] += v
                params = opt.step(params, grads)

            record = {"epoch": epoch, "loss_k": {str(k): v for k, v in epoch_k.items()}, "total": sum(epoch_k.values())}
            log.append(record)
            self._emit_progress("epoch", record)
            if self.verbose and (epoch % report_every == 0 or epoch == 1):
                print(f"   epoch {epoch:>5}  loss {record['total']:.6f}")

        U = self.encoder.forward(X, params)[0]
        if not np.all(np.isfinite(U)):
            raise TrainingError(f"embedding became non-finite at epoch {self.epochs}")
        if self.verbose:
            print(f"✅ Autoencoder trained: U_X has shape {U.shape}")
        return TrainedAutoencoder(self.model, U, params, encoder_dims(self.model, X), log)

    def _solve_eigenmaps(self, X: SimplicialComplex, dims: List[int]) -> TrainedAutoencoder:
        blocks = [laplacian_eigenmaps_solve(X.per_dim_adjacency(k), self.model.embed_dim).embedding for k in dims]
        U = np.vstack(blocks)
        spans = block_offsets(X, dims)
        per_k = {}
        for k in dims:
            start, stop = spans[k]
            per_k[str(k)] = pair_loss(self.model, U[start:stop], positive_pairs(X, k))[0]
        log = [{"epoch": 0, "loss_k": per_k, "total": sum(per_k.values())}]
        self._emit_progress("epoch", log[0])
        if self.verbose:
            print(f"✅ Eigenmaps solved: U_X has shape {U.shape}")
        return TrainedAutoencoder(self.model, U, {"table": U.copy()}, dims, log)


def train_autoencoder(
    X: SimplicialComplex,
    model: AutoencoderModel,
    epochs: int = 200,
    optimizer: str = "adam",
    learning_rate: float = 0.01,
    seed: int = 0,
    batch_size: int = 0,
) -> TrainedAutoencoder:
    trainer = AutoencoderTrainer(model, epochs, optimizer, learning_rate, batch_size, seed)
    return trainer.train(X)
