"""
Complex Metrics - Hausdorff distance between embedded complexes and the
complex-to-complex distance matrix
"""

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.spatial.distance import cdist

from .complex_core import SimplicialComplex
from .errors import ComplexError, ConfigError, ShapeError
from .numerics import make_rng


@dataclass
class SamplingConfig:
    points_per_top_simplex: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.points_per_top_simplex < 0:
            raise ConfigError("points_per_top_simplex must be non-negative")


def sample_points(X: SimplicialComplex, cfg: SamplingConfig) -> np.ndarray:
    """
    Vertices plus uniform barycentric samples on every maximal simplex

    The stream depends only on cfg.seed, so equal complexes always produce
    equal point sets.
    """
    if not X.coords:
        raise ComplexError("coordinates required")
    vertices = sorted(X.coords)
    points = [np.vstack([X.coords[v] for v in vertices])]

    if cfg.points_per_top_simplex > 0:
        rng = make_rng(cfg.seed, "hausdorff-sampling")
        for top in X.maximal_simplices():
            corners = np.vstack([X.coords[v] for v in top])
            weights = rng.dirichlet(np.ones(len(top)), size=cfg.points_per_top_simplex)
            points.append(weights @ corners)
    return np.vstack(points)


def directed_hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    """max over p in P of the distance to the nearest q in Q"""
    return float(np.max(np.min(cdist(P, Q), axis=1)))


def point_set_hausdorff(P: np.ndarray, Q: np.ndarray) -> float:
    if P.shape[1] != Q.shape[1]:
        raise ShapeError(f"ambient dimension mismatch: {P.shape[1]} vs {Q.shape[1]}")
    return max(directed_hausdorff(P, Q), directed_hausdorff(Q, P))


def hausdorff(X: SimplicialComplex, Y: SimplicialComplex, cfg: Optional[SamplingConfig] = None) -> float:
    cfg = cfg or SamplingConfig()
    return point_set_hausdorff(sample_points(X, cfg), sample_points(Y, cfg))


def distance_matrix(
    dataset: List[SimplicialComplex],
    cfg: Optional[SamplingConfig] = None,
    progress_callback: Optional[Callable] = None,
) -> np.ndarray:
    """Symmetric Hausdorff matrix; each unordered pair is computed once"""
    cfg = cfg or SamplingConfig()
    clouds = [sample_points(X, cfg) for X in dataset]
    size = len(clouds)
    D = np.zeros((size, size))
    for i in range(size):
        for j in range(i + 1, size):
            D[i, j] = D[j, i] = point_set_hausdorff(clouds[i], clouds[j])
        if progress_callback:
            progress_callback("distance_row", {"row": i + 1, "total": size})
    return D
