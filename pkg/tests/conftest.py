"""Shared fixtures: small hand-checkable complexes and seeded random complexes"""

from itertools import combinations

import numpy as np
import pytest

from embedder.complex_core import build_complex
from embedder.numerics import make_rng


@pytest.fixture
def triangle():
    coords = {0: [0.0, 0.0, 0.0], 1: [1.0, 0.0, 0.0], 2: [0.0, 1.0, 0.0]}
    return build_complex([[0, 1, 2]], coords=coords, name="triangle")


@pytest.fixture
def two_triangles():
    coords = {0: [0.0, 0.0, 0.0], 1: [1.0, 0.0, 0.0], 2: [0.0, 1.0, 0.0], 3: [1.0, 1.0, 0.0]}
    return build_complex([[0, 1, 2], [1, 2, 3]], coords=coords, name="two_triangles", label="square")


@pytest.fixture
def path_graph():
    return build_complex([[0, 1], [1, 2]], name="path")


def random_maximal(rng: np.random.Generator, vertices: int = 12, max_dim: int = 3, count: int = 8):
    """Random vertex sets of dimension 1..max_dim over a fixed vertex pool"""
    sets = []
    for _ in range(count):
        size = int(rng.integers(2, max_dim + 2))
        sets.append(sorted(rng.choice(vertices, size=size, replace=False).tolist()))
    return sets


@pytest.fixture
def random_complexes():
    """Factory: random_complexes(n, seed, **kwargs) -> list of n complexes"""

    def make(n: int, seed: int = 0, **kwargs):
        out = []
        for i in range(n):
            rng = make_rng(seed, "test-complex", i)
            out.append(build_complex(random_maximal(rng, **kwargs), name=f"random_{i}"))
        return out

    return make


@pytest.fixture
def fifty_simplex_complex():
    """Four tetrahedra glued in a chain, a strip of two triangles and an isolated vertex"""
    maximal = [[0, 1, 2, 3], [1, 2, 3, 4], [2, 3, 4, 5], [3, 4, 5, 6], [6, 7, 8], [7, 8, 9], [10]]
    return build_complex(maximal, name="chain")


def brute_force_counts(X, k, relation):
    """|CO| (relation='co') or |C| (relation='c') by direct set intersection"""
    size = X.counts[k]
    M = np.zeros((size, size), dtype=np.int64)
    block = X.by_dim[k]
    for i, j in combinations(range(size), 2):
        a, b = block[i], block[j]
        if relation == "co":
            shared = {s for s in X.by_dim[k + 1] if set(a) <= set(s) and set(b) <= set(s)}
        else:
            shared = {s for s in X.by_dim[k - 1] if set(s) <= set(a) and set(s) <= set(b)}
        M[i, j] = M[j, i] = len(shared)
    return M
