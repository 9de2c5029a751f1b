"""
Synthetic triangulated surfaces: fan-triangulated disks and ring-triangulated annuli
"""

from typing import List, Sequence, Tuple

import numpy as np

from embedder.complex_core import SimplicialComplex, build_complex
from embedder.errors import ConfigError
from embedder.numerics import make_rng

FAMILIES = ("polygon_disk", "annulus")
INNER_RADIUS = 0.5
DEFAULT_SIZE_RANGE = (6, 8)


def _ring(rng: np.random.Generator, size: int, radius: float, noise: float) -> np.ndarray:
    angles = 2 * np.pi * (np.arange(size) + rng.uniform(-0.25, 0.25, size=size) * noise) / size
    radii = radius * (1.0 + noise * rng.uniform(-0.5, 0.5, size=size))
    return np.column_stack([radii * np.cos(angles), radii * np.sin(angles), np.zeros(size)])


def polygon_disk(rng: np.random.Generator, size: int, noise: float, name: str) -> SimplicialComplex:
    """Center vertex 0 joined to every edge of a noisy polygon on vertices 1..size"""
    center = np.zeros((1, 3))
    center[0, :2] = rng.normal(0.0, 0.05 * noise, size=2)
    points = np.vstack([center, _ring(rng, size, 1.0, noise)])
    triangles = [[0, i, i % size + 1] for i in range(1, size + 1)]
    return build_complex(triangles, coords=dict(enumerate(points.tolist())), name=name, label="polygon_disk")


def annulus(rng: np.random.Generator, size: int, noise: float, name: str) -> SimplicialComplex:
    """Inner ring 0..size-1, outer ring size..2*size-1, two triangles per ring segment"""
    points = np.vstack([_ring(rng, size, INNER_RADIUS, noise), _ring(rng, size, 1.0, noise)])
    triangles = []
    for i in range(size):
        j = (i + 1) % size
        triangles.append([i, j, size + i])
        triangles.append([j, size + i, size + j])
    return build_complex(triangles, coords=dict(enumerate(points.tolist())), name=name, label="annulus")


def generate_synthetic_dataset(
    family: str,
    count: int,
    size_range: Tuple[int, int] = DEFAULT_SIZE_RANGE,
    noise: float = 0.1,
    seed: int = 0,
) -> List[SimplicialComplex]:
    """
    Generate labelled complexes of one family

    Args:
        family: 'polygon_disk' or 'annulus'
        count: Number of complexes
        size_range: Inclusive range of boundary (ring) vertex counts
        noise: Relative jitter of angles and radii
        seed: Master seed; complex i uses its own stream

    Returns:
        Complexes named '<family>_<i>' with 3-D coordinates (z = 0)
    """
    if family not in FAMILIES:
        raise ConfigError(f"unknown family '{family}', expected one of {list(FAMILIES)}")
    if count < 1:
        raise ConfigError("count must be at least 1")
    low, high = size_range
    if low < 3 or high < low:
        raise ConfigError(f"size range must satisfy 3 <= low <= high, got {size_range}")
    if noise < 0:
        raise ConfigError("noise must be non-negative")

    build = polygon_disk if family == "polygon_disk" else annulus
    dataset = []
    for i in range(count):
        rng = make_rng(seed, "dataset", family, i)
        size = int(rng.integers(low, high + 1))
        dataset.append(build(rng, size, noise, f"{family}_{i:03d}"))
    return dataset


def generate_mixed_dataset(
    families: Sequence[str],
    count: int,
    size_range: Tuple[int, int] = DEFAULT_SIZE_RANGE,
    noise: float = 0.1,
    seed: int = 0,
) -> List[SimplicialComplex]:
    """count complexes of each family, concatenated in family order"""
    dataset = []
    for family in families:
        dataset.extend(generate_synthetic_dataset(family, count, size_range, noise, seed))
    return dataset


def euler_characteristic(X: SimplicialComplex) -> int:
    return sum((-1) ** k * c for k, c in enumerate(X.counts))
