import pytest

from embedder.errors import ConfigError
from utils.datasets import (
    FAMILIES,
    euler_characteristic,
    generate_mixed_dataset,
    generate_synthetic_dataset,
)


def test_polygon_disk_of_six():
    X = generate_synthetic_dataset("polygon_disk", 1, size_range=(6, 6))[0]
    assert X.counts == [7, 12, 6]
    assert euler_characteristic(X) == 1
    assert X.label == "polygon_disk"
    assert X.ambient_dim == 3


def test_annulus_is_a_ring():
    for X in generate_synthetic_dataset("annulus", 5, seed=2):
        assert euler_characteristic(X) == 0
        assert X.counts[2] == X.counts[0]


def test_names_and_labels():
    dataset = generate_mixed_dataset(FAMILIES, 3)
    assert [X.name for X in dataset][:3] == ["polygon_disk_000", "polygon_disk_001", "polygon_disk_002"]
    assert [X.label for X in dataset] == ["polygon_disk"] * 3 + ["annulus"] * 3


def test_generation_is_deterministic():
    a = generate_synthetic_dataset("annulus", 4, noise=0.3, seed=7)
    b = generate_synthetic_dataset("annulus", 4, noise=0.3, seed=7)
    for X, Y in zip(a, b):
        assert X.same_structure(Y)
        assert all((X.coords[v] == Y.coords[v]).all() for v in X.coords)


def test_noise_free_disk_is_regular():
    X = generate_synthetic_dataset("polygon_disk", 1, size_range=(4, 4), noise=0.0)[0]
    assert X.coords[1].tolist() == pytest.approx([1.0, 0.0, 0.0])


@pytest.mark.parametrize(
    "kwargs",
    [
        {"family": "torus", "count": 1},
        {"family": "annulus", "count": 0},
        {"family": "annulus", "count": 1, "size_range": (2, 5)},
        {"family": "annulus", "count": 1, "size_range": (6, 5)},
        {"family": "annulus", "count": 1, "noise": -0.1},
    ],
)
def test_invalid_arguments(kwargs):
    with pytest.raises(ConfigError):
        generate_synthetic_dataset(**kwargs)
