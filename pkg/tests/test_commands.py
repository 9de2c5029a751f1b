import json
import os

import numpy as np
import pytest
from PIL import Image

from embedder.commands import CommandExecutor, run_command
from embedder.config import RunConfig
from embedder.errors import ArtifactError, ComplexError, ConfigError
from main import main
from utils.formats import read_matrix_file, write_complex_file, write_matrix_file


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    for key in list(os.environ):
        if key.startswith("SCEMBED_"):
            monkeypatch.delenv(key)


@pytest.fixture
def square_file(tmp_path, two_triangles):
    return write_complex_file(two_triangles, tmp_path / "square.json")


def executor(**overrides):
    return CommandExecutor(RunConfig(**overrides))


def test_build_reports_counts(tmp_path, triangle):
    path = write_complex_file(triangle, tmp_path / "triangle.json")
    result = executor().execute("build", {"complex": path, "out": str(tmp_path / "matrices")})
    assert result["counts"] == [3, 3, 1]
    assert result["n_hat"] == 6
    assert result["seed"] == 0
    assert result["config"]["scheme"] == "amps"
    assert {os.path.basename(f) for f in result["files"]} == {
        "adjacency.txt", "coadjacency.txt", "incidence_0.txt", "incidence_1.txt",
    }
    assert read_matrix_file(tmp_path / "matrices" / "adjacency.txt", "adjacency").values.shape == (6, 6)


def test_run_command_prints_json_result(tmp_path, triangle, capsys):
    path = write_complex_file(triangle, tmp_path / "triangle.json")
    assert run_command("build", {"complex": path}, verbose=False) == 0
    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert result["command"] == "build"
    assert result["config_hash"] == RunConfig().config_hash()


def test_errors_become_one_json_line(tmp_path, capsys):
    code = run_command("build", {"complex": str(tmp_path / "missing.json")}, verbose=False)
    assert code == 1
    error = json.loads(capsys.readouterr().err.strip())
    assert error["type"] == "ArtifactError"
    assert error["command"] == "build"
    assert "missing file" in error["error"]


def test_main_applies_flags(tmp_path, triangle, capsys):
    path = write_complex_file(triangle, tmp_path / "triangle.json")
    assert main(["build", "--complex", path, "--quiet", "--seed", "7"]) == 0
    result = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert result["seed"] == 7


def test_environment_reaches_commands(tmp_path, triangle, capsys, monkeypatch):
    monkeypatch.setenv("SCEMBED_EMBED_DIM", "5")
    path = write_complex_file(triangle, tmp_path / "triangle.json")
    assert run_command("build", {"complex": path}, verbose=False) == 0
    assert json.loads(capsys.readouterr().out)["config"]["embed_dim"] == 5


def test_train_then_embed_reproduces_table(tmp_path, square_file, two_triangles):
    ex = executor(epochs=5, embed_dim=4)
    trained = ex.execute("train-ae", {"complexes": [square_file], "out": str(tmp_path / "ae")})
    stored = read_matrix_file(trained["embeddings"][0], "embedding")
    assert stored.values.shape == (two_triangles.n_hat, 4)
    assert stored.meta["name"] == "two_triangles"
    assert (tmp_path / "ae" / "ae_log_two_triangles.jsonl").exists()

    result = ex.execute("embed", {
        "complex": square_file,
        "params": str(tmp_path / "ae" / "params_two_triangles.json"),
        "out": str(tmp_path / "again.txt"),
    })
    assert result["rows"] == two_triangles.n_hat
    np.testing.assert_array_equal(read_matrix_file(tmp_path / "again.txt").values, stored.values)


def test_embed_refuses_foreign_config(tmp_path, square_file):
    executor(epochs=2).execute("train-ae", {"complexes": [square_file], "out": str(tmp_path / "ae")})
    with pytest.raises(ArtifactError, match="produced by config"):
        executor(epochs=2, seed=1).execute("embed", {
            "complex": square_file,
            "params": str(tmp_path / "ae" / "params_two_triangles.json"),
            "out": str(tmp_path / "u.txt"),
        })


def test_eval_perfect_embeddings_have_zero_stress(tmp_path):
    H = np.array([[0.0], [3.0], [7.0]])
    D = np.abs(H - H.T)
    names = ["a", "b", "c"]
    pooled = write_matrix_file(tmp_path / "pooled.txt", H, "pooled", names=names, labels=["x", "x", "y"])
    distance = write_matrix_file(tmp_path / "d.txt", D, "distance", names=names)
    result = executor().execute("eval", {"pooled": pooled, "distance": distance, "rank": "a", "top": 1})
    metrics = result["metrics"]
    assert metrics["stress"] == 0.0
    assert metrics["neighbors"] == ["b"]
    assert metrics["nn_accuracy"] == pytest.approx(2 / 3)


def test_eval_unknown_query(tmp_path):
    pooled = write_matrix_file(tmp_path / "pooled.txt", np.eye(2), "pooled", names=["a", "b"])
    with pytest.raises(ConfigError, match="unknown query"):
        executor().execute("eval", {"pooled": pooled, "rank": "z"})


def test_small_dataset_end_to_end(tmp_path):
    ex = executor(epochs=5, embed_dim=4, pool_epochs=20)
    files = ex.execute("gen", {"family": ["polygon_disk", "annulus"], "count": 2, "out": str(tmp_path / "c")})["files"]
    assert len(files) == 4
    embeddings = ex.execute("train-ae", {"complexes": files, "out": str(tmp_path / "ae")})["embeddings"]
    distance = ex.execute("distmat", {"complexes": files, "out": str(tmp_path / "d.txt")})["file"]
    pooled = ex.execute("train-pool", {"embeddings": embeddings, "distance": distance, "out": str(tmp_path / "pool")})
    assert pooled["final_loss"] <= pooled["initial_loss"]
    metrics = ex.execute("eval", {
        "pooled": pooled["pooled"],
        "distance": distance,
        "complexes": files,
        "embeddings": embeddings,
    })["metrics"]
    assert set(metrics) >= {"stress", "nn_accuracy", "triplet_satisfaction", "auc"}
    assert set(metrics["auc"]) == {"polygon_disk_000", "polygon_disk_001", "annulus_000", "annulus_001", "mean"}


def test_train_pool_rejects_reordered_distance(tmp_path):
    tables = [write_matrix_file(tmp_path / f"e{i}.txt", np.ones((2, 2)) * i, "embedding", name=n)
              for i, n in enumerate(["a", "b"])]
    distance = write_matrix_file(tmp_path / "d.txt", np.array([[0.0, 1.0], [1.0, 0.0]]), "distance", names=["b", "a"])
    with pytest.raises(ArtifactError, match="embedding order"):
        executor().execute("train-pool", {"embeddings": tables, "distance": distance, "out": str(tmp_path / "p")})


def test_render(tmp_path, triangle):
    path = write_complex_file(triangle, tmp_path / "triangle.json")
    result = executor().execute("render", {"complex": path, "out": str(tmp_path / "t.png"), "size": 64})
    with Image.open(result["file"]) as image:
        assert image.size == (64, 64)


def test_render_needs_coordinates(tmp_path, path_graph):
    path = write_complex_file(path_graph, tmp_path / "path.json")
    with pytest.raises(ComplexError, match="coordinates required"):
        executor().execute("render", {"complex": path, "out": str(tmp_path / "p.png")})
