"""End-to-end runs over a 40-complex synthetic dataset (20 disks, 20 annuli)"""

import json
from pathlib import Path

import pytest

from embedder.config import RunConfig
from embedder.pipeline import Pipeline

pytestmark = pytest.mark.slow


def run_pipeline(workdir, **overrides):
    config = RunConfig(encoder="cxn", scheme="amps", method="inner_product", **overrides)
    return Pipeline(config, workdir).run(families=["polygon_disk", "annulus"], count=20)


@pytest.fixture(scope="module")
def stress_run(tmp_path_factory):
    workdir = tmp_path_factory.mktemp("stress")
    return workdir, run_pipeline(workdir)


def test_stress_pipeline(stress_run):
    workdir, summary = stress_run
    assert len(summary["complexes"]) == 40
    assert summary["final_loss"] <= 0.5 * summary["initial_loss"]
    assert summary["metrics"]["nn_accuracy"] >= 0.8
    assert json.loads((workdir / "summary.json").read_text()) == summary


def test_triplet_pipeline(tmp_path):
    summary = run_pipeline(tmp_path, pool_mode="triplet", margin=1.0)
    assert summary["metrics"]["triplet_satisfaction"] >= 0.9


def test_same_seed_gives_identical_artifacts(stress_run, tmp_path):
    workdir, first = stress_run
    second = run_pipeline(tmp_path)

    def relative(summary, root):
        files = summary["embeddings"] + [summary["distance"], summary["model"], summary["pooled"]]
        return {str(Path(f).relative_to(root)): Path(f).read_bytes() for f in files}

    assert relative(first, workdir) == relative(second, tmp_path)
