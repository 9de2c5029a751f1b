"""
End-to-end pipeline: gen -> train-ae -> distmat -> train-pool -> eval
"""

import json
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple

from utils.datasets import DEFAULT_SIZE_RANGE

from .commands import CommandExecutor
from .config import RunConfig


class Pipeline:
    """Runs every stage of the embedder into one work directory"""

    def __init__(
        self,
        config: RunConfig,
        workdir,
        verbose: bool = False,
        progress_callback: Optional[Callable] = None,
    ):
        self.config = config
        self.workdir = Path(workdir)
        self.verbose = verbose
        self.progress_callback = progress_callback
        self.executor = CommandExecutor(config, verbose=verbose, progress_callback=progress_callback)

    def _emit_progress(self, event_type: str, data: dict):
        """Emit a progress event if callback is set"""
        if self.progress_callback:
            self.progress_callback(event_type, data)

    def _stage(self, name: str, method: Callable, args: Dict) -> Dict:
        if self.verbose:
            print(f"\n{'=' * 60}\n▶️  Stage: {name}\n{'=' * 60}")
        self._emit_progress("stage_started", {"stage": name})
        result = method(args)
        self._emit_progress("stage_complete", {"stage": name})
        return result

    def run(
        self,
        families: Sequence[str] = ("polygon_disk", "annulus"),
        count: int = 20,
        size_range: Tuple[int, int] = DEFAULT_SIZE_RANGE,
        noise: float = 0.1,
    ) -> Dict:
        """
        Generate a labelled dataset and carry it through every stage

        Returns:
            Artifact paths, pooling losses and evaluation metrics; the same
            summary is written to <workdir>/summary.json
        """
        ex = self.executor
        complexes = self._stage("gen", ex.gen, {
            "family": list(families),
            "count": count,
            "min_size": size_range[0],
            "max_size": size_range[1],
            "noise": noise,
            "out": str(self.workdir / "complexes"),
        })["files"]

        embeddings = self._stage("train-ae", ex.train_ae, {
            "complexes": complexes,
            "out": str(self.workdir / "autoencoders"),
        })["embeddings"]

        distance = self._stage("distmat", ex.distmat, {
            "complexes": complexes,
            "out": str(self.workdir / "distance.txt"),
        })["file"]

        pooling = self._stage("train-pool", ex.train_pool, {
            "embeddings": embeddings,
            "distance": distance,
            "out": str(self.workdir / "pooling"),
        })

        metrics = self._stage("eval", ex.evaluate, {
            "pooled": pooling["pooled"],
            "distance": distance,
            "complexes": complexes,
            "embeddings": embeddings,
        })["metrics"]

        summary = {
            "complexes": complexes,
            "embeddings": embeddings,
            "distance": distance,
            "model": pooling["model"],
            "pooled": pooling["pooled"],
            "initial_loss": pooling["initial_loss"],
            "final_loss": pooling["final_loss"],
            "metrics": metrics,
        }
        (self.workdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        if self.verbose:
            print(f"\n✅ Pipeline complete: pooling loss {summary['initial_loss']:.4f} -> {summary['final_loss']:.4f}")
        return summary
