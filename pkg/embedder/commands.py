"""
Command execution for the embedder CLI
"""

import json
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from utils.datasets import DEFAULT_SIZE_RANGE, generate_mixed_dataset
from utils.formats import (
    check_config_hash,
    parse_complex_file,
    read_dataset,
    read_matrix_file,
    read_params_file,
    write_complex_file,
    write_log_file,
    write_matrix_file,
    write_params_file,
)
from utils.render import render_complex

from .autoencoder import AutoencoderTrainer, encoder_dims, make_encoder, reconstruction_auc
from .config import RunConfig
from .errors import ArtifactError, ConfigError, EmbedderError, ShapeError
from .metrics import distance_matrix
from .pooling import (
    PoolingTrainer,
    nearest_neighbor_accuracy,
    rank_neighbors,
    stress_loss,
    triplet_satisfaction,
)

COMMANDS = ("build", "gen", "train-ae", "embed", "distmat", "train-pool", "eval", "render", "pipeline")


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


class CommandExecutor:
    """Executes CLI commands against explicit input and output paths"""

    def __init__(self, config: RunConfig, verbose: bool = False, progress_callback: Optional[Callable] = None):
        self.config = config
        self.config_hash = config.config_hash()
        self.verbose = verbose
        self.progress_callback = progress_callback

    def _emit_progress(self, event_type: str, data: dict):
        """Emit a progress event if callback is set"""
        if self.progress_callback:
            self.progress_callback(event_type, data)

    def execute(self, command: str, args: Dict) -> Dict:
        """Run one command; the result always echoes the resolved config and seed"""

        command_map = {
            "build": self.build,
            "gen": self.gen,
            "train-ae": self.train_ae,
            "embed": self.embed,
            "distmat": self.distmat,
            "train-pool": self.train_pool,
            "eval": self.evaluate,
            "render": self.render,
            "pipeline": self.pipeline,
        }

        if command not in command_map:
            raise ConfigError(f"unknown command '{command}'")

        if self.verbose:
            print(self.config.describe())
            print(f"🎲 Seed: {self.config.seed}")

        result = command_map[command](args)
        return {
            "command": command,
            "seed": self.config.seed,
            "config_hash": self.config_hash,
            "config": self.config.to_dict(),
            **result,
        }

    def _require(self, args: Dict, key: str):
        if args.get(key) in (None, [], ""):
            raise ConfigError(f"missing required argument '{key}'")
        return args[key]

    # ----- commands -----

    def build(self, args: Dict) -> Dict:
        """Print simplex counts and optionally write the neighborhood matrices"""
        X = parse_complex_file(self._require(args, "complex"))
        if self.verbose:
            print(f"\n🔺 {X.name}: counts {X.counts}, N̂ = {X.n_hat}")

        files = []
        out = args.get("out")
        if out:
            out = Path(out)
            files.append(write_matrix_file(out / "adjacency.txt", X.adjacency_matrix(), "adjacency", name=X.name))
            files.append(write_matrix_file(out / "coadjacency.txt", X.coadjacency_matrix(), "coadjacency", name=X.name))
            for m in range(X.dim):
                files.append(write_matrix_file(out / f"incidence_{m}.txt", X.coboundary_incidence(m), "incidence", name=X.name, m=m))
        return {"complex": X.name, "counts": X.counts, "n_hat": X.n_hat, "files": files}

    def gen(self, args: Dict) -> Dict:
        dataset = generate_mixed_dataset(
            self._require(args, "family"),
            int(args.get("count", 1)),
            (int(args.get("min_size", DEFAULT_SIZE_RANGE[0])), int(args.get("max_size", DEFAULT_SIZE_RANGE[1]))),
            float(args.get("noise", 0.1)),
            self.config.seed,
        )
        out = Path(self._require(args, "out"))
        files = [write_complex_file(X, out / f"{X.name}.json") for X in dataset]
        if self.verbose:
            print(f"✅ Generated {len(files)} complexes in {out}")
        return {"files": files}

    def train_ae(self, args: Dict) -> Dict:
        """Train one autoencoder per complex and store U_X, parameters and log"""
        dataset = read_dataset(self._require(args, "complexes"))
        out = Path(self._require(args, "out"))
        model = self.config.autoencoder_model()

        embeddings, auc = [], {}
        for i, X in enumerate(dataset, 1):
            self._emit_progress("complex_started", {"complex": X.name, "index": i, "total": len(dataset)})
            trainer = AutoencoderTrainer(
                model,
                epochs=self.config.epochs,
                optimizer=self.config.optimizer,
                learning_rate=self.config.learning_rate,
                batch_size=self.config.batch_size,
                seed=self.config.seed,
                verbose=self.verbose,
                progress_callback=self.progress_callback,
            )
            trained = trainer.train(X)
            embeddings.append(write_matrix_file(
                out / f"embedding_{X.name}.txt", trained.embedding, "embedding",
                config_hash=self.config_hash, name=X.name, label=X.label, dims=trained.dims,
            ))
            write_params_file(
                out / f"params_{X.name}.json", trained.params,
                kind="ae_params", config_hash=self.config_hash, name=X.name, model=model.to_dict(), dims=trained.dims,
            )
            write_log_file(out / f"ae_log_{X.name}.jsonl", trained.log)
            auc[X.name] = _finite_or_none(reconstruction_auc(model, X, trained.embedding))
        return {"embeddings": embeddings, "auc": auc}

    def embed(self, args: Dict) -> Dict:
        """Recompute U_X from stored autoencoder parameters"""
        X = parse_complex_file(self._require(args, "complex"))
        params_path = self._require(args, "params")
        doc = read_params_file(params_path)
        check_config_hash(doc.get("config_hash"), self.config_hash, params_path)
        if doc.get("name") != X.name:
            raise ArtifactError(f"{params_path}: parameters belong to '{doc.get('name')}', not '{X.name}'")

        model = self.config.autoencoder_model()
        U = make_encoder(model).forward(X, doc["params"])[0]
        dims = encoder_dims(model, X)
        expected = sum(X.counts[k] for k in dims)
        if U.shape[0] != expected:
            raise ShapeError(f"embedding has {U.shape[0]} rows, complex needs {expected}")
        path = write_matrix_file(
            self._require(args, "out"), U, "embedding",
            config_hash=self.config_hash, name=X.name, label=X.label, dims=dims,
        )
        return {"complex": X.name, "rows": int(U.shape[0]), "file": path}

    def distmat(self, args: Dict) -> Dict:
        dataset = read_dataset(self._require(args, "complexes"))
        if self.verbose:
            print(f"\n📏 Hausdorff distances over {len(dataset)} complexes")
        D = distance_matrix(dataset, self.config.sampling(), self.progress_callback)
        path = write_matrix_file(
            self._require(args, "out"), D, "distance",
            config_hash=self.config_hash, names=[X.name for X in dataset],
        )
        return {"size": len(dataset), "file": path}

    def _read_embeddings(self, paths: List) -> List:
        tables = []
        for path in paths:
            artifact = read_matrix_file(path, "embedding")
            check_config_hash(artifact.config_hash, self.config_hash, path)
            tables.append(artifact)
        return tables

    def _read_distance(self, path, names: List[str]) -> np.ndarray:
        artifact = read_matrix_file(path, "distance")
        check_config_hash(artifact.config_hash, self.config_hash, path)
        if "names" in artifact.meta and artifact.meta["names"] != names:
            raise ArtifactError(f"{path}: rows do not match the embedding order")
        return artifact.values

    def train_pool(self, args: Dict) -> Dict:
        tables = self._read_embeddings(self._require(args, "embeddings"))
        names = [t.meta.get("name") for t in tables]
        labels = [t.meta.get("label") for t in tables]
        distance = None
        if self.config.pool_mode == "stress":
            distance = self._read_distance(self._require(args, "distance"), names)

        trainer = PoolingTrainer(
            mode=self.config.pool_mode,
            epochs=self.config.pool_epochs,
            optimizer=self.config.optimizer,
            learning_rate=self.config.pool_learning_rate,
            margin=self.config.margin,
            seed=self.config.seed,
            verbose=self.verbose,
            progress_callback=self.progress_callback,
        )
        result = trainer.train([t.values for t in tables], distance=distance, labels=labels, names=names)

        out = Path(self._require(args, "out"))
        model_file = write_matrix_file(
            out / "pooling_model.txt", result.model.W, "pooling_model",
            config_hash=self.config_hash, mode=result.model.mode, margin=result.model.margin,
        )
        pooled_file = write_matrix_file(
            out / "pooled.txt", result.matrix, "pooled",
            config_hash=self.config_hash, names=names, labels=labels,
        )
        write_log_file(out / "pool_log.jsonl", result.log)
        return {
            "initial_loss": result.log[0]["loss"],
            "final_loss": result.log[-1]["loss"],
            "model": model_file,
            "pooled": pooled_file,
        }

    def evaluate(self, args: Dict) -> Dict:
        """Stress, 1-NN accuracy, triplet satisfaction, reconstruction AUC and ranking"""
        pooled_path = self._require(args, "pooled")
        pooled = read_matrix_file(pooled_path, "pooled")
        check_config_hash(pooled.config_hash, self.config_hash, pooled_path)
        H = pooled.values
        names = pooled.meta.get("names") or [str(i) for i in range(H.shape[0])]
        labels = pooled.meta.get("labels") or [None] * H.shape[0]

        metrics = {}
        if args.get("distance"):
            metrics["stress"] = stress_loss(H, self._read_distance(args["distance"], names))[0]
        if all(lab is not None for lab in labels):
            metrics["nn_accuracy"] = _finite_or_none(nearest_neighbor_accuracy(H, labels))
            metrics["triplet_satisfaction"] = _finite_or_none(triplet_satisfaction(H, labels, self.config.margin))

        if args.get("complexes") or args.get("embeddings"):
            metrics["auc"] = self._reconstruction(args)

        query = args.get("rank")
        if query is not None:
            if query not in names:
                raise ConfigError(f"unknown query complex '{query}'")
            nearest = rank_neighbors(H, names.index(query), int(args.get("top", 5)))
            metrics["neighbors"] = [names[i] for i in nearest]

        if self.verbose:
            for key, value in metrics.items():
                print(f"   {key:<22}{value}")
        return {"metrics": metrics}

    def _reconstruction(self, args: Dict) -> Dict:
        dataset = read_dataset(self._require(args, "complexes"))
        tables = {t.meta.get("name"): t for t in self._read_embeddings(self._require(args, "embeddings"))}
        model = self.config.autoencoder_model()
        auc = {}
        for X in dataset:
            if X.name not in tables:
                raise ArtifactError(f"no embedding table for complex '{X.name}'")
            auc[X.name] = _finite_or_none(reconstruction_auc(model, X, tables[X.name].values))
        finite = [v for v in auc.values() if v is not None]
        auc["mean"] = float(np.mean(finite)) if finite else None
        return auc

    def render(self, args: Dict) -> Dict:
        X = parse_complex_file(self._require(args, "complex"))
        path = render_complex(X, self._require(args, "out"), int(args.get("size", 512)), progress_callback=self.progress_callback)
        return {"complex": X.name, "file": path}

    def pipeline(self, args: Dict) -> Dict:
        from .pipeline import Pipeline

        pipeline = Pipeline(self.config, self._require(args, "workdir"), self.verbose, self.progress_callback)
        return pipeline.run(
            families=args.get("family") or ["polygon_disk", "annulus"],
            count=int(args.get("count", 20)),
            size_range=(int(args.get("min_size", DEFAULT_SIZE_RANGE[0])), int(args.get("max_size", DEFAULT_SIZE_RANGE[1]))),
            noise=float(args.get("noise", 0.1)),
        )


def run_command(command: str, args: Dict, overrides: Optional[Dict] = None, verbose: bool = True) -> int:
    """
    Resolve the config, execute a command and report the outcome

    Success prints the result as one JSON line on stdout and returns 0; any
    embedder or file-system error prints {"error", "command", "type"} as one
    JSON line on stderr and returns 1.
    """
    try:
        config = RunConfig.from_env(overrides=overrides)
        result = CommandExecutor(config, verbose=verbose).execute(command, args)
    except (EmbedderError, OSError) as e:
        print(json.dumps({"error": str(e), "command": command, "type": type(e).__name__}), file=sys.stderr)
        return 1
    print(json.dumps(result))
    return 0
