"""
File formats for complexes and pipeline artifacts

Complex files are JSON documents with a fixed set of fields. Matrix artifacts
(embedding tables, distance matrices, neighborhood matrices, the pooling
matrix, pooled embeddings) share one text schema: `# key: <json>` header lines
followed by `row col value` triplets. Floats are written with repr() so they
read back bit-identically.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from embedder.complex_core import SimplicialComplex, build_complex
from embedder.errors import ArtifactError, ComplexError
from embedder.numerics import ParamSet

COMPLEX_FIELDS = {"name", "label", "ambient_dim", "coords", "simplices"}


# ===== COMPLEX FILES =====

def _field_error(path, name: str, message: str) -> ComplexError:
    return ComplexError(f"{path}: field '{name}': {message}")


def parse_complex_document(doc, path="<complex>") -> SimplicialComplex:
    """Strictly validate a decoded complex document and build the complex"""
    if not isinstance(doc, dict):
        raise ComplexError(f"{path}: top level must be an object")
    unknown = sorted(set(doc) - COMPLEX_FIELDS)
    if unknown:
        raise ComplexError(f"{path}: unknown field(s) {unknown}")
    for required in ("name", "simplices"):
        if required not in doc:
            raise _field_error(path, required, "missing")

    name = doc["name"]
    if not isinstance(name, str) or not name:
        raise _field_error(path, "name", "must be a non-empty string")
    label = doc.get("label")
    if label is not None and not isinstance(label, str):
        raise _field_error(path, "label", "must be a string or null")

    simplices = doc["simplices"]
    if not isinstance(simplices, list) or not simplices:
        raise _field_error(path, "simplices", "must be a non-empty list")
    for i, verts in enumerate(simplices):
        if not isinstance(verts, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in verts):
            raise _field_error(path, f"simplices[{i}]", "must be a list of integer vertex ids")

    coords = doc.get("coords")
    ambient_dim = doc.get("ambient_dim")
    if coords is not None:
        if not isinstance(coords, dict):
            raise _field_error(path, "coords", "must map vertex ids to points")
        for key, point in coords.items():
            if not key.isdigit():
                raise _field_error(path, f"coords[{key}]", "vertex id must be a non-negative integer")
            if not isinstance(point, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in point
            ):
                raise _field_error(path, f"coords[{key}]", "must be a list of numbers")
            if ambient_dim is not None and len(point) != ambient_dim:
                raise _field_error(path, f"coords[{key}]", f"expected {ambient_dim} components, got {len(point)}")
        coords = {int(k): v for k, v in coords.items()}
    elif ambient_dim is not None:
        raise _field_error(path, "ambient_dim", "given without coords")

    try:
        return build_complex(simplices, coords=coords, name=name, label=label)
    except ComplexError as e:
        raise ComplexError(f"{path}: {e}") from e


def parse_complex_file(path) -> SimplicialComplex:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ComplexError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    return parse_complex_document(doc, path)


def complex_document(X: SimplicialComplex) -> Dict:
    doc = {"name": X.name, "label": X.label}
    if X.coords:
        doc["ambient_dim"] = X.ambient_dim
        doc["coords"] = {str(v): [float(x) for x in X.coords[v]] for v in sorted(X.coords)}
    doc["simplices"] = [list(s) for s in X.maximal_simplices()]
    return doc


def write_complex_file(X: SimplicialComplex, path) -> str:
    if not X.name:
        raise ComplexError("a complex needs a name to be written")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(complex_document(X), indent=2) + "\n", encoding="utf-8")
    return str(path)


def read_dataset(paths: Sequence) -> List[SimplicialComplex]:
    if not paths:
        raise ArtifactError("no complex files given")
    dataset = [parse_complex_file(p) for p in paths]
    names = [X.name for X in dataset]
    duplicates = sorted({n for n in names if names.count(n) > 1})
    if duplicates:
        raise ComplexError(f"duplicate complex names: {duplicates}")
    return dataset


# ===== MATRIX ARTIFACTS =====

@dataclass
class MatrixArtifact:
    kind: str
    values: np.ndarray
    meta: Dict = field(default_factory=dict)

    @property
    def config_hash(self) -> Optional[str]:
        return self.meta.get("config_hash")


def write_matrix_file(path, matrix, kind: str, **meta) -> str:
    """
    Write a matrix as `row col value` triplets

    Args:
        path: Output file
        matrix: Dense array or scipy sparse matrix
        kind: Artifact kind, checked on read
        **meta: Extra JSON-serializable header fields (config_hash, name, ...)

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    coo = sp.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))

    lines = [f"# kind: {json.dumps(kind)}", f"# shape: {json.dumps(list(coo.shape))}"]
    lines += [f"# {key}: {json.dumps(value)}" for key, value in meta.items() if value is not None]
    for i in order:
        value = coo.data[i]
        text = str(int(value)) if np.issubdtype(coo.data.dtype, np.integer) else repr(float(value))
        lines.append(f"{coo.row[i]} {coo.col[i]} {text}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def read_matrix_file(path, kind: Optional[str] = None) -> MatrixArtifact:
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing file: {path}")

    meta, rows, cols, vals = {}, [], [], []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            if line.startswith("#"):
                key, _, raw = line[1:].partition(":")
                meta[key.strip()] = json.loads(raw)
                continue
            r, c, v = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(v))
        except ValueError as e:
            raise ArtifactError(f"{path}: line {lineno}: {e}") from e

    if "kind" not in meta or "shape" not in meta:
        raise ArtifactError(f"{path}: header must carry kind and shape")
    if kind is not None and meta["kind"] != kind:
        raise ArtifactError(f"{path}: expected a {kind} artifact, found {meta['kind']}")
    shape = tuple(meta.pop("shape"))
    values = np.zeros(shape, dtype=np.float64)
    try:
        values[rows, cols] = vals
    except IndexError as e:
        raise ArtifactError(f"{path}: entry outside shape {shape}") from e
    return MatrixArtifact(meta.pop("kind"), values, meta)


def check_config_hash(artifact_hash: Optional[str], expected: str, path) -> None:
    """Artifacts without a hash (user supplied) are accepted"""
    if artifact_hash is not None and artifact_hash != expected:
        raise ArtifactError(f"{path}: produced by config {artifact_hash}, current config is {expected}")


# ===== PARAMETERS AND LOGS =====

def write_params_file(path, params: ParamSet, **meta) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = dict(meta)
    doc["params"] = {key: {"shape": list(value.shape), "values": value.ravel().tolist()} for key, value in sorted(params.items())}
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")
    return str(path)


def read_params_file(path) -> Dict:
    """Returns the header fields plus 'params' decoded to arrays"""
    path = Path(path)
    if not path.exists():
        raise ArtifactError(f"missing file: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        doc["params"] = {
            key: np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
            for key, entry in doc["params"].items()
        }
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise ArtifactError(f"{path}: malformed parameter file: {e}") from e
    return doc


def write_log_file(path, records: List[Dict]) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records), encoding="utf-8")
    return str(path)
