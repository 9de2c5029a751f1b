"""
Message Passing - AMPS, CMPS and HCMPS layer stacks over a simplicial complex

Every layer exposes an exact backward pass so the autoencoder can train the
encoder weights with hand-derived gradients.
"""

import weakref
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .complex_core import SimplicialComplex
from .errors import ConfigError, ShapeError
from .numerics import ParamSet, as_dense, make_rng, relu

SCHEMES = ("amps", "cmps", "hcmps")
FEATURE_SCHEMES = ("structural", "ones", "given")


@dataclass(frozen=True)
class FeatureSet:
    """Per-dimension feature blocks H_0..H_n, rows in canonical order"""

    blocks: Tuple[np.ndarray, ...]

    def __getitem__(self, m: int) -> np.ndarray:
        return self.blocks[m]

    def __len__(self):
        return len(self.blocks)

    @property
    def widths(self) -> List[int]:
        return [b.shape[1] for b in self.blocks]


# ===== OPERATORS =====

def _sym_normalize(adj: sp.spmatrix) -> sp.csr_matrix:
    """D^{-1/2} (A + I) D^{-1/2} with D the row sums of A + I"""
    size = adj.shape[0]
    loops = (adj.astype(np.float64) + sp.identity(size, format="csr")).tocsr()
    deg = np.asarray(loops.sum(axis=1)).ravel()
    scale = sp.diags(1.0 / np.sqrt(deg))
    return (scale @ loops @ scale).tocsr()


def _row_normalize(mat: sp.spmatrix) -> sp.csr_matrix:
    """Mean over stored neighbors; rows without neighbors pass zero"""
    mat = mat.astype(np.float64).tocsr()
    sums = np.asarray(mat.sum(axis=1)).ravel()
    inv = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
    return (sp.diags(inv) @ mat).tocsr()


@dataclass(frozen=True)
class ComplexOperators:
    """Normalized propagation operators derived once per complex"""

    adj: Dict[int, sp.csr_matrix]      # m < n: normalized A^m_adj
    up: Dict[int, sp.csr_matrix]       # m < n: row-normalized B_m
    co: Dict[int, sp.csr_matrix]       # m > 0: normalized A^m_co
    down: Dict[int, sp.csr_matrix]     # m > 0: row-normalized B_{m-1}^T
    down_pairs: Dict[int, Tuple[np.ndarray, np.ndarray]]  # (x in X^m, facet in X^{m-1})
    up_pairs: Dict[int, Tuple[np.ndarray, np.ndarray]]    # (x in X^m, cofacet in X^{m+1})


# Operators live exactly as long as their complex
_OPERATORS: "weakref.WeakKeyDictionary[SimplicialComplex, ComplexOperators]" = weakref.WeakKeyDictionary()


def operators_for(X: SimplicialComplex) -> ComplexOperators:
    ops = _OPERATORS.get(X)
    if ops is None:
        ops = _OPERATORS[X] = _build_operators(X)
    return ops


def _build_operators(X: SimplicialComplex) -> ComplexOperators:
    adj, up, co, down, down_pairs, up_pairs = {}, {}, {}, {}, {}, {}
    for m in range(X.dim):
        B = X.coboundary_incidence(m)
        adj[m] = _sym_normalize(X.per_dim_adjacency(m))
        up[m] = _row_normalize(B)
        coo = B.tocoo()
        order = np.lexsort((coo.col, coo.row))
        up_pairs[m] = (coo.row[order].astype(np.int64), coo.col[order].astype(np.int64))
        down[m + 1] = _row_normalize(B.T)
        order = np.lexsort((coo.row, coo.col))
        down_pairs[m + 1] = (coo.col[order].astype(np.int64), coo.row[order].astype(np.int64))
    for m in range(1, X.dim + 1):
        co[m] = _sym_normalize(X.per_dim_coadjacency(m))
    return ComplexOperators(adj, up, co, down, down_pairs, up_pairs)


# ===== INITIAL FEATURES =====

def init_features(
    X: SimplicialComplex,
    scheme: str = "structural",
    given: Optional[Sequence[np.ndarray]] = None,
    normalize: bool = True,
) -> FeatureSet:
    """
    Initial cell features H^(0)

    Args:
        X: The complex
        scheme: structural | ones | given
        given: Per-dimension matrices when scheme is 'given'
        normalize: Column-wise max normalization of structural features

    Returns:
        FeatureSet with one block per dimension
    """
    if scheme == "ones":
        return FeatureSet(tuple(np.ones((c, 1)) for c in X.counts))

    if scheme == "given":
        if given is None or len(given) != X.dim + 1:
            raise ShapeError(f"given features: expected {X.dim + 1} blocks")
        blocks = tuple(as_dense(g, f"H_{m}") for m, g in enumerate(given))
        for m, block in enumerate(blocks):
            if block.shape[0] != X.counts[m]:
                raise ShapeError(f"given features: H_{m} has shape {block.shape}, expected {X.counts[m]} rows")
        if len({b.shape[1] for b in blocks}) != 1:
            raise ShapeError(f"given features: widths differ {[b.shape[1] for b in blocks]}")
        return FeatureSet(blocks)

    if scheme != "structural":
        raise ConfigError(f"unknown feature scheme '{scheme}'")

    rows = np.array(
        [[len(X.cofacets(s)), len(X.facets(s)), s.dim, 1.0] for s in X.simplices],
        dtype=np.float64,
    )
    if normalize:
        peak = rows.max(axis=0)
        rows = rows / np.where(peak > 0, peak, 1.0)
    offsets = X.offsets()
    return FeatureSet(tuple(rows[o:o + c] for o, c in zip(offsets, X.counts)))


# ===== LAYERS =====

def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    scale = np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, scale, size=(fan_in, fan_out))


def _check_weight(params: ParamSet, key: str, rows: int, cols: int) -> np.ndarray:
    if key not in params:
        raise ShapeError(f"missing layer parameter '{key}'")
    w = params[key]
    if w.shape != (rows, cols):
        raise ShapeError(f"width mismatch for '{key}': got {w.shape}, expected {(rows, cols)}")
    return w


class ConvolutionLayer:
    """
    Degree-normalized convolution on the same-dimension path plus mean-pooled
    incidence on the cross-dimension path:

        H'_m = relu(N_m H_m Θself + P_m H_c Θcross)

    AMPS: N = normalized A^m_adj, c = m + 1, m < n (H_n passes through).
    CMPS: N = normalized A^m_co,  c = m - 1, m > 0 (H_0 passes through).
    """

    def __init__(self, scheme: str):
        if scheme not in ("amps", "cmps"):
            raise ConfigError(f"convolution layer does not support '{scheme}'")
        self.scheme = scheme

    def updated_dims(self, X: SimplicialComplex) -> List[int]:
        return list(range(X.dim)) if self.scheme == "amps" else list(range(1, X.dim + 1))

    def _route(self, ops: ComplexOperators, m: int):
        if self.scheme == "amps":
            return ops.adj[m], ops.up[m], m + 1
        return ops.co[m], ops.down[m], m - 1

    def init_params(self, X: SimplicialComplex, in_widths: List[int], width: int, rng) -> ParamSet:
        params = {}
        for m in self.updated_dims(X):
            cross = m + 1 if self.scheme == "amps" else m - 1
            params[f"m{m}.self"] = _glorot(rng, in_widths[m], width)
            params[f"m{m}.cross"] = _glorot(rng, in_widths[cross], width)
        return params

    def forward(self, X: SimplicialComplex, H: FeatureSet, params: ParamSet):
        ops = operators_for(X)
        out = list(H.blocks)
        cache = {}
        for m in self.updated_dims(X):
            same_op, cross_op, c = self._route(ops, m)
            width = params.get(f"m{m}.self", np.zeros((0, 0))).shape[1]
            w_self = _check_weight(params, f"m{m}.self", H[m].shape[1], width)
            w_cross = _check_weight(params, f"m{m}.cross", H[c].shape[1], width)
            same = same_op @ H[m]
            cross = cross_op @ H[c]
            pre = same @ w_self + cross @ w_cross
            out[m] = relu(pre)
            cache[m] = (same, cross, pre)
        return FeatureSet(tuple(out)), cache

    def backward(self, X: SimplicialComplex, H: FeatureSet, params: ParamSet, cache, d_out: List[np.ndarray]):
        ops = operators_for(X)
        updated = set(self.updated_dims(X))
        d_in = [np.zeros_like(b) for b in H.blocks]
        grads = {}
        for m in range(len(H)):
            if m not in updated:
                d_in[m] += d_out[m]
        for m in sorted(updated):
            same_op, cross_op, c = self._route(ops, m)
            same, cross, pre = cache[m]
            g = d_out[m] * (pre > 0)
            grads[f"m{m}.self"] = same.T @ g
            grads[f"m{m}.cross"] = cross.T @ g
            d_in[m] += same_op.T @ (g @ params[f"m{m}.self"].T)
            d_in[c] += cross_op.T @ (g @ params[f"m{m}.cross"].T)
        return d_in, grads


class HomologyLayer:
    """
    HCMPS: every simplex aggregates messages from its facets and cofacets.

        φ(h_x, h_a) = relu(concat(h_x, h_a) Θφ)     one Θφ per (m, dim(a))
        s_x         = Σ_{a ∈ I(x)} φ(h_x, h_a)
        h'_x        = relu(concat(h_x, s_x) Θα)

    With split=True boundary and coboundary sums stay separate:
    h'_x = relu(concat(h_x, s_down, s_up) Θα).
    """

    scheme = "hcmps"

    def __init__(self, split: bool = False):
        self.split = split

    def updated_dims(self, X: SimplicialComplex) -> List[int]:
        return list(range(X.dim + 1))

    def init_params(self, X: SimplicialComplex, in_widths: List[int], width: int, rng) -> ParamSet:
        params = {}
        for m in range(X.dim + 1):
            if m > 0:
                params[f"m{m}.phi_down"] = _glorot(rng, in_widths[m] + in_widths[m - 1], width)
            if m < X.dim:
                params[f"m{m}.phi_up"] = _glorot(rng, in_widths[m] + in_widths[m + 1], width)
            agg = 2 * width if self.split else width
            params[f"m{m}.alpha"] = _glorot(rng, in_widths[m] + agg, width)
        return params

    def _messages(self, H: FeatureSet, m: int, other: int, pairs, w_phi: np.ndarray):
        rows, cols = pairs
        inp = np.hstack([H[m][rows], H[other][cols]])
        pre = inp @ w_phi
        total = np.zeros((H[m].shape[0], w_phi.shape[1]))
        np.add.at(total, rows, relu(pre))
        return total, (inp, pre)

    def forward(self, X: SimplicialComplex, H: FeatureSet, params: ParamSet):
        ops = operators_for(X)
        out, cache = [], {}
        for m in range(X.dim + 1):
            alpha = params.get(f"m{m}.alpha")
            if alpha is None:
                raise ShapeError(f"missing layer parameter 'm{m}.alpha'")
            width = alpha.shape[1]
            s_down = np.zeros((X.counts[m], width))
            s_up = np.zeros((X.counts[m], width))
            entry = {}
            if m > 0:
                w = _check_weight(params, f"m{m}.phi_down", H[m].shape[1] + H[m - 1].shape[1], width)
                s_down, entry["down"] = self._messages(H, m, m - 1, ops.down_pairs[m], w)
            if m < X.dim:
                w = _check_weight(params, f"m{m}.phi_up", H[m].shape[1] + H[m + 1].shape[1], width)
                s_up, entry["up"] = self._messages(H, m, m + 1, ops.up_pairs[m], w)

            agg = [s_down, s_up] if self.split else [s_down + s_up]
            a_in = np.hstack([H[m]] + agg)
            _check_weight(params, f"m{m}.alpha", a_in.shape[1], width)
            a_pre = a_in @ alpha
            out.append(relu(a_pre))
            entry["alpha"] = (a_in, a_pre)
            cache[m] = entry
        return FeatureSet(tuple(out)), cache

    def backward(self, X: SimplicialComplex, H: FeatureSet, params: ParamSet, cache, d_out: List[np.ndarray]):
        ops = operators_for(X)
        d_in = [np.zeros_like(b) for b in H.blocks]
        grads = {}
        for m in range(X.dim + 1):
            alpha = params[f"m{m}.alpha"]
            width = alpha.shape[1]
            w_m = H[m].shape[1]
            a_in, a_pre = cache[m]["alpha"]
            g = d_out[m] * (a_pre > 0)
            grads[f"m{m}.alpha"] = a_in.T @ g
            d_a_in = g @ alpha.T
            d_in[m] += d_a_in[:, :w_m]
            if self.split:
                d_down, d_up = d_a_in[:, w_m:w_m + width], d_a_in[:, w_m + width:]
            else:
                d_down = d_up = d_a_in[:, w_m:]

            for key, other, pairs, d_sum in (
                ("down", m - 1, ops.down_pairs.get(m), d_down),
                ("up", m + 1, ops.up_pairs.get(m), d_up),
            ):
                if key not in cache[m]:
                    continue
                rows, cols = pairs
                inp, pre = cache[m][key]
                w_phi = params[f"m{m}.phi_{key}"]
                g_msg = d_sum[rows] * (pre > 0)
                grads[f"m{m}.phi_{key}"] = inp.T @ g_msg
                d_inp = g_msg @ w_phi.T
                np.add.at(d_in[m], rows, d_inp[:, :w_m])
                np.add.at(d_in[other], cols, d_inp[:, w_m:])
        return d_in, grads


def make_layer(scheme: str, hcmps_split: bool = False):
    if scheme == "hcmps":
        return HomologyLayer(split=hcmps_split)
    if scheme in ("amps", "cmps"):
        return ConvolutionLayer(scheme)
    raise ConfigError(f"unknown message passing scheme '{scheme}'")


def amps_layer(X: SimplicialComplex, H: FeatureSet, params: ParamSet) -> FeatureSet:
    return ConvolutionLayer("amps").forward(X, H, params)[0]


def cmps_layer(X: SimplicialComplex, H: FeatureSet, params: ParamSet) -> FeatureSet:
    return ConvolutionLayer("cmps").forward(X, H, params)[0]


def hcmps_layer(X: SimplicialComplex, H: FeatureSet, params: ParamSet, split: bool = False) -> FeatureSet:
    return HomologyLayer(split=split).forward(X, H, params)[0]


# ===== ENCODER =====

def embedded_dims(X: SimplicialComplex, scheme: str) -> List[int]:
    """Dimensions whose rows make up U_X for a scheme"""
    if scheme == "amps":
        return list(range(X.dim))
    if scheme == "cmps":
        return list(range(1, X.dim + 1))
    return list(range(X.dim + 1))


class CXNEncoder:
    """L-layer cell complex network producing the embedding table U_X"""

    def __init__(
        self,
        scheme: str = "amps",
        layers: int = 2,
        width: int = 16,
        feature_scheme: str = "structural",
        hcmps_split: bool = False,
    ):
        if scheme not in SCHEMES:
            raise ConfigError(f"unknown message passing scheme '{scheme}'")
        if layers < 1:
            raise ConfigError("a cell complex network needs at least one layer")
        self.scheme = scheme
        self.layers = layers
        self.width = width
        self.feature_scheme = feature_scheme
        self.layer = make_layer(scheme, hcmps_split)

    def embedded_dims(self, X: SimplicialComplex) -> List[int]:
        return embedded_dims(X, self.scheme)

    def features(self, X: SimplicialComplex, given=None) -> FeatureSet:
        return init_features(X, self.feature_scheme, given=given)

    def init_params(self, X: SimplicialComplex, rng: np.random.Generator, given=None) -> ParamSet:
        widths = self.features(X, given).widths
        updated = set(self.layer.updated_dims(X))
        params = {}
        for k in range(1, self.layers + 1):
            layer_params = self.layer.init_params(X, widths, self.width, rng)
            params.update({f"layer{k}/{name}": w for name, w in layer_params.items()})
            widths = [self.width if m in updated else w for m, w in enumerate(widths)]
        return params

    @staticmethod
    def layer_params(params: ParamSet, k: int) -> ParamSet:
        prefix = f"layer{k}/"
        return {name[len(prefix):]: w for name, w in params.items() if name.startswith(prefix)}

    def forward(self, X: SimplicialComplex, params: ParamSet, given=None):
        """Return (U_X, trace) where trace feeds backward()"""
        H = self.features(X, given)
        trace = []
        for k in range(1, self.layers + 1):
            lp = self.layer_params(params, k)
            out, cache = self.layer.forward(X, H, lp)
            trace.append((H, lp, cache))
            H = out
        dims = self.embedded_dims(X)
        if not dims:
            return np.zeros((0, self.width)), (trace, H)
        return np.vstack([H[m] for m in dims]), (trace, H)

    def backward(self, X: SimplicialComplex, trace, d_U: np.ndarray) -> ParamSet:
        layers, final = trace
        d_H = [np.zeros_like(b) for b in final.blocks]
        offset = 0
        for m in self.embedded_dims(X):
            rows = final[m].shape[0]
            d_H[m] = d_U[offset:offset + rows]
            offset += rows

        grads = {}
        for k in range(self.layers, 0, -1):
            H, lp, cache = layers[k - 1]
            d_H, layer_grads = self.layer.backward(X, H, lp, cache, d_H)
            grads.update({f"layer{k}/{name}": g for name, g in layer_grads.items()})
        return grads


def cxn_encode(
    X: SimplicialComplex,
    scheme: str,
    layers: int,
    params: ParamSet,
    width: Optional[int] = None,
    feature_scheme: str = "structural",
    given=None,
    hcmps_split: bool = False,
) -> np.ndarray:
    """Apply L layers and return U_X over the scheme's embedded simplex set"""
    if width is None:
        width = next(iter(params.values())).shape[1] if params else 16
    encoder = CXNEncoder(scheme, layers, width, feature_scheme, hcmps_split)
    return encoder.forward(X, params, given)[0]


def random_encoder_params(X: SimplicialComplex, encoder: CXNEncoder, seed: int, given=None) -> ParamSet:
    return encoder.init_params(X, make_rng(seed, "cxn-init"), given)
