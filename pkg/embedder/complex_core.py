"""
Complex Core - combinatorial representation of an unoriented simplicial
complex and the neighborhood matrices defined over it
"""

from functools import cached_property
from itertools import combinations
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .errors import ComplexError


class Simplex(tuple):
    """A simplex in canonical form: strictly increasing vertex ids"""

    def __new__(cls, vertices: Iterable[int]):
        verts = [int(v) for v in vertices]
        if not verts or any(v < 0 for v in verts) or len(set(verts)) != len(verts):
            raise ComplexError(f"malformed simplex: {verts}")
        return super().__new__(cls, sorted(verts))

    @property
    def vertices(self) -> Tuple[int, ...]:
        return tuple(self)

    @property
    def dim(self) -> int:
        return len(self) - 1

    def __repr__(self):
        return f"Simplex({list(self)})"


def canonical_key(simplex: Sequence[int]) -> Tuple[int, Tuple[int, ...]]:
    """Sort key for canonical order: dimension first, then lexicographic"""
    return len(simplex), tuple(simplex)


class SimplicialComplex:
    """
    Face-closed, canonically indexed set of simplices.

    Instances are immutable after construction; derived matrices are computed
    lazily and cached.
    """

    def __init__(
        self,
        simplices: List[Simplex],
        coords: Optional[Dict[int, np.ndarray]] = None,
        name: Optional[str] = None,
        label: Optional[str] = None,
    ):
        self.simplices: Tuple[Simplex, ...] = tuple(sorted(simplices, key=canonical_key))
        self.coords = coords
        self.name = name
        self.label = label

        self.dim = max(s.dim for s in self.simplices)
        self.by_dim: List[Tuple[Simplex, ...]] = [
            tuple(s for s in self.simplices if s.dim == k) for k in range(self.dim + 1)
        ]
        self.counts: List[int] = [len(block) for block in self.by_dim]
        self.index: Dict[Simplex, int] = {s: i for i, s in enumerate(self.simplices)}
        self.local_index: Dict[Simplex, int] = {
            s: i for block in self.by_dim for i, s in enumerate(block)
        }

        # Facet and cofacet lookups, both in canonical order
        facet_map: Dict[Simplex, Tuple[Simplex, ...]] = {}
        cofacet_lists: Dict[Simplex, List[Simplex]] = {s: [] for s in self.simplices}
        for s in self.simplices:
            faces = tuple(sorted((Simplex(f) for f in combinations(s, len(s) - 1)), key=canonical_key)) if s.dim > 0 else ()
            facet_map[s] = faces
            for f in faces:
                cofacet_lists[f].append(s)
        self._facets = facet_map
        self._cofacets = {s: tuple(v) for s, v in cofacet_lists.items()}

    # ----- sizes -----

    @property
    def n(self) -> int:
        return self.dim

    @property
    def size(self) -> int:
        """Total number of simplices N"""
        return len(self.simplices)

    @property
    def n_hat(self) -> int:
        """N - |X^n|, the number of simplices below the top dimension"""
        return self.size - self.counts[self.dim]

    @property
    def ambient_dim(self) -> Optional[int]:
        if not self.coords:
            return None
        return len(next(iter(self.coords.values())))

    def offsets(self) -> List[int]:
        """Global ordinal of the first simplex of each dimension"""
        return [int(v) for v in np.concatenate([[0], np.cumsum(self.counts)[:-1]])]

    def maximal_simplices(self) -> List[Simplex]:
        return [s for s in self.simplices if not self._cofacets[s]]

    def __contains__(self, item) -> bool:
        try:
            return Simplex(item) in self.index
        except ComplexError:
            return False

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"SimplicialComplex(name={self.name!r}, counts={self.counts})"

    def same_structure(self, other: "SimplicialComplex") -> bool:
        """Index-level equality (simplices, ordering, coordinates)"""
        if self.simplices != other.simplices:
            return False
        if (self.coords is None) != (other.coords is None):
            return False
        if self.coords is not None:
            return all(np.array_equal(self.coords[v], other.coords[v]) for v in self.coords)
        return True

    # ----- incidence -----

    def _lookup(self, c) -> Simplex:
        s = c if isinstance(c, Simplex) else Simplex(c)
        if s not in self.index:
            raise ComplexError(f"unknown simplex: {list(s)}")
        return s

    def facets(self, c) -> Tuple[Simplex, ...]:
        return self._facets[self._lookup(c)]

    def cofacets(self, c) -> Tuple[Simplex, ...]:
        return self._cofacets[self._lookup(c)]

    def _pair(self, a, b) -> Tuple[Simplex, Simplex]:
        sa, sb = self._lookup(a), self._lookup(b)
        if sa.dim != sb.dim:
            raise ComplexError(f"dimension mismatch: {sa.dim} vs {sb.dim}")
        return sa, sb

    def co_intersection(self, a, b) -> set:
        """CO[a, b]: the common cofacets of two equal-dimension simplices"""
        sa, sb = self._pair(a, b)
        return set(self._cofacets[sa]) & set(self._cofacets[sb])

    def facet_intersection(self, a, b) -> set:
        """C[a, b]: the common facets of two equal-dimension simplices"""
        sa, sb = self._pair(a, b)
        return set(self._facets[sa]) & set(self._facets[sb])

    def is_adjacent(self, a, b) -> bool:
        sa, sb = self._pair(a, b)
        return sa != sb and bool(self.co_intersection(sa, sb))

    def is_coadjacent(self, a, b) -> bool:
        sa, sb = self._pair(a, b)
        return sa != sb and bool(self.facet_intersection(sa, sb))

    # ----- neighborhood matrices -----

    def _pair_counts(self, size: int, groups: Iterable[Sequence[Simplex]]) -> sp.csr_matrix:
        rows, cols = [], []
        for group in groups:
            ids = [self.local_index[s] for s in group]
            for i, j in combinations(ids, 2):
                rows += [i, j]
                cols += [j, i]
        data = np.ones(len(rows), dtype=np.int64)
        # duplicate (i, j) entries are summed, giving |CO| or |C|
        mat = sp.coo_matrix((data, (rows, cols)), shape=(size, size), dtype=np.int64).tocsr()
        mat.sum_duplicates()
        mat.eliminate_zeros()
        return mat

    def per_dim_adjacency(self, k: int) -> sp.csr_matrix:
        """A^k_adj, 0 <= k < n: entry |CO[a, b]| for adjacent k-simplices"""
        if k < 0 or k >= self.dim:
            raise ComplexError(f"no adjacency at top dimension (k={k}, n={self.dim})")
        return self._adjacency_blocks[k]

    @cached_property
    def _adjacency_blocks(self) -> List[sp.csr_matrix]:
        return [
            self._pair_counts(self.counts[k], (self._facets[c] for c in self.by_dim[k + 1]))
            for k in range(self.dim)
        ]

    def adjacency_matrix(self) -> sp.csr_matrix:
        """A_adj over X^{<n}, block-diagonal in canonical order (N_hat x N_hat)"""
        if self.dim == 0:
            return sp.csr_matrix((0, 0), dtype=np.int64)
        return sp.block_diag(self._adjacency_blocks, format="csr", dtype=np.int64)

    def per_dim_coadjacency(self, k: int) -> sp.csr_matrix:
        """A^k_co, 0 < k <= n: entry |C[a, b]| for co-adjacent k-simplices"""
        if k <= 0 or k > self.dim:
            raise ComplexError(f"no co-adjacency at dimension {k} (n={self.dim})")
        return self._coadjacency_blocks[k - 1]

    @cached_property
    def _coadjacency_blocks(self) -> List[sp.csr_matrix]:
        return [
            self._pair_counts(self.counts[k], (self._cofacets[c] for c in self.by_dim[k - 1]))
            for k in range(1, self.dim + 1)
        ]

    def coadjacency_matrix(self) -> sp.csr_matrix:
        """A_co over X^{>0}, block-diagonal in canonical order"""
        if self.dim == 0:
            return sp.csr_matrix((0, 0), dtype=np.int64)
        return sp.block_diag(self._coadjacency_blocks, format="csr", dtype=np.int64)

    def coboundary_incidence(self, m: int) -> sp.csr_matrix:
        """B_m: |X^m| x |X^{m+1}|, entry 1 iff the m-simplex is a facet"""
        if m < 0 or m >= self.dim:
            raise ComplexError(f"no coboundary at top dimension (m={m}, n={self.dim})")
        return self._incidence_blocks[m]

    @cached_property
    def _incidence_blocks(self) -> List[sp.csr_matrix]:
        blocks = []
        for m in range(self.dim):
            rows, cols = [], []
            for j, c in enumerate(self.by_dim[m + 1]):
                for f in self._facets[c]:
                    rows.append(self.local_index[f])
                    cols.append(j)
            data = np.ones(len(rows), dtype=np.int64)
            blocks.append(sp.csr_matrix((data, (rows, cols)), shape=(self.counts[m], self.counts[m + 1])))
        return blocks


def build_complex(
    maximal: Sequence[Iterable[int]],
    coords: Optional[Mapping[int, Sequence[float]]] = None,
    name: Optional[str] = None,
    label: Optional[str] = None,
) -> SimplicialComplex:
    """
    Build the downward closure of a list of vertex sets

    Args:
        maximal: Vertex-id sets; faces among them are absorbed
        coords: Optional vertex id -> point table (every vertex required)
        name: Optional complex name
        label: Optional class label

    Returns:
        SimplicialComplex in canonical order
    """
    if not maximal:
        raise ComplexError("empty complex")

    closure = set()
    for verts in maximal:
        top = Simplex(verts)
        if top in closure:
            continue
        for size in range(1, len(top) + 1):
            closure.update(Simplex(face) for face in combinations(top, size))

    table = None
    if coords is not None:
        vertex_ids = {s[0] for s in closure if s.dim == 0}
        table = {}
        for v in sorted(vertex_ids):
            if v not in coords and str(v) not in coords:
                raise ComplexError(f"coordinates required: vertex {v} has no coordinate")
            point = coords[v] if v in coords else coords[str(v)]
            table[v] = np.asarray(point, dtype=np.float64)
        shapes = {p.shape for p in table.values()}
        if len(shapes) != 1 or len(next(iter(shapes))) != 1 or next(iter(shapes))[0] == 0:
            raise ComplexError("coordinates must share one ambient dimension")

    return SimplicialComplex(list(closure), coords=table, name=name, label=label)
