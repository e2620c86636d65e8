"""Abstract simplicial complexes, boundary matrices and adjacency operators.

Simplices are tuples of vertex identifiers in ascending order.  Within each
dimension the simplices of a complex are kept in lexicographic order, so every
matrix built from a complex is reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, MalformedInputError, UnknownVertexError

Simplex = tuple[str, ...]


def vertex_id(token: object) -> str:
    """Coerce ``token`` to a vertex identifier, rejecting unusable text."""
    text = token if isinstance(token, str) else str(token)
    if not text or any(ch.isspace() for ch in text) or "," in text:
        raise MalformedInputError(f"invalid vertex identifier {text!r}")
    return text


def make_simplex(vertices: Iterable[object]) -> Simplex:
    verts = [vertex_id(v) for v in vertices]
    if not verts:
        raise MalformedInputError("a simplex needs at least one vertex")
    if len(set(verts)) != len(verts):
        raise MalformedInputError(f"duplicate vertex in simplex {verts}")
    return tuple(sorted(verts))


def facets(simplex: Simplex) -> Iterator[tuple[int, Simplex]]:
    """Yield ``(i, face)`` where ``face`` drops the ``i``-th vertex."""
    if len(simplex) < 2:
        return
    for i in range(len(simplex)):
        yield i, simplex[:i] + simplex[i + 1:]


class SimplicialComplex:
    """An immutable simplicial complex stored dimension by dimension.

    The constructor stores what it is given without checking closure or
    ordering, which lets :func:`validate` report on malformed data.  Use
    :meth:`from_maximal_simplices` to build a guaranteed-valid complex.
    """

    def __init__(self, simplices_by_dim: Iterable[Iterable[Sequence[object]]]):
        self._simplices: tuple[tuple[Simplex, ...], ...] = tuple(
            tuple(tuple(str(v) for v in s) for s in layer) for layer in simplices_by_dim
        )

    @classmethod
    def from_maximal_simplices(cls, maximal: Iterable[Iterable[object]]) -> SimplicialComplex:
        """Downward closure of ``maximal``, in canonical order."""
        layers: list[set[Simplex]] = []
        for raw in maximal:
            top = make_simplex(raw)
            while len(layers) < len(top):
                layers.append(set())
            for k in range(1, len(top) + 1):
                layers[k - 1].update(combinations(top, k))
        return cls(sorted(layer) for layer in layers)

    # -- basic accessors -------------------------------------------------

    @property
    def dim(self) -> int:
        """Maximum simplex dimension; -1 for the empty complex."""
        return len(self._simplices) - 1

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self._simplices)

    @property
    def vertices(self) -> tuple[str, ...]:
        if not self._simplices:
            return ()
        return tuple(s[0] for s in self._simplices[0])

    def simplices(self, p: int) -> tuple[Simplex, ...]:
        if 0 <= p < len(self._simplices):
            return self._simplices[p]
        return ()

    @property
    def simplices_by_dim(self) -> tuple[tuple[Simplex, ...], ...]:
        return self._simplices

    @cached_property
    def _index(self) -> tuple[dict[Simplex, int], ...]:
        return tuple({s: i for i, s in enumerate(layer)} for layer in self._simplices)

    def index(self, simplex: Sequence[object]) -> int:
        """Position of ``simplex`` within its dimension."""
        key = tuple(sorted(str(v) for v in simplex))
        p = len(key) - 1
        try:
            return self._index[p][key]
        except (IndexError, KeyError):
            raise KeyError(key) from None

    def __contains__(self, simplex: object) -> bool:
        try:
            self.index(simplex)  # type: ignore[arg-type]
        except (KeyError, TypeError):
            return False
        return True

    def __iter__(self) -> Iterator[Simplex]:
        for layer in self._simplices:
            yield from layer

    def __len__(self) -> int:
        return sum(self.counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return self._simplices == other._simplices

    def __hash__(self) -> int:
        return hash(self._simplices)

    def __repr__(self) -> str:
        return f"SimplicialComplex(dim={self.dim}, counts={self.counts})"

    def maximal_simplices(self) -> list[Simplex]:
        """Simplices that are not a face of any other simplex."""
        covered: set[Simplex] = set()
        for layer in self._simplices[1:]:
            for s in layer:
                covered.update(face for _, face in facets(s))
        return [s for s in self if s not in covered]

    def serialize(self) -> str:
        """Canonical text form: every simplex, one per line."""
        return "\n".join(",".join(s) for s in self) + "\n"


# -- matrices ---------------------------------------------------------------


@dataclass(frozen=True)
class LabeledMatrix:
    """Sparse matrix whose rows and columns are tagged with simplex labels."""

    rows: tuple[Simplex, ...]
    cols: tuple[Simplex, ...]
    matrix: sp.csr_array = field(compare=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def triplets(self) -> list[tuple[int, int, float]]:
        """Nonzero entries as ``(row, col, value)`` sorted by position."""
        coo = self.matrix.tocoo()
        entries = [
            (r, c, v) for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()) if v != 0
        ]
        entries.sort()
        return entries

    def support(self) -> set[tuple[Simplex, Simplex]]:
        return {(self.rows[r], self.cols[c]) for r, c, _ in self.triplets()}


@dataclass(frozen=True)
class BoundaryMatrix(LabeledMatrix):
    p: int = 0
    oriented: bool = False


@dataclass(frozen=True)
class AdjacencyMatrix(LabeledMatrix):
    p: int = 0
    kind: str = "upper"
    normalized: bool = False

    def is_symmetric(self) -> bool:
        return (self.matrix != self.matrix.T).nnz == 0


def _csr(data, rows, cols, shape, dtype) -> sp.csr_array:
    m = sp.csr_array((np.asarray(data, dtype=dtype), (np.asarray(rows, dtype=np.int64),
                      np.asarray(cols, dtype=np.int64))), shape=shape)
    m.sum_duplicates()
    m.sort_indices()
    return m


def boundary_matrix(K: SimplicialComplex, p: int, oriented: bool = False) -> BoundaryMatrix:
    """The ``p``-boundary matrix of ``K``, shape ``n_{p-1} x n_p``.

    Non-oriented entries are 1 on every face incidence.  Oriented entries
    carry ``(-1)**i`` for the face dropping the ``i``-th sorted vertex.
    ``p = 0`` yields the empty ``0 x n_0`` matrix.
    """
    if p < 0 or p > K.dim:
        raise DimensionError(f"dimension {p} outside 0..{K.dim}")
    cols = K.simplices(p)
    if p == 0:
        return BoundaryMatrix((), cols, _csr([], [], [], (0, len(cols)), np.int64), p, oriented)
    rows = K.simplices(p - 1)
    index = K._index[p - 1]
    data, ri, ci = [], [], []
    for j, s in enumerate(cols):
        for i, face in facets(s):
            try:
                ri.append(index[face])
            except KeyError:
                raise MalformedInputError(f"face {face} of {s} is missing") from None
            ci.append(j)
            data.append((-1) ** i if oriented else 1)
    m = _csr(data, ri, ci, (len(rows), len(cols)), np.int64)
    return BoundaryMatrix(rows, cols, m, p, oriented)


def coboundary_placeholder(K: SimplicialComplex, p: int) -> BoundaryMatrix:
    """An ``n_p x 0`` boundary matrix standing in for a missing ``B_{p+1}``."""
    rows = K.simplices(p)
    return BoundaryMatrix(rows, (), _csr([], [], [], (len(rows), 0), np.int64), p + 1, False)


def _degree_normalize(B: LabeledMatrix, product: sp.csr_array) -> sp.csr_array:
    degree = sp.diags_array(np.asarray(abs(B.matrix).sum(axis=1)).ravel())
    out = abs(sp.csr_array(degree) - product)
    out.eliminate_zeros()
    return sp.csr_array(out)


def upper_adjacency(B_next: BoundaryMatrix, normalized: bool = False) -> AdjacencyMatrix:
    """``B_{p+1} B_{p+1}^T``, or ``|D_p - B_{p+1} B_{p+1}^T|`` when normalized.

    ``D_p`` is the diagonal of row sums of the non-oriented ``B_{p+1}``.
    """
    if normalized and B_next.oriented:
        raise MalformedInputError("the normalized upper adjacency needs a non-oriented boundary")
    product = sp.csr_array(B_next.matrix @ B_next.matrix.T)
    if normalized:
        product = _degree_normalize(B_next, product)
    product.sort_indices()
    return AdjacencyMatrix(B_next.rows, B_next.rows, product, B_next.p - 1, "upper", normalized)


def lower_adjacency(B: BoundaryMatrix) -> AdjacencyMatrix:
    """``B_p^T B_p``; the zero matrix for ``p = 0``."""
    product = sp.csr_array(B.matrix.T @ B.matrix)
    product.sort_indices()
    return AdjacencyMatrix(B.cols, B.cols, product, B.p, "lower", False)


def upper_adjacency_of(K: SimplicialComplex, p: int, normalized: bool = False) -> AdjacencyMatrix:
    """Upper adjacency of the ``p``-simplices of ``K``, zero when ``p = dim K``."""
    if p < 0 or p > K.dim:
        raise DimensionError(f"dimension {p} outside 0..{K.dim}")
    B = boundary_matrix(K, p + 1) if p < K.dim else coboundary_placeholder(K, p)
    return upper_adjacency(B, normalized)


# -- set operations ---------------------------------------------------------


def star(K: SimplicialComplex, v: object) -> frozenset[Simplex]:
    """All simplices of ``K`` having ``v`` as a vertex (not face-closed)."""
    v = str(v)
    if (v,) not in K:
        raise UnknownVertexError(f"vertex {v!r} is not in the complex")
    return frozenset(s for s in K if v in s)


def permute_vertices(K: SimplicialComplex, perm: Mapping[object, object]) -> SimplicialComplex:
    """Relabel the vertices of ``K`` through the bijection ``perm``."""
    mapping = {str(a): vertex_id(b) for a, b in perm.items()}
    if set(mapping) != set(K.vertices):
        raise MalformedInputError("permutation domain must equal the vertex set")
    if len(set(mapping.values())) != len(mapping):
        raise MalformedInputError("permutation is not injective")
    layers = [sorted(tuple(sorted(mapping[v] for v in s)) for s in layer)
              for layer in K.simplices_by_dim]
    return SimplicialComplex(layers)


@dataclass(frozen=True)
class ValidationReport:
    problems: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok


def validate(K: SimplicialComplex) -> ValidationReport:
    """Check closure, canonical form, ordering and non-emptiness of ``K``."""
    problems: list[str] = []
    layers = K.simplices_by_dim
    if not layers or not layers[0]:
        problems.append("vertex set is empty")
    present = [set() for _ in layers]
    for p, layer in enumerate(layers):
        if not layer:
            problems.append(f"dimension {p} stored but empty")
        previous = None
        for s in layer:
            if len(s) != p + 1:
                problems.append(f"simplex {s} stored in dimension {p}")
            if len(set(s)) != len(s):
                problems.append(f"simplex {s} repeats a vertex")
            elif list(s) != sorted(s):
                problems.append(f"simplex {s} is not in sorted vertex order")
            if s in present[p]:
                problems.append(f"duplicate simplex {s}")
            elif previous is not None and s < previous:
                problems.append(f"simplex {s} out of lexicographic order")
            present[p].add(s)
            previous = s
    for p in range(1, len(layers)):
        for s in layers[p]:
            for _, face in facets(s):
                if face not in present[p - 1]:
                    problems.append(f"missing face {face} of {s}")
    return ValidationReport(tuple(problems))
