"""Matrix formulation of NervePool.

A vertex assignment ``S_0`` is extended to a block lower-triangular matrix
``S`` whose block ``S_{q,p}`` maps ``q``-simplices of the input complex to
``p``-simplices of the pooled complex.  Only the diagonal blocks ``S_p`` are
used for pooling:

    B'_p = S_{p-1}^T |B_p| S_p,     X'_p = S_p^T X_p.

All float products are accumulated with :func:`math.fsum`, so a pooled entry
depends only on the multiset of contributing terms and never on the order in
which simplices happen to be stored.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.special import entr

from .complex import (
    AdjacencyMatrix,
    LabeledMatrix,
    Simplex,
    SimplicialComplex,
    boundary_matrix,
    facets,
    vertex_id,
)
from .cover import VertexCover
from .errors import MalformedInputError, UncoveredSimplexError

#: pooled entries with magnitude below this are treated as exact zeros
ZERO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class VertexAssignment:
    """Non-negative ``n_0 x k`` matrix of vertex-to-cluster weights."""

    vertices: tuple[str, ...]
    clusters: tuple[str, ...]
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape != (len(self.vertices), len(self.clusters)):
            raise MalformedInputError(
                f"weights of shape {w.shape} do not match "
                f"{len(self.vertices)} vertices x {len(self.clusters)} clusters")
        if len(set(self.vertices)) != len(self.vertices):
            raise MalformedInputError("duplicate vertex rows")
        if len(set(self.clusters)) != len(self.clusters):
            raise MalformedInputError("duplicate cluster columns")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise MalformedInputError("assignment weights must be finite and non-negative")
        if w.size and not np.all((w > 0).any(axis=1)):
            bad = [v for v, row in zip(self.vertices, w) if not (row > 0).any()]
            raise MalformedInputError(f"vertices assigned to no cluster: {bad}")
        if w.size and not np.all((w > 0).any(axis=0)):
            bad = [c for c, col in zip(self.clusters, w.T) if not (col > 0).any()]
            raise MalformedInputError(f"empty clusters: {bad}")
        w.setflags(write=False)
        object.__setattr__(self, "vertices", tuple(str(v) for v in self.vertices))
        object.__setattr__(self, "clusters", tuple(vertex_id(c) for c in self.clusters))
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_labels(cls, labels: Mapping[object, object]) -> VertexAssignment:
        """Hard assignment from a ``vertex -> cluster`` mapping."""
        return cls.from_records((v, c, 1.0) for v, c in labels.items())

    @classmethod
    def from_records(cls, records: Iterable[tuple[object, object, float]]) -> VertexAssignment:
        """Build from ``(vertex, cluster, weight)`` triples.

        Vertices and clusters keep their order of first appearance; repeated
        ``(vertex, cluster)`` pairs accumulate.
        """
        vertices: dict[str, int] = {}
        clusters: dict[str, int] = {}
        entries: dict[tuple[int, int], float] = defaultdict(float)
        for v, c, weight in records:
            i = vertices.setdefault(str(v), len(vertices))
            j = clusters.setdefault(vertex_id(c), len(clusters))
            entries[i, j] += float(weight)
        w = np.zeros((len(vertices), len(clusters)))
        for (i, j), weight in entries.items():
            w[i, j] = weight
        return cls(tuple(vertices), tuple(clusters), w)

    @classmethod
    def from_cover(cls, cover: VertexCover) -> VertexAssignment:
        """Uniform weights over each vertex's clusters."""
        memberships: dict[str, list[str]] = defaultdict(list)
        for cid, members in cover.clusters:
            for v in sorted(members):
                memberships[v].append(cid)
        records = [(v, c, 1.0 / len(cs)) for v, cs in sorted(memberships.items()) for c in cs]
        return cls.from_records(records)

    @property
    def kind(self) -> str:
        return "hard" if np.all((self.weights > 0).sum(axis=1) == 1) else "soft"

    def cover(self) -> VertexCover:
        return VertexCover(tuple(
            (c, frozenset(v for v, w in zip(self.vertices, col) if w > 0))
            for c, col in zip(self.clusters, self.weights.T)
        ))

    def relabel(self, perm: Mapping[str, str]) -> VertexAssignment:
        """Same assignment with vertex rows renamed through ``perm``."""
        return VertexAssignment(tuple(perm[v] for v in self.vertices), self.clusters, self.weights)

    def aligned(self, K: SimplicialComplex) -> np.ndarray:
        """Weights with rows in the vertex order of ``K``, columns in sorted cluster order."""
        if set(self.vertices) != set(K.vertices):
            extra = sorted(set(self.vertices) - set(K.vertices))
            missing = sorted(set(K.vertices) - set(self.vertices))
            raise MalformedInputError(
                f"assignment rows do not match the complex (unknown: {extra}, missing: {missing})")
        row = {v: i for i, v in enumerate(self.vertices)}
        col = {c: j for j, c in enumerate(self.clusters)}
        return self.weights[np.ix_([row[v] for v in K.vertices],
                                   [col[c] for c in sorted(self.clusters)])]


@dataclass(frozen=True, eq=False)
class BlockAssignment:
    """Lower-triangular block matrix ``S`` with labelled rows and columns.

    ``rows[q]`` are the ``q``-simplices of the input complex and ``cols[p]``
    the pooled ``p``-simplices (sorted tuples of cluster ids).
    """

    rows: tuple[tuple[Simplex, ...], ...]
    cols: tuple[tuple[Simplex, ...], ...]
    blocks: Mapping[tuple[int, int], sp.csr_array] = field(repr=False)
    normalized: bool = False

    @property
    def out_dim(self) -> int:
        return len(self.cols) - 1

    def block(self, q: int, p: int) -> LabeledMatrix:
        if p > q:
            raise KeyError("S is lower triangular; blocks with p > q do not exist")
        return LabeledMatrix(self.rows[q], self.cols[p], self.blocks[q, p])

    def diagonal(self, p: int) -> LabeledMatrix:
        return self.block(p, p)

    def block_row(self, q: int) -> sp.csr_array:
        """Concatenation of ``S_{q,0} .. S_{q,min(q, out_dim)}``."""
        parts = [self.blocks[q, p] for p in range(min(q, self.out_dim) + 1)]
        return sp.csr_array(sp.hstack(parts, format="csr"))

    def row_sums(self, q: int) -> np.ndarray:
        m = self.block_row(q)
        return np.array([math.fsum(m.data[m.indptr[i]:m.indptr[i + 1]])
                         for i in range(m.shape[0])])


# -- sparse helpers ---------------------------------------------------------


def _from_entries(entries: Mapping[tuple[int, int], float], shape: tuple[int, int]) -> sp.csr_array:
    keys = [k for k, v in entries.items() if abs(v) >= ZERO_TOL]
    rows = np.array([k[0] for k in keys], dtype=np.int64)
    cols = np.array([k[1] for k in keys], dtype=np.int64)
    data = np.array([entries[k] for k in keys], dtype=float)
    m = sp.csr_array((data, (rows, cols)), shape=shape)
    m.sort_indices()
    return m


def exact_matmul(a: sp.sparray, b: sp.sparray) -> sp.csr_array:
    """Sparse product whose entries are correctly rounded sums of term products."""
    a = sp.csr_array(a)
    b = sp.csr_array(b)
    if a.shape[1] != b.shape[0]:
        raise MalformedInputError(f"cannot multiply {a.shape} by {b.shape}")
    a_ptr, a_idx, a_val = a.indptr.tolist(), a.indices.tolist(), a.data.tolist()
    b_ptr, b_idx, b_val = b.indptr.tolist(), b.indices.tolist(), b.data.tolist()
    terms: dict[tuple[int, int], list[float]] = defaultdict(list)
    for i in range(a.shape[0]):
        for t in range(a_ptr[i], a_ptr[i + 1]):
            k, v = a_idx[t], a_val[t]
            for u in range(b_ptr[k], b_ptr[k + 1]):
                terms[i, b_idx[u]].append(v * b_val[u])
    return _from_entries({k: math.fsum(v) for k, v in terms.items()}, (a.shape[0], b.shape[1]))


# -- extension of the vertex assignment -------------------------------------


def extend_down(S0: VertexAssignment, K: SimplicialComplex) -> dict[int, sp.csr_array]:
    """Blocks ``S_{q,0}`` for ``q = 1..dim K``.

    A ``q``-simplex gets a 1 for every cluster in which at least one of its
    vertices has positive weight, and 0 elsewhere.
    """
    touched = S0.aligned(K) > 0
    vindex = {v: i for i, v in enumerate(K.vertices)}
    down = {}
    for q in range(1, K.dim + 1):
        rows = [[vindex[v] for v in s] for s in K.simplices(q)]
        dense = touched[np.array(rows)].any(axis=1) if rows else np.zeros((0, touched.shape[1]), bool)
        down[q] = sp.csr_array(dense.astype(float))
    return down


def candidate_simplices(S0: VertexAssignment, K: SimplicialComplex) -> dict[int, list[Simplex]]:
    """Pooled ``p``-simplices proposed by the ``p``-simplices of ``K``.

    Each input simplex proposes every way of choosing one positively weighted
    cluster per vertex such that the chosen clusters are distinct.
    """
    clusters = sorted(S0.clusters)
    w = S0.aligned(K)
    positive = {v: [clusters[j] for j in np.flatnonzero(row > 0)] for v, row in zip(K.vertices, w)}
    found: dict[int, list[Simplex]] = {}
    for p in range(1, K.dim + 1):
        seen: set[Simplex] = set()
        for s in K.simplices(p):
            for choice in product(*(positive[v] for v in s)):
                if len(set(choice)) == p + 1:
                    seen.add(tuple(sorted(choice)))
        if not seen:
            break
        found[p] = sorted(seen)
    return found


def extend_right(
    down: Mapping[int, sp.sparray],
    clusters: Sequence[str],
    candidates: Mapping[int, Sequence[Simplex]],
) -> tuple[dict[tuple[int, int], sp.csr_array], dict[int, tuple[Simplex, ...]]]:
    """Blocks ``S_{q,p}`` for ``1 <= p <= q`` and the surviving pooled simplices.

    The column of a candidate ``(U_a, .., U_c)`` is the entrywise product of
    the ``S_{q,0}`` columns of its clusters.  A candidate whose column in the
    diagonal block ``S_{p,p}`` is zero is dropped from every block.
    """
    col = {c: j for j, c in enumerate(clusters)}
    top = max(down, default=0)
    dense = {q: np.asarray(down[q].toarray() > 0) for q in down}
    blocks: dict[tuple[int, int], sp.csr_array] = {}
    survivors: dict[int, tuple[Simplex, ...]] = {}
    for p in sorted(candidates):
        if p > top or not candidates[p]:
            continue
        idx = np.array([[col[c] for c in tau] for tau in candidates[p]])
        columns = {q: dense[q][:, idx].all(axis=2) for q in range(p, top + 1)}
        alive = columns[p].any(axis=0)
        if not alive.any():
            continue
        survivors[p] = tuple(tau for tau, keep in zip(candidates[p], alive) if keep)
        for q in range(p, top + 1):
            blocks[q, p] = sp.csr_array(columns[q][:, alive].astype(float))
    return blocks, survivors


def build_assignment(K: SimplicialComplex, S0: VertexAssignment) -> BlockAssignment:
    """Unnormalized block matrix ``S`` with dead candidates already removed."""
    clusters = sorted(S0.clusters)
    down = extend_down(S0, K)
    right, survivors = extend_right(down, clusters, candidate_simplices(S0, K))
    blocks: dict[tuple[int, int], sp.csr_array] = {(0, 0): sp.csr_array(S0.aligned(K))}
    for q, m in down.items():
        blocks[q, 0] = m
    blocks.update(right)
    cols = [tuple((c,) for c in clusters)]
    for p in range(1, K.dim + 1):
        if p not in survivors:
            break
        cols.append(survivors[p])
    return BlockAssignment(K.simplices_by_dim, tuple(cols), blocks)


def normalize_rows(S: BlockAssignment) -> BlockAssignment:
    """Scale every block-row of ``S`` to sum to one."""
    blocks = dict(S.blocks)
    for q, row_simplices in enumerate(S.rows):
        sums = S.row_sums(q)
        if np.any(sums <= 0):
            bad = [s for s, total in zip(row_simplices, sums) if total <= 0]
            raise UncoveredSimplexError(f"simplices with no cluster weight: {bad[:5]}")
        scale = sp.diags_array(1.0 / sums)
        for p in range(min(q, S.out_dim) + 1):
            m = sp.csr_array(scale @ S.blocks[q, p])
            m.sort_indices()
            blocks[q, p] = m
    return BlockAssignment(S.rows, S.cols, blocks, normalized=True)


# -- pooling ----------------------------------------------------------------


def pool_boundaries(K: SimplicialComplex, S: BlockAssignment) -> dict[int, LabeledMatrix]:
    """Pooled boundaries ``S_{p-1}^T |B_p| S_p`` for ``p = 1..out_dim``."""
    pooled = {}
    for p in range(1, S.out_dim + 1):
        B = boundary_matrix(K, p).matrix.astype(float)
        inner = exact_matmul(B, S.blocks[p, p])
        pooled[p] = LabeledMatrix(S.cols[p - 1], S.cols[p],
                                  exact_matmul(S.blocks[p - 1, p - 1].T, inner))
    return pooled


def pool_adjacency(
    boundaries: Mapping[int, LabeledMatrix],
    labels: Sequence[Sequence[Simplex]],
    normalized: bool = False,
) -> dict[int, AdjacencyMatrix]:
    """Upper adjacency of every pooled dimension.

    ``labels[p]`` lists the pooled ``p``-simplices; the top dimension has no
    cofaces and gets a zero matrix.
    """
    out = {}
    for p, names in enumerate(labels):
        n = len(names)
        B = boundaries.get(p + 1)
        A = exact_matmul(B.matrix, B.matrix.T) if B is not None else sp.csr_array((n, n))
        out[p] = AdjacencyMatrix(tuple(names), tuple(names), A, p, "upper", False)
    return normalize_adjacency(out, boundaries) if normalized else out


def normalize_adjacency(
    adjacency: Mapping[int, AdjacencyMatrix],
    boundaries: Mapping[int, LabeledMatrix],
) -> dict[int, AdjacencyMatrix]:
    """``|D_p - A|`` with ``D_p`` the row sums of the pooled ``B_{p+1}``.

    Only the diagonal changes, since ``D_p`` is diagonal and ``A`` is
    non-negative.
    """
    out = {}
    for p, A in adjacency.items():
        n = A.shape[0]
        B = boundaries.get(p + 1)
        m = A.matrix
        if B is not None:
            rows = sp.csr_array(B.matrix)
            degree = [math.fsum(rows.data[rows.indptr[i]:rows.indptr[i + 1]]) for i in range(n)]
            entries = {(r, c): v for r, c, v in A.triplets()}
            for i in range(n):
                entries[i, i] = abs(degree[i] - entries.get((i, i), 0.0))
            m = _from_entries(entries, (n, n))
        out[p] = AdjacencyMatrix(A.rows, A.cols, m, p, "upper", True)
    return out


def pool_features(X: np.ndarray, S_p: LabeledMatrix | sp.sparray) -> np.ndarray:
    """Pooled features ``S_p^T X``."""
    m = S_p.matrix if isinstance(S_p, LabeledMatrix) else sp.csr_array(S_p)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != m.shape[0]:
        raise MalformedInputError(f"features of shape {X.shape} do not fit a block with {m.shape[0]} rows")
    return np.asarray(m.T @ X)


@dataclass(frozen=True, eq=False)
class PooledResult:
    labels: tuple[tuple[Simplex, ...], ...]
    boundaries: dict[int, LabeledMatrix]
    adjacency: dict[int, AdjacencyMatrix]
    adjacency_normalized: dict[int, AdjacencyMatrix]
    assignment: BlockAssignment
    features: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.labels) - 1

    def support_complex(self) -> SimplicialComplex:
        """The unweighted pooled complex, one simplex per pooled label."""
        return SimplicialComplex(self.labels)

    def extraneous_entries(self) -> list[tuple[int, Simplex, Simplex]]:
        """Boundary entries whose row is not a face of their column."""
        extra = []
        for p, B in sorted(self.boundaries.items()):
            for row, col in sorted(B.support()):
                if row not in {face for _, face in facets(col)}:
                    extra.append((p, row, col))
        return extra

    def canonical_form(self, relabel: Mapping[str, str] | None = None) -> str:
        """JSON text identifying the result up to renaming of input vertices.

        ``relabel`` renames input vertices before the rows of ``S`` are
        sorted, so results on permuted copies of a complex compare equal.
        """
        def rename(s: Simplex) -> list[str]:
            return sorted(relabel[v] for v in s) if relabel else list(s)

        def triplets(m: LabeledMatrix) -> list:
            return [[r, c, v] for r, c, v in m.triplets()]

        names = [[rename(s) for s in layer] for layer in self.assignment.rows]
        assignment = {}
        for (q, p), m in sorted(self.assignment.blocks.items()):
            coo = m.tocoo()
            entries = sorted((names[q][r], c, v) for r, c, v in
                             zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()) if v != 0)
            assignment[f"{q},{p}"] = [list(e) for e in entries]
        doc = {
            "labels": [[list(s) for s in layer] for layer in self.labels],
            "boundaries": {str(p): triplets(B) for p, B in sorted(self.boundaries.items())},
            "adjacency": {str(p): triplets(A) for p, A in sorted(self.adjacency.items())},
            "adjacency_normalized": {str(p): triplets(A)
                                     for p, A in sorted(self.adjacency_normalized.items())},
            "features": {str(p): X.tolist() for p, X in sorted(self.features.items())},
            "assignment": assignment,
        }
        return json.dumps(doc, sort_keys=True)


def pool(
    K: SimplicialComplex,
    S0: VertexAssignment,
    features: Mapping[int, np.ndarray] | None = None,
) -> PooledResult:
    """Run the full pipeline: extend, drop dead candidates, normalize, pool."""
    S = normalize_rows(build_assignment(K, S0))
    boundaries = pool_boundaries(K, S)
    pooled_features = {}
    for p, X in (features or {}).items():
        X = np.asarray(X, dtype=float)
        if not 0 <= p <= K.dim or X.ndim != 2 or X.shape[0] != len(K.simplices(p)):
            raise MalformedInputError(f"features for dimension {p} do not match the complex")
        if p <= S.out_dim:
            pooled_features[p] = pool_features(X, S.diagonal(p))
        else:
            pooled_features[p] = np.zeros((0, X.shape[1]))
    adjacency = pool_adjacency(boundaries, S.cols)
    return PooledResult(
        labels=S.cols,
        boundaries=boundaries,
        adjacency=adjacency,
        adjacency_normalized=normalize_adjacency(adjacency, boundaries),
        assignment=S,
        features=pooled_features,
    )


# -- auxiliary losses -------------------------------------------------------


def _dense(m) -> np.ndarray:
    if isinstance(m, LabeledMatrix):
        m = m.matrix
    if isinstance(m, VertexAssignment):
        return m.weights
    if sp.issparse(m):
        return m.toarray()
    return np.asarray(m, dtype=float)


def loss_link_prediction(A0, S0) -> float:
    """Frobenius norm ``||A_0 - S_0 S_0^T||``."""
    A, S = _dense(A0), _dense(S0)
    if A.ndim != 2 or S.ndim != 2 or A.shape != (S.shape[0], S.shape[0]):
        raise MalformedInputError(f"adjacency {A.shape} does not match assignment {S.shape}")
    return float(np.linalg.norm(A - S @ S.T, "fro"))


def loss_entropy(S0, tol: float = 1e-9) -> float:
    """Mean natural-log entropy of the rows of ``S_0``."""
    S = _dense(S0)
    if S.ndim != 2 or S.shape[0] == 0:
        raise MalformedInputError("assignment must be a non-empty matrix")
    if np.any(S < 0) or np.any(np.abs(S.sum(axis=1) - 1.0) > tol):
        raise MalformedInputError("assignment rows must be probability vectors")
    return float(entr(S).sum(axis=1).mean())
