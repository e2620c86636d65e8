"""Seeded random instances and mechanical checks of the pooling invariants."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable

import numpy as np

from .complex import SimplicialComplex, boundary_matrix, permute_vertices
from .cover import extend_cover, nerve, pool_via_nerve
from .errors import MalformedInputError
from .pooling import PooledResult, VertexAssignment, pool

DENSITIES = (0.3, 0.5, 0.8)
SUITES = ("equivalence", "identity", "permutation", "soft")


def random_complex(seed: int, n_vertices: int, max_dim: int, density: float) -> SimplicialComplex:
    """Random clique-style complex.

    Edges are drawn independently with probability ``density``; then, one
    dimension at a time, every vertex set whose facets are all present is
    promoted to a simplex with the same probability.
    """
    if n_vertices < 1:
        raise MalformedInputError("need at least one vertex")
    if not 0.0 <= density <= 1.0:
        raise MalformedInputError("density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    width = len(str(n_vertices - 1))
    names = [f"v{i:0{width}d}" for i in range(n_vertices)]
    layers: list[set[tuple[int, ...]]] = [{(i,) for i in range(n_vertices)}]
    if max_dim >= 1:
        draws = rng.random(n_vertices * (n_vertices - 1) // 2)
        layers.append({e for e, u in zip(combinations(range(n_vertices), 2), draws) if u < density})
    for k in range(2, max_dim + 1):
        below = layers[k - 1]
        candidates = sorted(
            s + (w,)
            for s in below
            for w in range(s[-1] + 1, n_vertices)
            if all(s[:i] + s[i + 1:] + (w,) in below for i in range(k))
        )
        if not candidates:
            break
        draws = rng.random(len(candidates))
        promoted = {c for c, u in zip(candidates, draws) if u < density}
        if not promoted:
            break
        layers.append(promoted)
    simplices = [[names[i] for i in s] for layer in layers for s in layer]
    return SimplicialComplex.from_maximal_simplices(sorted(simplices))


def random_hard_partition(seed: int, K: SimplicialComplex, k_clusters: int) -> VertexAssignment:
    """Surjective one-hot assignment of the vertices onto ``k_clusters`` clusters."""
    n = len(K.vertices)
    if not 1 <= k_clusters <= n:
        raise MalformedInputError(f"cannot split {n} vertices into {k_clusters} non-empty clusters")
    rng = np.random.default_rng(seed)
    label = np.empty(n, dtype=int)
    order = rng.permutation(n)
    label[order[:k_clusters]] = np.arange(k_clusters)
    label[order[k_clusters:]] = rng.integers(0, k_clusters, size=n - k_clusters)
    width = len(str(k_clusters - 1))
    return VertexAssignment.from_labels(
        {v: f"U{c:0{width}d}" for v, c in zip(K.vertices, label.tolist())})


def random_soft_assignment(seed: int, K: SimplicialComplex, k_clusters: int,
                           spread: float = 0.3) -> VertexAssignment:
    """Soft assignment: a hard partition whose vertices, with probability
    ``spread``, also take some weight in the cluster of a random neighbour."""
    hard = random_hard_partition(seed, K, k_clusters)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    home = dict(zip(hard.vertices, (hard.clusters[j] for j in hard.weights.argmax(axis=1))))
    neighbours: dict[str, list[str]] = {v: [] for v in K.vertices}
    for a, b in K.simplices(1):
        neighbours[a].append(b)
        neighbours[b].append(a)
    records = []
    for v in K.vertices:
        others = sorted({home[u] for u in neighbours[v]} - {home[v]})
        if others and rng.random() < spread:
            extra = others[rng.integers(len(others))]
            keep = float(rng.uniform(0.5, 0.9))
            records += [(v, home[v], keep), (v, extra, 1.0 - keep)]
        else:
            records.append((v, home[v], 1.0))
    return VertexAssignment.from_records(records)


def random_permutation(seed: int, K: SimplicialComplex) -> dict[str, str]:
    rng = np.random.default_rng(seed)
    vertices = list(K.vertices)
    return dict(zip(vertices, (vertices[i] for i in rng.permutation(len(vertices)))))


@dataclass(frozen=True)
class Instance:
    seed: int
    n_vertices: int
    max_dim: int
    density: float
    clusters: int

    @classmethod
    def from_seed(cls, seed: int, max_vertices: int = 25, max_dim: int = 4) -> Instance:
        rng = np.random.default_rng([seed, 0])
        n = int(rng.integers(2, max_vertices + 1))
        return cls(seed, n, int(rng.integers(1, max_dim + 1)),
                   float(DENSITIES[rng.integers(len(DENSITIES))]), int(rng.integers(2, n + 1)))

    def complex(self) -> SimplicialComplex:
        return random_complex([self.seed, 3], self.n_vertices, self.max_dim, self.density)

    def hard_partition(self, K: SimplicialComplex) -> VertexAssignment:
        return random_hard_partition([self.seed, 1], K, self.clusters)

    def soft_assignment(self, K: SimplicialComplex) -> VertexAssignment:
        return random_soft_assignment([self.seed, 1], K, self.clusters)

    def permutation(self, K: SimplicialComplex) -> dict[str, str]:
        return random_permutation([self.seed, 2], K)


@dataclass(frozen=True)
class VerificationReport:
    check: str
    passed: bool
    n_vertices: int
    dim: int
    clusters: int
    seed: int | None = None
    diff: str | None = None

    def __str__(self) -> str:
        head = (f"{'PASS' if self.passed else 'FAIL'} {self.check} seed={self.seed} "
                f"n0={self.n_vertices} dim={self.dim} k={self.clusters}")
        return head if self.passed else f"{head}: {self.diff}"


def _report(check, K, S0, seed, diff) -> VerificationReport:
    return VerificationReport(check, diff is None, len(K.vertices), K.dim,
                              len(S0.clusters), seed, diff)


def _compare_complexes(matrix_path: SimplicialComplex, nerve_path: SimplicialComplex) -> str | None:
    for p in range(max(matrix_path.dim, nerve_path.dim) + 1):
        a, b = set(matrix_path.simplices(p)), set(nerve_path.simplices(p))
        if a != b:
            only_a, only_b = sorted(a - b), sorted(b - a)
            if only_a:
                return f"simplex {only_a[0]} present only in the matrix path"
            return f"simplex {only_b[0]} present only in the nerve path"
    return None


def _compare_boundaries(result: PooledResult, expected: SimplicialComplex) -> str | None:
    for p in range(1, expected.dim + 1):
        got = result.boundaries[p].support()
        want = boundary_matrix(expected, p).support()
        if got != want:
            extra, missing = sorted(got - want), sorted(want - got)
            if extra:
                return f"B_{p} entry {extra[0]} is nonzero but not a face incidence"
            return f"B_{p} entry {missing[0]} is a face incidence but zero"
    return None


def nerve_adjacency_mismatch(result: PooledResult, K: SimplicialComplex,
                             S0: VertexAssignment) -> str | None:
    """Compare off-diagonal upper adjacency with adjacency in the nerve.

    Two pooled ``p``-simplices are nerve-adjacent when their union is a
    ``(p+1)``-simplex of the nerve of the extended cover.
    """
    N = nerve(extend_cover(K, S0.cover()))
    for p, layer in enumerate(result.labels):
        for s in layer:
            if s not in N:
                return f"pooled simplex {s} is not in the nerve"
        got = {(a, b) for a, b in result.adjacency[p].support() if a != b}
        want = set()
        for a, b in combinations(layer, 2):
            union = tuple(sorted(set(a) | set(b)))
            if len(union) == p + 2 and union in N:
                want |= {(a, b), (b, a)}
        if got != want:
            extra, missing = sorted(got - want), sorted(want - got)
            if extra:
                return f"A_up,{p} entry {extra[0]} has no common coface in the nerve"
            return f"A_up,{p} entry {missing[0]} is nerve-adjacent but zero"
    return None


def check_equivalence(K: SimplicialComplex, S0: VertexAssignment,
                      seed: int | None = None) -> VerificationReport:
    """Matrix and nerve formulations must yield the same pooled complex.

    Soft assignments are held to the weaker adjacency criterion instead.
    """
    result = pool(K, S0)
    if S0.kind == "soft":
        return _report("soft-adjacency", K, S0, seed, nerve_adjacency_mismatch(result, K, S0))
    expected = pool_via_nerve(K, S0.cover())
    diff = _compare_complexes(result.support_complex(), expected)
    if diff is None:
        diff = _compare_boundaries(result, expected)
    return _report("equivalence", K, S0, seed, diff)


def singleton_assignment(K: SimplicialComplex) -> VertexAssignment:
    """Every vertex in its own cluster, named after the vertex."""
    return VertexAssignment.from_labels({v: v for v in K.vertices})


def check_identity(K: SimplicialComplex, seed: int | None = None) -> VerificationReport:
    """Singleton clusters must reproduce ``K`` up to reweighting."""
    S0 = singleton_assignment(K)
    result = pool(K, S0)
    diff = _compare_complexes(result.support_complex(), K)
    if diff is None:
        diff = _compare_boundaries(result, K)
    if diff is None:
        diff = _compare_complexes(pool_via_nerve(K, S0.cover()), K)
    return _report("identity", K, S0, seed, diff)


def _first_difference(a: str, b: str) -> str | None:
    if a == b:
        return None
    da, db = json.loads(a), json.loads(b)
    for key in sorted(set(da) | set(db)):
        if da.get(key) != db.get(key):
            return f"canonical forms differ in section {key!r}"
    return "canonical forms differ"


def check_permutation_invariance(K: SimplicialComplex, S0: VertexAssignment,
                                 perm: dict[str, str], seed: int | None = None) -> VerificationReport:
    """Pooling a relabelled complex must give the same canonical result."""
    inverse = {b: a for a, b in perm.items()}
    permuted = pool(permute_vertices(K, perm), S0.relabel(perm)).canonical_form(relabel=inverse)
    diff = _first_difference(pool(K, S0).canonical_form(), permuted)
    return _report("permutation", K, S0, seed, diff)


def _run_one(suite: str, seed: int) -> VerificationReport:
    inst = Instance.from_seed(seed)
    K = inst.complex()
    if suite == "equivalence":
        return check_equivalence(K, inst.hard_partition(K), seed)
    if suite == "identity":
        return check_identity(K, seed)
    if suite == "permutation":
        return check_permutation_invariance(K, inst.hard_partition(K), inst.permutation(K), seed)
    if suite == "soft":
        return check_equivalence(K, inst.soft_assignment(K), seed)
    raise MalformedInputError(f"unknown suite {suite!r}")


def instance_seeds(seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def run_suite(suite: str, instances: int, seed: int,
              progress: Callable[[VerificationReport], None] | None = None,
              workers: int = 1) -> list[VerificationReport]:
    """Run ``instances`` seeded checks; ``suite="all"`` runs the three invariant suites.

    With ``workers > 1`` instances are checked in a process pool.  Reports
    always come back in seed order, so the output does not depend on
    scheduling.
    """
    suites: Iterable[str] = ("equivalence", "identity", "permutation") if suite == "all" else (suite,)
    jobs = []
    for name in suites:
        if name not in SUITES:
            raise MalformedInputError(f"unknown suite {name!r}")
        jobs += [(name, s) for s in instance_seeds(seed, instances)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool_:
            results: Iterable[VerificationReport] = pool_.map(
                _run_one, *zip(*jobs), chunksize=max(1, len(jobs) // (4 * workers)))
            return _collect(results, progress)
    return _collect((_run_one(name, s) for name, s in jobs), progress)


def _collect(results, progress) -> list[VerificationReport]:
    reports = []
    for report in results:
        if progress:
            progress(report)
        reports.append(report)
    return reports
