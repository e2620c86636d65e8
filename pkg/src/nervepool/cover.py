"""Set-theoretic pooling: extend a vertex cover by stars, then take the nerve."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from .complex import Simplex, SimplicialComplex, star, vertex_id
from .errors import IncompleteCoverError, MalformedInputError, UnknownVertexError


@dataclass(frozen=True)
class VertexCover:
    """Clusters of vertices; ``kind`` is ``"hard"`` when they are disjoint."""

    clusters: tuple[tuple[str, frozenset[str]], ...]

    def __post_init__(self):
        ids = [cid for cid, _ in self.clusters]
        if len(set(ids)) != len(ids):
            raise MalformedInputError("cluster identifiers must be unique")
        for cid, members in self.clusters:
            if not members:
                raise MalformedInputError(f"cluster {cid!r} is empty")

    @classmethod
    def from_mapping(cls, clusters: Mapping[object, Iterable[object]]) -> VertexCover:
        return cls(tuple(
            (vertex_id(cid), frozenset(str(v) for v in members))
            for cid, members in clusters.items()
        ))

    @classmethod
    def from_labels(cls, labels: Mapping[object, object]) -> VertexCover:
        """Hard cover from a ``vertex -> cluster`` mapping."""
        grouped: dict[str, set[str]] = defaultdict(set)
        for v, cid in labels.items():
            grouped[vertex_id(cid)].add(str(v))
        return cls(tuple((cid, frozenset(vs)) for cid, vs in sorted(grouped.items())))

    @property
    def kind(self) -> str:
        seen: set[str] = set()
        for _, members in self.clusters:
            if seen & members:
                return "soft"
            seen |= members
        return "hard"

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(cid for cid, _ in self.clusters)

    def vertices(self) -> frozenset[str]:
        return frozenset().union(*(m for _, m in self.clusters))


@dataclass(frozen=True)
class ExtendedCover:
    """One set of simplices per cluster; these sets are not face-closed."""

    elements: tuple[tuple[str, frozenset[Simplex]], ...]

    def element(self, cid: str) -> frozenset[Simplex]:
        for key, simplices in self.elements:
            if key == cid:
                return simplices
        raise KeyError(cid)


def extend_cover(K: SimplicialComplex, cover: VertexCover) -> ExtendedCover:
    """Replace each cluster by the union of the stars of its vertices."""
    known = set(K.vertices)
    unknown = cover.vertices() - known
    if unknown:
        raise UnknownVertexError(f"cover names vertices outside the complex: {sorted(unknown)}")
    missing = known - cover.vertices()
    if missing:
        raise IncompleteCoverError(f"vertices not covered: {sorted(missing)}")
    stars = {v: star(K, v) for v in K.vertices}
    return ExtendedCover(tuple(
        (cid, frozenset().union(*(stars[v] for v in members)))
        for cid, members in cover.clusters
    ))


def nerve(ext: ExtendedCover) -> SimplicialComplex:
    """Nerve of the extended cover, one vertex per non-empty element.

    Rather than testing every subset of clusters, each simplex of the host
    complex witnesses the set of elements containing it; every witnessed set
    and all its subsets are simplices of the nerve.
    """
    if not ext.elements:
        raise MalformedInputError("cannot take the nerve of an empty cover")
    membership: dict[Simplex, list[str]] = defaultdict(list)
    for cid, simplices in ext.elements:
        for s in simplices:
            membership[s].append(cid)
    witnessed = {tuple(sorted(cids)) for cids in membership.values()}
    return SimplicialComplex.from_maximal_simplices(sorted(witnessed))


def pool_via_nerve(K: SimplicialComplex, cover: VertexCover) -> SimplicialComplex:
    """Pooled complex of the topological formulation."""
    return nerve(extend_cover(K, cover))
