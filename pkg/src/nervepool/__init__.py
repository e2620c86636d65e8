"""NervePool: coarsening of simplicial complexes through vertex covers.

Two routes compute the same pooled complex for hard partitions: the nerve of
the star-extended cover (:mod:`nervepool.cover`) and products of block
assignment matrices with boundary matrices (:mod:`nervepool.pooling`).
"""

from .complex import (
    AdjacencyMatrix,
    BoundaryMatrix,
    SimplicialComplex,
    boundary_matrix,
    lower_adjacency,
    permute_vertices,
    star,
    upper_adjacency,
    validate,
)
from .cover import ExtendedCover, VertexCover, extend_cover, nerve, pool_via_nerve
from .errors import (
    DimensionError,
    IncompleteCoverError,
    MalformedInputError,
    NervePoolError,
    UncoveredSimplexError,
    UnknownVertexError,
)
from .homology import betti, rank_gf2
from .pooling import (
    BlockAssignment,
    PooledResult,
    VertexAssignment,
    extend_down,
    extend_right,
    loss_entropy,
    loss_link_prediction,
    normalize_adjacency,
    normalize_rows,
    pool,
    pool_adjacency,
    pool_boundaries,
    pool_features,
)

__all__ = [
    "AdjacencyMatrix", "BlockAssignment", "BoundaryMatrix", "DimensionError", "ExtendedCover",
    "IncompleteCoverError", "MalformedInputError", "NervePoolError", "PooledResult",
    "SimplicialComplex", "UncoveredSimplexError", "UnknownVertexError", "VertexAssignment",
    "VertexCover", "betti", "boundary_matrix", "extend_cover", "extend_down", "extend_right",
    "loss_entropy", "loss_link_prediction", "lower_adjacency", "nerve", "normalize_adjacency", "normalize_rows",
    "permute_vertices", "pool", "pool_adjacency", "pool_boundaries", "pool_features",
    "pool_via_nerve", "rank_gf2", "star", "upper_adjacency", "validate",
]
