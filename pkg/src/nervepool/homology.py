"""Betti numbers over GF(2)."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .complex import LabeledMatrix, SimplicialComplex, boundary_matrix


def _rows_as_bits(M) -> list[int]:
    if isinstance(M, LabeledMatrix):
        M = M.matrix
    if sp.issparse(M):
        coo = sp.coo_array(M)
        bits = [0] * coo.shape[0]
        for r, c, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
            if v % 2:
                bits[r] ^= 1 << c
        return bits
    dense = np.asarray(M)
    if dense.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return [sum(1 << int(c) for c in np.flatnonzero(row % 2)) for row in dense]


def rank_gf2(M) -> int:
    """Rank over the two-element field; entries are reduced mod 2.

    Rows are packed into Python integers and eliminated by leading bit.
    """
    pivots: dict[int, int] = {}
    rank = 0
    for row in _rows_as_bits(M):
        while row:
            lead = row.bit_length() - 1
            if lead not in pivots:
                pivots[lead] = row
                rank += 1
                break
            row ^= pivots[lead]
    return rank


def betti(K: SimplicialComplex) -> tuple[int, ...]:
    """``beta_p = n_p - rank B_p - rank B_{p+1}`` for ``p = 0..dim K``."""
    ranks = [0] + [rank_gf2(boundary_matrix(K, p)) for p in range(1, K.dim + 1)] + [0]
    return tuple(n - ranks[p] - ranks[p + 1] for p, n in enumerate(K.counts))


def euler_characteristic(values) -> int:
    return sum((-1) ** p * v for p, v in enumerate(values))
