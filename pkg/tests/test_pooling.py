import math
from itertools import combinations, permutations

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from strategies import hard_instances, soft_instances

from conftest import HOUSE_EDGES
from nervepool.complex import SimplicialComplex, boundary_matrix
from nervepool.cover import pool_via_nerve
from nervepool.errors import MalformedInputError, UncoveredSimplexError
from nervepool.pooling import (
    BlockAssignment,
    VertexAssignment,
    build_assignment,
    candidate_simplices,
    exact_matmul,
    extend_down,
    extend_right,
    loss_entropy,
    loss_link_prediction,
    normalize_rows,
    pool,
    pool_features,
)


def dense_pipeline(K, S0):
    """Straightforward dense reimplementation used as an oracle."""
    clusters = sorted(S0.clusters)
    W = S0.aligned(K)
    vrow = {v: i for i, v in enumerate(K.vertices)}
    down = {0: W}
    for q in range(1, K.dim + 1):
        down[q] = np.array([[float(any(W[vrow[v], j] > 0 for v in s)) for j in range(len(clusters))]
                            for s in K.simplices(q)]).reshape(-1, len(clusters))
    labels = [[(j,) for j in range(len(clusters))]]
    for p in range(1, K.dim + 1):
        alive = []
        for tau in combinations(range(len(clusters)), p + 1):
            # some p-simplex reaches tau with one distinct cluster per vertex
            if any(all(W[vrow[v], c] > 0 for v, c in zip(s, order))
                   for s in K.simplices(p) for order in permutations(tau)):
                alive.append(tau)
        if not alive:
            break
        labels.append(alive)
    blocks = {}
    for q in range(K.dim + 1):
        for p in range(min(q, len(labels) - 1) + 1):
            if p == 0:
                blocks[q, 0] = down[q].copy()
            else:
                blocks[q, p] = np.array([[np.prod([down[q][i, c] for c in tau]) for tau in labels[p]]
                                         for i in range(len(K.simplices(q)))]).reshape(-1, len(labels[p]))
    for q in range(K.dim + 1):
        ps = [p for p in range(q + 1) if (q, p) in blocks]
        total = sum(blocks[q, p].sum(axis=1) for p in ps)
        for p in ps:
            blocks[q, p] = blocks[q, p] / total[:, None]
    pooled = {p: blocks[p - 1, p - 1].T @ boundary_matrix(K, p).toarray() @ blocks[p, p]
              for p in range(1, len(labels))}
    names = [[tuple(clusters[c] for c in tau) for tau in layer] for layer in labels]
    return names, blocks, pooled


class TestVertexAssignment:
    def test_kind(self, house_partition):
        assert house_partition.kind == "hard"
        soft = VertexAssignment.from_records([("a", "X", 0.5), ("a", "Y", 0.5), ("b", "Y", 1)])
        assert soft.kind == "soft"

    def test_weights_read_only(self, house_partition):
        with pytest.raises(ValueError):
            house_partition.weights[0, 0] = 2.0

    @pytest.mark.parametrize("weights", [[[-1.0]], [[np.nan]], [[0.0]]])
    def test_rejects_bad_weights(self, weights):
        with pytest.raises(MalformedInputError):
            VertexAssignment(("a",), ("X",), np.array(weights))

    def test_rejects_empty_cluster(self):
        with pytest.raises(MalformedInputError):
            VertexAssignment(("a",), ("X", "Y"), np.array([[1.0, 0.0]]))

    def test_aligned_mismatch(self, house):
        with pytest.raises(MalformedInputError):
            VertexAssignment.from_labels({"v0": "X"}).aligned(house)


class TestExtension:
    def test_extend_down_rows(self, house, house_partition):
        down = extend_down(house_partition, house)
        e0 = house.index(HOUSE_EDGES["e0"])
        assert down[1].toarray()[e0].tolist() == [1.0, 1.0]
        assert down[2].toarray()[0].tolist() == [0.0, 1.0]

    def test_extend_down_soft_threshold(self, house):
        S0 = VertexAssignment.from_records(
            [("v0", "U1", 0.7), ("v0", "U2", 0.3), ("v4", "U1", 1.0),
             ("v1", "U2", 1.0), ("v2", "U2", 1.0), ("v3", "U2", 1.0)])
        down = extend_down(S0, house)
        assert down[1].toarray()[house.index(HOUSE_EDGES["e5"])].tolist() == [1.0, 1.0]

    def test_extend_right_columns(self, house, house_partition):
        down = extend_down(house_partition, house)
        blocks, survivors = extend_right(down, ["U1", "U2"], candidate_simplices(house_partition, house))
        assert survivors == {1: (("U1", "U2"),)}
        rows = {house.simplices(1)[i] for i in np.flatnonzero(blocks[1, 1].toarray()[:, 0])}
        assert rows == {HOUSE_EDGES["e0"], HOUSE_EDGES["e3"]}
        assert blocks[2, 1].nnz == 0

    def test_single_cluster_has_no_candidates(self, house):
        S0 = VertexAssignment.from_labels({v: "U" for v in house.vertices})
        assert candidate_simplices(S0, house) == {}
        S = build_assignment(house, S0)
        assert S.out_dim == 0

    def test_normalize_edge_row(self, house, house_partition):
        S = normalize_rows(build_assignment(house, house_partition))
        e0 = house.index(HOUSE_EDGES["e0"])
        row = S.block_row(1).toarray()[e0]
        assert row.tolist() == [1 / 3, 1 / 3, 1 / 3]
        assert S.diagonal(0).toarray().tolist() == house_partition.aligned(house).tolist()

    def test_normalize_soft_vertex_row_unchanged(self):
        K = SimplicialComplex.from_maximal_simplices([["a", "b"]])
        S0 = VertexAssignment.from_records([("a", "X", 0.5), ("a", "Y", 0.5), ("b", "Y", 1.0)])
        S = normalize_rows(build_assignment(K, S0))
        assert S.diagonal(0).toarray()[0].tolist() == [0.5, 0.5]

    def test_zero_block_row(self):
        m = np.zeros((1, 1))
        S = BlockAssignment(((("a",),),), ((("X",),),), {(0, 0): sp.csr_array(m)})
        with pytest.raises(UncoveredSimplexError):
            normalize_rows(S)

    @settings(max_examples=60, deadline=None)
    @given(soft_instances())
    def test_rows_stochastic(self, instance):
        K, S0 = instance
        S = normalize_rows(build_assignment(K, S0))
        for q in range(K.dim + 1):
            assert np.max(np.abs(S.row_sums(q) - 1.0)) <= 1e-12
            for p in range(min(q, S.out_dim) + 1):
                assert S.blocks[q, p].toarray().min(initial=0.0) >= 0


class TestPooling:
    def test_house_pooled_boundary(self, house, house_partition):
        result = pool(house, house_partition)
        B = result.boundaries[1]
        assert B.rows == (("U1",), ("U2",)) and B.cols == (("U1", "U2"),)
        assert np.allclose(B.toarray(), [[2 / 3], [2 / 3]], atol=1e-15)
        assert result.extraneous_entries() == []

    def test_vertex_edge_vertex_adjacency(self, house, house_partition):
        result = pool(house, house_partition)
        A = result.adjacency[0].toarray()
        assert A.shape == (2, 2) and np.all(A > 0)
        N = result.adjacency_normalized[0].toarray()
        degree = result.boundaries[1].toarray().sum(axis=1)
        assert np.allclose(np.diag(N), np.abs(degree - np.diag(A)))
        assert np.allclose(N - np.diag(np.diag(N)), A - np.diag(np.diag(A)))

    def test_no_edges_gives_zero_adjacency(self):
        K = SimplicialComplex.from_maximal_simplices([["a"], ["b"]])
        result = pool(K, VertexAssignment.from_labels({"a": "X", "b": "Y"}))
        assert result.adjacency[0].matrix.nnz == 0

    def test_one_cluster(self, house):
        result = pool(house, VertexAssignment.from_labels({v: "U" for v in house.vertices}))
        assert result.labels == ((("U",),),)
        assert result.boundaries == {}

    def test_singleton_support(self, house):
        result = pool(house, VertexAssignment.from_labels({v: v for v in house.vertices}))
        assert result.support_complex() == house
        for p in (1, 2):
            assert result.boundaries[p].support() == boundary_matrix(house, p).support()

    def test_features(self, house, house_partition):
        X0 = np.array([[1.0], [0.0], [0.0], [0.0], [3.0]])
        result = pool(house, house_partition, {0: X0, 2: np.ones((1, 2))})
        assert result.features[0][0, 0] == 4.0
        assert result.features[2].shape == (0, 2)

    def test_features_zero_width_and_shape(self, house, house_partition):
        S = normalize_rows(build_assignment(house, house_partition))
        assert pool_features(np.zeros((5, 0)), S.diagonal(0)).shape == (2, 0)
        with pytest.raises(MalformedInputError):
            pool_features(np.zeros((4, 1)), S.diagonal(0))

    def test_features_linear(self, house, house_partition):
        rng = np.random.default_rng(3)
        S1 = normalize_rows(build_assignment(house, house_partition)).diagonal(1)
        X, Y = rng.normal(size=(6, 3)), rng.normal(size=(6, 3))
        lhs = pool_features(2.5 * X - Y, S1)
        assert np.max(np.abs(lhs - (2.5 * pool_features(X, S1) - pool_features(Y, S1)))) <= 1e-10
        assert not pool_features(np.zeros((6, 3)), S1).any()

    def test_exact_matmul_is_order_free(self):
        rng = np.random.default_rng(11)
        a = rng.random((4, 30)) * 10.0 ** rng.integers(-8, 8, size=(4, 30))
        b = rng.random((30, 3))
        perm = rng.permutation(30)
        first = exact_matmul(sp.csr_array(a), sp.csr_array(b)).toarray()
        second = exact_matmul(sp.csr_array(a[:, perm]), sp.csr_array(b[perm])).toarray()
        assert np.array_equal(first, second)
        assert np.allclose(first, a @ b)

    @settings(max_examples=60, deadline=None)
    @given(hard_instances(max_vertices=6))
    def test_matches_dense_oracle_hard(self, instance):
        self._compare_with_oracle(*instance)

    @settings(max_examples=60, deadline=None)
    @given(soft_instances(max_vertices=5))
    def test_matches_dense_oracle_soft(self, instance):
        self._compare_with_oracle(*instance)

    @staticmethod
    def _compare_with_oracle(K, S0):
        result = pool(K, S0)
        names, _, pooled = dense_pipeline(K, S0)
        assert [list(layer) for layer in result.labels] == names
        for p, B in pooled.items():
            assert np.max(np.abs(result.boundaries[p].toarray() - B), initial=0.0) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(soft_instances())
    def test_outputs_non_negative_and_symmetric(self, instance):
        result = pool(*instance)
        for B in result.boundaries.values():
            assert B.matrix.data.min(initial=0.0) >= 0
        for family in (result.adjacency, result.adjacency_normalized):
            for A in family.values():
                assert A.is_symmetric()
                assert A.matrix.data.min(initial=0.0) >= 0

    @settings(max_examples=60, deadline=None)
    @given(hard_instances())
    def test_hard_has_no_extraneous_entries(self, instance):
        assert pool(*instance).extraneous_entries() == []

    def test_soft_extraneous_entry_breaks_nerve_adjacency(self):
        # x touches C, y touches D and A, y' touches D and B.  The pooled edge
        # (C, D) collects both (x, y) and (x, y'), so its boundary column
        # carries weight on A and B, which then look adjacent although no
        # simplex of the input touches both.
        K = SimplicialComplex.from_maximal_simplices([["x", "y"], ["x", "z"]])
        S0 = VertexAssignment.from_records([
            ("x", "C", 1.0), ("y", "D", 0.5), ("y", "A", 0.5), ("z", "D", 0.5), ("z", "B", 0.5)])
        result = pool(K, S0)
        assert (1, ("A",), ("C", "D")) in result.extraneous_entries()
        A = result.adjacency[0]
        assert (("A",), ("B",)) in A.support()
        assert ("A", "B") not in pool_via_nerve(K, S0.cover())


class TestLosses:
    def test_link_prediction(self):
        assert loss_link_prediction(np.eye(2), np.eye(2)) == 0.0
        assert loss_link_prediction(np.zeros((2, 2)), np.eye(2)) == pytest.approx(math.sqrt(2), abs=1e-15)
        with pytest.raises(MalformedInputError):
            loss_link_prediction(np.eye(3), np.eye(2))

    def test_link_prediction_reconstruction(self):
        rng = np.random.default_rng(5)
        S = rng.random((6, 3))
        assert loss_link_prediction(S @ S.T, S) == 0.0

    def test_entropy(self, house_partition):
        assert loss_entropy(house_partition) == 0.0
        assert abs(loss_entropy(np.array([[0.5, 0.5]])) - math.log(2)) <= 1e-12
        assert loss_entropy(np.array([[1.0, 0.0], [0.5, 0.5]])) == pytest.approx(math.log(2) / 2, abs=1e-12)

    def test_entropy_rejects_unnormalized(self):
        with pytest.raises(MalformedInputError):
            loss_entropy(np.array([[0.5, 0.6]]))
