import numpy as np
import pytest

from ewgnn.codes import Gf2Matrix, bch_construct, ldpc_regular_construct
from ewgnn.tanner import EmptyMatrix, NotAnEdge, build_graph

HAMMING_H = Gf2Matrix(
    [
        [1, 0, 1, 0, 1, 0, 1],
        [0, 1, 1, 0, 0, 1, 1],
        [0, 0, 0, 1, 1, 1, 1],
    ]
)


def test_single_check_graph():
    g = build_graph(Gf2Matrix([[1, 1, 1]]))
    assert g.n_var == 3 and g.n_chk == 1 and g.E == 3
    assert g.edges == [(0, 0), (1, 0), (2, 0)]


def test_hamming_edge_count():
    g = build_graph(HAMMING_H)
    assert g.E == int(HAMMING_H.a.sum())


def test_ldpc_32_16_edge_count():
    g = build_graph(ldpc_regular_construct(32, 3, 6, seed=7).parity)
    assert g.E == 96


def test_canonical_order_row_major():
    H = Gf2Matrix([[0, 1, 1], [1, 0, 1]])
    g = build_graph(H)
    # row-major scan: (var 1, chk 0), (var 2, chk 0), (var 0, chk 1), (var 2, chk 1)
    assert g.edges == [(1, 0), (2, 0), (0, 1), (2, 1)]
    assert g.edge_index(1, 0) == 0
    assert g.edge_index(2, 1) == g.E - 1
    assert g.edge_endpoints(0) == (1, 0)


def test_edge_index_not_an_edge():
    g = build_graph(HAMMING_H)
    with pytest.raises(NotAnEdge):
        g.edge_index(0, 1)  # H[1,0] = 0


def test_reconstruct_matrix():
    for H in [HAMMING_H, bch_construct(6, 5).parity]:
        g = build_graph(H)
        assert np.array_equal(g.to_matrix(), H.a)


def test_adjacency_partitions_edges():
    g = build_graph(HAMMING_H)
    from_var = sorted(e for adj in g.var_adj for e in adj)
    from_chk = sorted(e for adj in g.chk_adj for e in adj)
    assert from_var == list(range(g.E))
    assert from_chk == list(range(g.E))


def test_degree_sums():
    g = build_graph(bch_construct(6, 7).parity)
    assert sum(len(a) for a in g.var_adj) == g.E
    assert sum(len(a) for a in g.chk_adj) == g.E


def test_degrees_match_weights():
    g = build_graph(HAMMING_H)
    for i in range(g.n_var):
        assert len(g.var_adj[i]) == int(HAMMING_H.a[:, i].sum())
    for j in range(g.n_chk):
        assert len(g.chk_adj[j]) == int(HAMMING_H.a[j].sum())


def test_empty_matrix_rejected():
    with pytest.raises(EmptyMatrix):
        build_graph(Gf2Matrix([[0, 0], [0, 0]]))


def test_isolated_node_flagged_not_fatal():
    H = Gf2Matrix([[1, 1, 0], [1, 1, 0]])  # variable 2 has degree 0
    g = build_graph(H)
    assert g.has_isolated
    assert g.isolated_variables == [2]
    assert g.isolated_checks == []
