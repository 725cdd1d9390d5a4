import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ewgnn.channel import derive_stream, llr_from_channel, sigma_from_snr_db
from ewgnn.codes import Gf2Matrix, code_from_parity, encode, ldpc_regular_construct
from ewgnn.msgpass import (
    NbpWeights,
    Saturation,
    SizeMismatch,
    bp_decode,
    bp_decode_batch,
    check_update_clipped,
    check_update_exact,
    hard_decision,
    nbp_decode,
    posterior,
    unit_nbp_weights,
    variable_update,
)
from ewgnn.tanner import build_graph

ALPHA = 1e-7


# -- scalar kernels ---------------------------------------------------------


def test_check_exact_identity_degree2():
    for m in (-3.0, 0.7, 5.0):
        assert check_update_exact([m]) == pytest.approx(m, rel=1e-12)


def test_check_exact_zero_annihilates():
    assert check_update_exact([4.0, 0.0, -2.0]) == 0.0


def test_check_exact_hand_value():
    got = check_update_exact([2.0, -1.0])
    want = 2.0 * math.atanh(math.tanh(1.0) * math.tanh(-0.5))
    assert got == pytest.approx(want, rel=1e-14)
    assert got < 0


def test_check_exact_saturates():
    huge = [800.0, 900.0]
    with pytest.raises(Saturation):
        check_update_exact(huge)


def test_check_clipped_matches_exact_interior():
    assert check_update_clipped([2.0, -1.0], ALPHA) == pytest.approx(
        check_update_exact([2.0, -1.0]), abs=1e-12
    )


def test_check_clipped_saturation_bound():
    out = check_update_clipped([40.0, 40.0, 40.0], ALPHA)
    assert out == pytest.approx(math.log((2.0 - ALPHA) / ALPHA), rel=1e-14)


def test_check_clipped_empty_incoming():
    # degree-1 check: empty product P = 1
    assert check_update_clipped([], ALPHA) == pytest.approx(
        math.log((2.0 - ALPHA) / ALPHA), rel=1e-14
    )


@settings(max_examples=500, deadline=None)
@given(st.lists(st.floats(-8.0, 8.0), min_size=1, max_size=6))
def test_check_clipped_equals_exact_on_interior(msgs):
    p = 1.0
    for m in msgs:
        p *= math.tanh(0.5 * m)
    if abs(p) > 1.0 - 1e-6:
        return  # bounded away from saturation by construction of the draw
    assert check_update_clipped(msgs, ALPHA) == pytest.approx(
        check_update_exact(msgs), abs=1e-9
    )


def test_variable_update_examples():
    assert variable_update(1.5, []) == 1.5
    assert variable_update(1.0, [(2.0, 0.5), (-1.0, 2.0)]) == pytest.approx(0.0)
    assert variable_update(0.5, [(3.0, 1.0), (-1.0, 1.0)]) == pytest.approx(2.5)


def test_posterior_examples():
    assert posterior(0.7, []) == 0.7
    assert posterior(0.5, [(3.0, 1.0), (-1.0, 1.0)]) == pytest.approx(2.5)
    assert posterior(0.9, [(3.0, 0.0), (-1.0, 0.0)]) == 0.9  # w_out = 0: channel only


def test_hard_decision():
    assert hard_decision(3.2) == 0
    assert hard_decision(-0.1) == 1
    assert hard_decision(0.0) == 1  # tie decides 1


# -- BP decoding ------------------------------------------------------------

SPC3 = code_from_parity(Gf2Matrix([[1, 1, 1]]), name="spc3")


def test_bp_noiseless_fixed_point():
    code = ldpc_regular_construct(32, 3, 6, seed=7)
    graph = build_graph(code.parity)
    rng = np.random.default_rng(5)
    c = encode(code, rng.integers(0, 2, size=code.k))
    s = 40.0 * (1.0 - 2.0 * c)
    res = bp_decode(graph, s, T=8, alpha=ALPHA)
    assert np.array_equal(res.c_hat, c)
    assert res.syndrome_ok


def test_bp_spc3_matches_map():
    """On the cycle-free (3,2) code one BP iteration is exact bitwise MAP."""
    graph = build_graph(SPC3.parity)
    params = sigma_from_snr_db(1.0)
    books = np.array([[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]])
    X = 1.0 - 2.0 * books
    for f in range(50):
        y = X[0] + params.sigma * derive_stream(21, [f]).gaussians(3)
        s = llr_from_channel(y, params.sigma2)
        res = bp_decode(graph, s, T=1, alpha=ALPHA)
        logw = 0.5 * (X @ s)
        for i in range(3):
            w0 = logw[books[:, i] == 0]
            w1 = logw[books[:, i] == 1]
            map_llr = (w0.max() + np.log(np.exp(w0 - w0.max()).sum())) - (
                w1.max() + np.log(np.exp(w1 - w1.max()).sum())
            )
            assert res.posterior[i] == pytest.approx(map_llr, abs=1e-9)


def test_bp_early_stop_same_answer_fewer_iterations():
    code = ldpc_regular_construct(32, 3, 6, seed=7)
    graph = build_graph(code.parity)
    c = encode(code, np.zeros(code.k, dtype=int))
    s = 20.0 * (1.0 - 2.0 * c)
    slow = bp_decode(graph, s, T=8, alpha=ALPHA, early_stop=False)
    fast = bp_decode(graph, s, T=8, alpha=ALPHA, early_stop=True)
    assert np.array_equal(slow.c_hat, fast.c_hat)
    assert fast.iterations_run < slow.iterations_run
    assert slow.iterations_run == 8


def test_bp_outputs_finite_for_wild_inputs():
    graph = build_graph(SPC3.parity)
    s = np.array([1e6, -1e6, 1e-9])
    res = bp_decode(graph, s, T=8, alpha=ALPHA)
    assert np.all(np.isfinite(res.posterior))


def test_bp_odd_symmetry():
    code = ldpc_regular_construct(32, 3, 6, seed=7)
    graph = build_graph(code.parity)
    s = derive_stream(31, [0]).gaussians(32) * 4.0
    a = bp_decode(graph, s, T=8, alpha=ALPHA)
    b = bp_decode(graph, -s, T=8, alpha=ALPHA)
    assert np.allclose(a.posterior, -b.posterior, rtol=0, atol=1e-12)
    flip = a.posterior != 0
    assert np.array_equal(a.c_hat[flip], 1 - b.c_hat[flip])


def test_bp_permutation_equivariance():
    code = ldpc_regular_construct(32, 3, 6, seed=7)
    H = code.parity.a
    rng = np.random.default_rng(9)
    perm = rng.permutation(32)
    g1 = build_graph(code.parity)
    g2 = build_graph(Gf2Matrix(H[:, perm]))
    s = derive_stream(32, [0]).gaussians(32) * 3.0
    a = bp_decode(g1, s, T=6, alpha=ALPHA)
    b = bp_decode(g2, s[perm], T=6, alpha=ALPHA)
    assert np.allclose(a.posterior[perm], b.posterior, atol=1e-11)


def test_bp_batch_matches_single():
    code = ldpc_regular_construct(32, 3, 6, seed=7)
    graph = build_graph(code.parity)
    S = np.stack([derive_stream(44, [f]).gaussians(32) * 3.0 for f in range(5)])
    post, chat, _, _ = bp_decode_batch(graph, S, T=8, alpha=ALPHA)
    for f in range(5):
        single = bp_decode(graph, S[f], T=8, alpha=ALPHA)
        assert np.array_equal(single.posterior, post[f])
        assert np.array_equal(single.c_hat, chat[f])


# -- NBP --------------------------------------------------------------------


def test_nbp_unit_weights_is_bp():
    code = ldpc_regular_construct(32, 3, 6, seed=7)
    graph = build_graph(code.parity)
    s = derive_stream(77, [0]).gaussians(32) * 3.0
    a = bp_decode(graph, s, T=8, alpha=ALPHA)
    b = nbp_decode(graph, s, T=8, weights=unit_nbp_weights(graph.E), alpha=ALPHA)
    assert np.array_equal(a.posterior, b.posterior)
    assert np.array_equal(a.c_hat, b.c_hat)


def test_nbp_zero_edge_weights_channel_only():
    graph = build_graph(SPC3.parity)
    w = NbpWeights(w_edge=np.zeros(3), w_out=np.ones(3))
    s = np.array([2.0, -1.0, 0.5])
    res = nbp_decode(graph, s, T=3, weights=w, alpha=ALPHA)
    # with w_edge = 0 every variable message stays s_i, so the posterior is
    # s_i plus the (fixed) check responses to raw channel messages
    mu = [check_update_clipped([s[(i + 1) % 3], s[(i + 2) % 3]], ALPHA) for i in range(3)]
    assert np.allclose(res.posterior, s + np.array(mu), atol=1e-12)


def test_nbp_wrong_size_rejected():
    graph = build_graph(SPC3.parity)
    with pytest.raises(SizeMismatch):
        nbp_decode(graph, np.zeros(3), T=2, weights=unit_nbp_weights(5), alpha=ALPHA)


def test_nbp_weight_count_is_2e():
    w = unit_nbp_weights(96)
    assert w.w_edge.size + w.w_out.size == 2 * 96
