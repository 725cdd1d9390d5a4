import numpy as np
import pytest

from ewgnn import autodiff as ad
from ewgnn.codes import Gf2Matrix
from ewgnn.tanner import build_graph


def num_grad(f, x, h=1e-6):
    """Central finite differences of a scalar function of one array."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.astype(np.float64)
    for i in range(flat.size):
        up = flat.copy()
        up.ravel()[i] += h
        dn = flat.copy()
        dn.ravel()[i] -= h
        g.ravel()[i] = (f(up) - f(dn)) / (2 * h)
    return g


def check_grad(build, x, rtol=1e-6):
    """Compare tape gradients of sum(build(x)) against finite differences."""
    tape = ad.Tape()
    v = ad.leaf(x, tape)
    out = ad.sum_all(build(v))
    ad.backward(out)
    g_fd = num_grad(lambda a: float(np.sum(ad.val(build(a)))), x)
    scale = max(np.abs(g_fd).max(), 1.0)
    assert np.allclose(v.grad, g_fd, atol=rtol * scale), (v.grad, g_fd)


def test_square_gradient():
    tape = ad.Tape()
    x = ad.leaf(np.array(3.0), tape)
    y = ad.mul(x, x)
    ad.backward(y)
    assert x.grad == pytest.approx(6.0)


def test_tanh_gradient_at_zero():
    tape = ad.Tape()
    x = ad.leaf(np.array(0.0), tape)
    y = ad.tanh(x)
    ad.backward(y)
    assert x.grad == pytest.approx(1.0)


def test_plain_arrays_pass_through():
    # with no Var operands the helpers just compute
    out = ad.add(np.array([1.0]), np.array([2.0]))
    assert isinstance(out, np.ndarray) and out[0] == 3.0


def test_arithmetic_gradients():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(3, 4))
    c = rng.normal(size=(3, 4)) + 3.0
    check_grad(lambda v: ad.add(v, c), x)
    check_grad(lambda v: ad.sub(c, v), x)
    check_grad(lambda v: ad.mul(v, c), x)
    check_grad(lambda v: ad.div(v, c), x)
    check_grad(lambda v: ad.div(c, ad.add(v, 10.0)), x)
    check_grad(lambda v: ad.neg(v), x)


def test_broadcasting_gradients():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4,))
    c = rng.normal(size=(3, 4))
    check_grad(lambda v: ad.mul(v, c), x)
    check_grad(lambda v: ad.add(v, c), x)


def test_unary_gradients():
    rng = np.random.default_rng(2)
    x = rng.normal(size=12) * 2.0
    x = x[np.abs(x) > 1e-3]  # stay away from the abs kink
    check_grad(lambda v: ad.abs_(v), x)
    check_grad(lambda v: ad.tanh(v), x)
    check_grad(lambda v: ad.exp(ad.mul(v, 0.3)), x)
    check_grad(lambda v: ad.log(ad.add(ad.abs_(v), 1.0)), x)
    check_grad(lambda v: ad.softplus(v), x)


def test_softplus_stable_at_extremes():
    assert ad.softplus(np.array([800.0]))[0] == pytest.approx(800.0)
    assert ad.softplus(np.array([-800.0]))[0] == 0.0


def test_elu_values_and_gradients():
    x = np.array([-2.0, -0.5, 0.5, 2.0])
    out = ad.elu(x, 1.0)
    assert np.allclose(out, [np.expm1(-2.0), np.expm1(-0.5), 0.5, 2.0])
    check_grad(lambda v: ad.elu(v, 1.0), x)
    check_grad(lambda v: ad.elu(v, 1.7), x)


def test_elu_continuity_at_zero():
    h = 1e-8
    for beta in (1.0, 2.5):
        left = ad.elu(np.array([-h]), beta)[0]
        right = ad.elu(np.array([h]), beta)[0]
        assert abs(left) < 3e-8 * beta and abs(right) < 3e-8 * beta
    # derivative: 1 from the right, beta from the left; continuous when beta = 1
    tape = ad.Tape()
    x = ad.leaf(np.array([-1e-9, 1e-9]), tape)
    y = ad.sum_all(ad.elu(x, 1.0))
    ad.backward(y)
    assert np.allclose(x.grad, [1.0, 1.0], atol=1e-8)


def test_clip_fc_gradient_masks_outside():
    alpha = 1e-7
    tape = ad.Tape()
    x = ad.leaf(np.array([0.5, 2.5, -0.5]), tape)
    y = ad.sum_all(ad.clip_fc(x, alpha))
    ad.backward(y)
    assert np.array_equal(x.grad, [1.0, 0.0, 0.0])


def test_where_mask_gradient():
    mask = np.array([True, False, True])
    x = np.array([1.0, 2.0, 3.0])
    check_grad(lambda v: ad.where_mask(mask, v, ad.mul(v, 2.0)), x)


def test_matmul_and_affine_gradients():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(5, 4))
    W = rng.normal(size=(3, 4))
    b = rng.normal(size=3)
    check_grad(lambda v: ad.matmul(v, W.T), x)
    check_grad(lambda v: ad.affine(v, W, b), x)
    check_grad(lambda v: ad.affine(x, v, b), W)
    check_grad(lambda v: ad.affine(x, W, v), b)
    # value agreement
    assert np.allclose(ad.affine(x, W, b), x @ W.T + b)


def test_structural_gradients():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2, 6))
    check_grad(lambda v: ad.reshape(v, (3, 4)), x)
    check_grad(lambda v: ad.transpose(v), x)
    check_grad(lambda v: ad.stack_last([v, ad.mul(v, 2.0)]), x)
    idx = np.array([0, 0, 3, 5, 1])
    check_grad(lambda v: ad.gather(v, idx), x)


GRAPH = build_graph(Gf2Matrix([[1, 1, 1, 0], [0, 1, 1, 1]]))  # E = 6


def test_segment_sum_values_and_gradients():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, GRAPH.E))
    out = ad.segment_sum(x, GRAPH.chk_starts, GRAPH.chk_deg)
    assert np.allclose(out[:, 0], x[:, :3].sum(axis=1))
    assert np.allclose(out[:, 1], x[:, 3:].sum(axis=1))
    check_grad(lambda v: ad.segment_sum(v, GRAPH.chk_starts, GRAPH.chk_deg), x)


def test_var_segment_sum_matches_matrix():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(2, GRAPH.E))
    out = ad.var_segment_sum(x, GRAPH)
    H = GRAPH.to_matrix()
    expect = np.zeros((2, GRAPH.n_var))
    for e, (i, j) in enumerate(GRAPH.edges):
        expect[:, i] += x[:, e]
    assert np.allclose(out, expect)
    check_grad(lambda v: ad.var_segment_sum(v, GRAPH), x)


def test_expand_to_edges_roundtrip_gradients():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(2, GRAPH.n_var))
    out = ad.expand_to_edges(x, GRAPH)
    assert np.allclose(out, x[:, GRAPH.evar])
    check_grad(lambda v: ad.expand_to_edges(v, GRAPH), x)


def test_loo_prod_values():
    x = np.array([[2.0, 3.0, 5.0, 1.0, 4.0, 0.5]])
    out = ad.loo_prod(x, GRAPH)
    # check 0 covers edges 0..2, check 1 edges 3..5
    assert np.allclose(out[0, :3], [15.0, 10.0, 6.0])
    assert np.allclose(out[0, 3:], [2.0, 0.5, 4.0])


def test_loo_prod_gradient_zero_free():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(2, GRAPH.E)) + 3.0
    w = rng.normal(size=GRAPH.E)
    check_grad(lambda v: ad.mul(ad.loo_prod(v, GRAPH), w), x)


def test_loo_prod_gradient_with_zeros():
    x = np.array([[2.0, 0.0, 5.0, 1.0, 4.0, 0.5]])
    w = np.arange(1.0, 7.0)
    check_grad(lambda v: ad.mul(ad.loo_prod(v, GRAPH), w), x, rtol=1e-5)


def test_grad_accumulates_over_reuse():
    tape = ad.Tape()
    x = ad.leaf(np.array([2.0]), tape)
    y = ad.add(ad.mul(x, x), ad.mul(3.0, x))  # x^2 + 3x
    ad.backward(y)
    assert x.grad[0] == pytest.approx(7.0)


def test_backward_frees_interior_state():
    tape = ad.Tape()
    x = ad.leaf(np.array([1.0, 2.0]), tape)
    y = ad.sum_all(ad.mul(x, x))
    ad.backward(y)
    interior = [n for n in tape.nodes if n is not x and n is not y]
    assert all(n._vjp is None for n in interior)
    assert x.grad is not None


def test_mixed_tapes_rejected():
    t1, t2 = ad.Tape(), ad.Tape()
    a = ad.leaf(np.array([1.0]), t1)
    b = ad.leaf(np.array([1.0]), t2)
    with pytest.raises(ad.UnsupportedNode):
        ad.add(a, b)
