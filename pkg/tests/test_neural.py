import math

import numpy as np
import pytest

from ewgnn import autodiff as ad
from ewgnn.neural import (
    AdamState,
    CountMismatch,
    FnnModel,
    NonFiniteInput,
    ParseError,
    ShapeMismatch,
    VersionMismatch,
    adam_step,
    fnn_forward,
    init_fnn,
    model_forward,
    model_load,
    model_save,
)


def tiny_identity_model():
    """Single-path 1x1 layers with w=1, b=0: the positive branch is identity."""
    return FnnModel(
        weights=[np.ones((1, 1)), np.ones((1, 1)), np.ones((1, 1))],
        biases=[np.zeros(1), np.zeros(1), np.zeros(1)],
        elu_beta=1.0,
    )


def test_parameter_count_1249():
    assert init_fnn(0).param_count == 1249


def test_zero_parameter_model_outputs_zero():
    model = init_fnn(0)
    for w in model.weights:
        w[:] = 0.0
    for b in model.biases:
        b[:] = 0.0
    out = model_forward(model, np.array([[0.3, 1.2, 0.0, 4.5]]))
    assert out[0] == 0.0


def test_identity_path_positive_input():
    out = model_forward(tiny_identity_model(), np.array([[2.0]]))
    assert out[0] == pytest.approx(2.0)


def test_single_elu_negative_input():
    model = FnnModel(weights=[np.ones((1, 1))], biases=[np.zeros(1)], elu_beta=1.0)
    out = model_forward(model, np.array([[-1.0]]))
    assert out[0] == pytest.approx(math.exp(-1.0) - 1.0)


def test_forward_rejects_nonfinite():
    with pytest.raises(NonFiniteInput):
        model_forward(init_fnn(0), np.array([[1.0, np.nan, 0.0, 0.0]]))


def test_forward_shape_handling():
    model = init_fnn(3)
    feats = np.random.default_rng(0).normal(size=(5, 7, 4)) ** 2
    out = model_forward(model, feats)
    assert out.shape == (5, 7)
    flat = model_forward(model, feats.reshape(-1, 4))
    assert np.allclose(out.reshape(-1), flat)


def test_forward_records_on_tape():
    model = init_fnn(1)
    tape = ad.Tape()
    params = [ad.leaf(p, tape) for p in model.params()]
    feats = np.abs(np.random.default_rng(1).normal(size=(6, 4)))
    out = fnn_forward(params, feats, model.elu_beta)
    loss = ad.sum_all(out)
    ad.backward(loss)
    assert all(p.grad is not None for p in params)


def test_init_starts_near_unit_weight():
    out = model_forward(init_fnn(2), np.ones((8, 4)))
    assert np.all(np.abs(out - 1.0) < 0.2)


# -- Adam -------------------------------------------------------------------


def test_adam_first_step_is_signed_eta():
    state = AdamState(eta=1e-3)
    p = [np.array([1.0, -2.0, 0.5])]
    g = [np.array([0.3, -0.7, 4.0])]
    out = adam_step(state, p, g)
    # bias-corrected first step: -eta * g / (|g| + ~eps) ~ -eta * sign(g)
    assert np.allclose(out[0] - p[0], -1e-3 * np.sign(g[0]), atol=1e-6)
    assert state.step == 1


def test_adam_zero_gradient_leaves_params():
    state = AdamState(eta=1e-3)
    p = [np.array([1.0, 2.0])]
    out = adam_step(state, p, [np.zeros(2)])
    assert np.array_equal(out[0], p[0])


def test_adam_eta_zero_moves_moments_only():
    state = AdamState(eta=0.0)
    p = [np.array([1.0])]
    g = [np.array([2.0])]
    out = adam_step(state, p, g)
    out = adam_step(state, out, g)
    assert np.array_equal(out[0], p[0])
    assert state.m[0][0] != 0.0 and state.v[0][0] > 0.0


def test_adam_shape_mismatch():
    state = AdamState(eta=1e-3)
    with pytest.raises(ShapeMismatch):
        adam_step(state, [np.zeros(3)], [np.zeros(2)])


# -- serialization ----------------------------------------------------------


def test_save_load_round_trip_bit_exact():
    model = init_fnn(17)
    loaded = model_load(model_save(model))
    for a, b in zip(model.params(), loaded.params()):
        assert np.array_equal(a, b)
    assert loaded.alpha == model.alpha and loaded.elu_beta == model.elu_beta


def test_load_missing_header():
    with pytest.raises(VersionMismatch):
        model_load("alpha 1e-7\n")


def test_load_wrong_value_count():
    text = model_save(init_fnn(0))
    lines = text.splitlines()
    w3 = lines[-2].split()
    lines[-2] = " ".join(w3[:-1])  # drop one of the 1249 values
    with pytest.raises(CountMismatch):
        model_load("\n".join(lines))


def test_load_bad_decimal():
    text = model_save(init_fnn(0)).replace("W1 ", "W1 nope ", 1)
    with pytest.raises(ParseError):
        model_load(text)


def test_load_truncated():
    text = "\n".join(model_save(init_fnn(0)).splitlines()[:5])
    with pytest.raises(ParseError):
        model_load(text)


def test_model_file_has_no_code_reference():
    # the format carries only alpha, beta, arch, and parameters
    text = model_save(init_fnn(4))
    first_tokens = {ln.split()[0] for ln in text.splitlines()}
    assert first_tokens == {"EWGNN", "alpha", "elu_beta", "arch", "W1", "b1", "W2", "b2", "W3", "b3"}
