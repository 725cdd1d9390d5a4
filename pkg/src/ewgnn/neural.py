"""The 4->32->32->1 ELU feed-forward weight network, Adam, and model files."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .channel import derive_stream


class ParseError(ValueError):
    pass


class VersionMismatch(ParseError):
    pass


class CountMismatch(ParseError):
    pass


class ShapeMismatch(ValueError):
    pass


class NonFiniteInput(ValueError):
    pass


CANONICAL_DIMS = (4, 32, 32, 1)


@dataclass
class FnnModel:
    """Per-edge weight network: affine layers with ELU on every layer, output included."""

    weights: list  # per-layer (out, in) arrays
    biases: list   # per-layer (out,) arrays
    elu_beta: float = 1.0
    alpha: float = 1e-7  # clip factor carried alongside for serialization

    @property
    def layer_dims(self):
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def param_count(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def params(self):
        """Parameter arrays in a fixed order (W1, b1, W2, b2, ...)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_params(self, params):
        it = iter(params)
        for i in range(len(self.weights)):
            self.weights[i] = np.asarray(next(it), dtype=np.float64)
            self.biases[i] = np.asarray(next(it), dtype=np.float64)

    def copy(self):
        return FnnModel(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            elu_beta=self.elu_beta,
            alpha=self.alpha,
        )


def init_fnn(seed, alpha=1e-7, elu_beta=1.0, dims=CANONICAL_DIMS, weight_scale=0.05):
    """Fresh model whose output starts near 1, i.e. near plain BP behaviour.

    Hidden weights are small Gaussians; the output bias is 1 so the initial
    per-edge weight is approximately ELU(1) = 1.
    """
    rng = derive_stream(seed, [0xF33])
    weights, biases = [], []
    for lin, lout in zip(dims[:-1], dims[1:]):
        w = rng.gaussians(lout * lin).reshape(lout, lin) * (weight_scale / np.sqrt(lin))
        weights.append(w)
        biases.append(np.zeros(lout))
    biases[-1][:] = 1.0
    return FnnModel(weights=weights, biases=biases, elu_beta=elu_beta, alpha=alpha)


def fnn_forward(model_params, features, elu_beta, tape=None):
    """Evaluate the network on features of shape (..., in_dim).

    `model_params` is the flat parameter list from :meth:`FnnModel.params`
    (arrays or tape Vars).  Returns shape (...,) with the trailing unit
    output axis dropped.
    """
    x = features
    xv = ad.val(x)
    if not np.all(np.isfinite(xv)):
        raise NonFiniteInput("features contain non-finite values")
    lead = xv.shape[:-1]
    x = ad.reshape(x, (-1, xv.shape[-1])) if xv.ndim != 2 else x
    nlayers = len(model_params) // 2
    for l in range(nlayers):
        W, b = model_params[2 * l], model_params[2 * l + 1]
        x = ad.elu(ad.affine(x, W, b), elu_beta)
    return ad.reshape(x, lead)


def model_forward(model, features):
    """Plain inference on a frozen model; features (..., 4) -> weights (...)."""
    return fnn_forward(model.params(), np.asarray(features, dtype=np.float64), model.elu_beta)


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    eta: float
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_step(state, params, grads):
    """One Adam update with bias correction; returns the updated parameter list."""
    if len(params) != len(grads):
        raise ShapeMismatch(f"{len(params)} params vs {len(grads)} grads")
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape:
            raise ShapeMismatch(f"param shape {p.shape} vs grad shape {g.shape}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    out = []
    for i, (p, g) in enumerate(zip(params, grads)):
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        mhat = state.m[i] / corr1
        vhat = state.v[i] / corr2
        out.append(p - state.eta * mhat / (np.sqrt(vhat) + state.eps))
    return out


# ---------------------------------------------------------------------------
# Serialization (17-significant-digit decimal round-trip)


def _fmt(x):
    return format(float(x), ".17g")


def model_save(model):
    lines = [
        "EWGNN v1",
        f"alpha {_fmt(model.alpha)}",
        f"elu_beta {_fmt(model.elu_beta)}",
        "arch " + " ".join(str(d) for d in model.layer_dims),
    ]
    for l, (w, b) in enumerate(zip(model.weights, model.biases), start=1):
        lines.append(f"W{l} " + " ".join(_fmt(x) for x in w.ravel()))
        lines.append(f"b{l} " + " ".join(_fmt(x) for x in b))
    return "\n".join(lines) + "\n"


def model_load(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "EWGNN v1":
        raise VersionMismatch("missing 'EWGNN v1' header")

    def tagged(idx, tag):
        if idx >= len(lines):
            raise ParseError(f"truncated file, expected '{tag}'")
        parts = lines[idx].split()
        if parts[0] != tag:
            raise ParseError(f"expected '{tag}', got '{parts[0]}'")
        return parts[1:]

    try:
        alpha = float(tagged(1, "alpha")[0])
        elu_beta = float(tagged(2, "elu_beta")[0])
        dims = tuple(int(d) for d in tagged(3, "arch"))
    except (ValueError, IndexError) as exc:
        raise ParseError(f"bad header field: {exc}") from None
    weights, biases = [], []
    idx = 4
    for l, (lin, lout) in enumerate(zip(dims[:-1], dims[1:]), start=1):
        try:
            wvals = [float(t) for t in tagged(idx, f"W{l}")]
            bvals = [float(t) for t in tagged(idx + 1, f"b{l}")]
        except ValueError as exc:
            raise ParseError(f"bad decimal in layer {l}: {exc}") from None
        if len(wvals) != lout * lin or len(bvals) != lout:
            raise CountMismatch(
                f"layer {l}: got {len(wvals)}+{len(bvals)} values, expected {lout * lin}+{lout}"
            )
        weights.append(np.array(wvals).reshape(lout, lin))
        biases.append(np.array(bvals))
        idx += 2
    model = FnnModel(weights=weights, biases=biases, elu_beta=elu_beta, alpha=alpha)
    if dims == CANONICAL_DIMS and model.param_count != 1249:
        raise CountMismatch(f"canonical model has {model.param_count} parameters, expected 1249")
    return model
