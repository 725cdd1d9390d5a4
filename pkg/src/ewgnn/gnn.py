"""Edge-weighted GNN decoding: residual features, per-edge weights, multiloss.

Each iteration runs in four staged phases over all edges (check messages,
features + weights, variable messages, embeddings): the feature normalization
divides by all-edge means, so a literal edge-by-edge schedule is not
computable.  The staged order preserves the per-edge update semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .msgpass import (
    DecodeResult,
    check_messages,
    hard_decisions,
    posterior_all,
    variable_messages,
    _syndrome_ok,
)
from .neural import FnnModel, fnn_forward


class LengthMismatch(ValueError):
    pass


@dataclass
class EwgnnConfig:
    alpha: float = 1e-7
    T: int = 8
    normalization_epsilon: float = 1e-12

    def __post_init__(self):
        if not 0 < self.alpha < 1e-7 * (1 + 1e-12):
            raise ValueError(f"alpha must be in (0, 1e-7], got {self.alpha}")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.normalization_epsilon <= 0:
            raise ValueError("normalization_epsilon must be positive")


@dataclass
class DecoderState:
    """Current messages/embeddings plus the previous-iteration copies for residuals."""

    mu_c2v: object
    mu_v2c: object
    h: object
    prev_mu_c2v: object
    prev_mu_v2c: object
    prev_h: object
    t: int = 0


def init_state(graph, S):
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    s_edges = S[:, graph.evar]
    zeros = np.zeros_like(s_edges)
    return DecoderState(
        mu_c2v=zeros,
        mu_v2c=s_edges,
        h=S,
        prev_mu_c2v=zeros,
        prev_mu_v2c=s_edges,
        prev_h=S,
        t=0,
    )


class ConstantWeight:
    """Stub weight provider: every edge gets the same constant (1 reduces to BP)."""

    def __init__(self, c=1.0):
        self.c = float(c)

    def __call__(self, features):
        return np.full(ad.val(features).shape[:-1], self.c)


class FnnWeight:
    """Weight provider backed by the shared FNN; params may be tape Vars."""

    def __init__(self, params, elu_beta):
        self.params = params
        self.elu_beta = elu_beta

    def __call__(self, features):
        return fnn_forward(self.params, features, self.elu_beta)


def _normalize(f, eps, count):
    """Divide a feature class by its mean; classes with mean <= eps pass through."""
    mean = ad.mul(ad.segment_sum(f, np.array([0]), np.array([ad.val(f).shape[-1]])), 1.0 / count)
    mask = ad.val(mean) > eps
    denom = ad.where_mask(mask, mean, 1.0)
    return ad.div(f, denom)


def build_features(state, graph, cfg):
    """The per-edge 4-vector of normalized reliability features.

    Requires the current-iteration check messages in state.mu_c2v (t >= 1);
    mu_v2c and h must still hold their previous-iteration values.
    """
    eps = cfg.normalization_epsilon
    f1 = ad.abs_(state.mu_c2v)
    f2 = ad.abs_(ad.sub(state.mu_c2v, state.prev_mu_c2v))
    f3 = ad.abs_(ad.sub(state.mu_v2c, state.prev_mu_v2c))
    f4n = ad.abs_(ad.sub(state.h, state.prev_h))
    f1 = _normalize(f1, eps, graph.E)
    f2 = _normalize(f2, eps, graph.E)
    f3 = _normalize(f3, eps, graph.E)
    f4 = ad.expand_to_edges(_normalize(f4n, eps, graph.n_var), graph)
    return ad.stack_last([f1, f2, f3, f4])


def weight_eval(model, features):
    """Per-edge weights from a frozen model; the same network serves every edge."""
    return fnn_forward(model.params(), features, model.elu_beta)


def _as_provider(model):
    if model is None:
        return ConstantWeight(1.0)
    if isinstance(model, FnnModel):
        return FnnWeight(model.params(), model.elu_beta)
    return model


def decode_iteration(state, graph, S, weight_provider, cfg):
    """Advance the decoder by one iteration (staged phases over all edges)."""
    new_mu_c2v = check_messages(state.mu_v2c, graph, cfg.alpha)
    state.prev_mu_c2v = state.mu_c2v
    state.mu_c2v = new_mu_c2v
    features = build_features(state, graph, cfg)
    w = weight_provider(features)
    new_mu_v2c = variable_messages(S, new_mu_c2v, w, graph)
    new_h = posterior_all(S, new_mu_c2v, w, graph)
    state.prev_mu_v2c = state.mu_v2c
    state.prev_h = state.h
    state.mu_v2c = new_mu_v2c
    state.h = new_h
    state.t += 1
    return state


def ewgnn_unrolled(graph, S, weight_provider, cfg, want_history=True):
    """Forward decode keeping the embedding history; works on arrays or Vars."""
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    state = init_state(graph, S)
    history = []
    for _ in range(cfg.T):
        decode_iteration(state, graph, S, weight_provider, cfg)
        if want_history:
            history.append(state.h)
    return state, history


def ewgnn_decode_batch(graph, S, model, cfg):
    """Inference over a batch of LLR frames; returns (h_T, c_hat, syndrome_ok)."""
    provider = _as_provider(model)
    state, _ = ewgnn_unrolled(graph, S, provider, cfg, want_history=False)
    h = ad.val(state.h)
    c_hat = hard_decisions(h)
    ok = _syndrome_ok(graph, c_hat).all(axis=-1)
    return h, c_hat, ok


def ewgnn_decode(graph, s, model, cfg, want_history=False):
    """Single-frame EW-GNN decode; tie h = 0 decides bit 1."""
    provider = _as_provider(model)
    S = np.atleast_2d(np.asarray(s, dtype=np.float64))
    state, history = ewgnn_unrolled(graph, S, provider, cfg, want_history=want_history)
    h = ad.val(state.h)
    c_hat = hard_decisions(h)
    ok = _syndrome_ok(graph, c_hat).all(axis=-1)
    result = DecodeResult(
        c_hat=c_hat[0], posterior=h[0], iterations_run=cfg.T, syndrome_ok=bool(ok[0])
    )
    if want_history:
        return result, [ad.val(hh)[0] for hh in history]
    return result


def multiloss(h_history, c):
    """Average binary cross-entropy per bit per iteration.

    Uses the numerically stable form c*softplus(h) + (1-c)*softplus(-h) with
    p = 1 / (1 + e^h).  Accepts (B, n) per-iteration entries and (B, n) bits;
    returns the scalar mean over bits, iterations, and frames.
    """
    c = np.atleast_2d(np.asarray(c, dtype=np.float64))
    n = c.shape[-1]
    T = len(h_history)
    if T == 0:
        raise LengthMismatch("empty embedding history")
    total = None
    for h in h_history:
        if ad.val(h).shape[-1] != n:
            raise LengthMismatch(f"embedding length {ad.val(h).shape[-1]} != n={n}")
        term = ad.add(
            ad.mul(c, ad.softplus(h)),
            ad.mul(1.0 - c, ad.softplus(ad.neg(h))),
        )
        tsum = ad.sum_all(term)
        total = tsum if total is None else ad.add(total, tsum)
    frames = int(np.prod(c.shape[:-1])) if c.ndim > 1 else 1
    return ad.mul(total, 1.0 / (n * T * frames))
