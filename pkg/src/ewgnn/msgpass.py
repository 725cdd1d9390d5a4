"""Classical belief propagation (exact and clipped kernels), NBP, hard decision.

The batched helpers here are shared with the edge-weighted GNN decoder: both
run the identical clipped check kernel and the identical exclusion arithmetic,
so decoders agree bit-for-bit whenever their weights coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad


class Saturation(ArithmeticError):
    pass


class SizeMismatch(ValueError):
    pass


@dataclass
class DecodeResult:
    c_hat: np.ndarray
    posterior: np.ndarray
    iterations_run: int
    syndrome_ok: bool


@dataclass
class NbpWeights:
    """The 2E tied NBP parameters: per-edge message weights and output weights."""

    w_edge: np.ndarray
    w_out: np.ndarray

    def copy(self):
        return NbpWeights(self.w_edge.copy(), self.w_out.copy())


def unit_nbp_weights(E):
    return NbpWeights(w_edge=np.ones(E), w_out=np.ones(E))


# ---------------------------------------------------------------------------
# Scalar kernels (reference semantics; the batch path mirrors them)


def check_update_exact(incoming):
    """2 atanh(prod tanh(m/2)) over the excluded-neighbor messages."""
    p = 1.0
    for m in incoming:
        p *= math.tanh(0.5 * m)
    if abs(p) >= 1.0:
        raise Saturation(f"product {p} outside (-1, 1); use the clipped kernel")
    return 2.0 * math.atanh(p)


def check_update_clipped(incoming, alpha):
    """Totalized check update: ln(f_c(1+P, a) / f_c(1-P, a)) with P the tanh product."""
    p = 1.0
    for m in incoming:
        p *= math.tanh(0.5 * m)
    lo, hi = alpha, 2.0 - alpha
    num = min(max(1.0 + p, lo), hi)
    den = min(max(1.0 - p, lo), hi)
    return math.log(num) - math.log(den)


def variable_update(s_i, incoming):
    """s_i plus the weighted excluded-neighbor sum; incoming is (message, weight) pairs."""
    out = s_i
    for m, w in incoming:
        out += w * m
    return out


def posterior(s_i, incoming):
    """Same sum as variable_update but over the full neighborhood."""
    return variable_update(s_i, incoming)


def hard_decision(llr):
    """Bit estimate from an LLR; ties at exactly 0 decide 1."""
    return 1 if llr <= 0 else 0


# ---------------------------------------------------------------------------
# Batched message passing (plain arrays or tape Vars)


def check_messages(mu_v2c, graph, alpha):
    t = ad.mul(mu_v2c, 0.5)
    t = ad.tanh(t)
    P = ad.loo_prod(t, graph)
    num = ad.clip_fc(ad.add(1.0, P), alpha)
    den = ad.clip_fc(ad.sub(1.0, P), alpha)
    return ad.sub(ad.log(num), ad.log(den))


def _weighted(mu_c2v, w):
    return mu_c2v if w is None else ad.mul(w, mu_c2v)


def variable_messages(S, mu_c2v, w, graph):
    """Per-edge extrinsic sums: s_v + (total incident sum) - own weighted message."""
    wmu = _weighted(mu_c2v, w)
    base = ad.add(S, ad.var_segment_sum(wmu, graph))
    return ad.sub(ad.expand_to_edges(base, graph), wmu)


def posterior_all(S, mu_c2v, w, graph):
    wmu = _weighted(mu_c2v, w)
    return ad.add(S, ad.var_segment_sum(wmu, graph))


def hard_decisions(post):
    return (ad.val(post) <= 0.0).astype(np.uint8)


def _syndrome_ok(graph, c_hat):
    H = graph.to_matrix().astype(np.int64)
    return (c_hat.astype(np.int64) @ H.T) % 2 == 0


def bp_decode_batch(graph, S, T, alpha, weights=None, early_stop=False):
    """Flooding BP / NBP over a batch of LLR frames S of shape (B, n).

    Returns (posterior (B, n), c_hat (B, n), iterations (B,), syndrome_ok (B,)).
    """
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    B = S.shape[0]
    w_edge = w_out = None
    if weights is not None:
        if weights.w_edge.shape != (graph.E,) or weights.w_out.shape != (graph.E,):
            raise SizeMismatch(f"NBP weights must be sized {graph.E}")
        w_edge, w_out = weights.w_edge, weights.w_out
    mu_v2c = S[:, graph.evar]
    post = None
    final_post = np.empty_like(S)
    iters = np.full(B, T, dtype=np.int64)
    done = np.zeros(B, dtype=bool)
    for t in range(1, T + 1):
        mu_c2v = check_messages(mu_v2c, graph, alpha)
        mu_v2c = variable_messages(S, mu_c2v, w_edge, graph)
        if early_stop:
            post = posterior_all(S, mu_c2v=mu_c2v, w=w_out, graph=graph)
            ok = _syndrome_ok(graph, hard_decisions(post)).all(axis=-1)
            newly = ok & ~done
            final_post[newly] = post[newly]
            iters[newly] = t
            done |= newly
            if done.all():
                break
    if not early_stop:
        final_post = posterior_all(S, mu_c2v=mu_c2v, w=w_out, graph=graph)
    else:
        if post is None:
            post = posterior_all(S, mu_c2v=mu_c2v, w=w_out, graph=graph)
        final_post[~done] = post[~done]
    c_hat = hard_decisions(final_post)
    ok = _syndrome_ok(graph, c_hat).all(axis=-1)
    return final_post, c_hat, iters, ok


def bp_decode(graph, s, T, alpha, early_stop=False):
    """Single-frame clipped BP; see :func:`bp_decode_batch`."""
    post, c_hat, iters, ok = bp_decode_batch(graph, s, T, alpha, early_stop=early_stop)
    return DecodeResult(c_hat=c_hat[0], posterior=post[0], iterations_run=int(iters[0]), syndrome_ok=bool(ok[0]))


def nbp_decode(graph, s, T, weights, alpha, early_stop=False):
    """Single-frame NBP with tied 2E weights."""
    post, c_hat, iters, ok = bp_decode_batch(graph, s, T, alpha, weights=weights, early_stop=early_stop)
    return DecodeResult(c_hat=c_hat[0], posterior=post[0], iterations_run=int(iters[0]), syndrome_ok=bool(ok[0]))


def nbp_unrolled(graph, S, w_edge, w_out, T, alpha, want_history=False):
    """Differentiable NBP forward pass; weights may be tape Vars.

    Returns the final posterior, or the per-iteration posterior history.
    """
    mu_v2c = S[:, graph.evar]
    history = []
    for t in range(1, T + 1):
        mu_c2v = check_messages(mu_v2c, graph, alpha)
        mu_v2c = variable_messages(S, mu_c2v, w_edge, graph)
        if want_history or t == T:
            history.append(posterior_all(S, mu_c2v, w_out, graph))
    return history if want_history else history[-1]
