"""End-to-end training of the edge-weight network (or the NBP baseline).

One epoch draws one fresh batch (random messages, random per-frame SNR in the
configured range), unrolls the decoder on a tape, takes the batch-mean loss,
and applies a single Adam step.  Everything is keyed off (seed, epoch, frame)
streams, so a (seed, config) pair reproduces the identical model bit-for-bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .channel import derive_stream, llr_from_channel, sigma_from_snr_db
from .codes import encode
from .gnn import EwgnnConfig, FnnWeight, ewgnn_unrolled, multiloss
from .msgpass import NbpWeights, nbp_unrolled
from .neural import AdamState, FnnModel, adam_step, model_save
from .tanner import build_graph


class DivergedLoss(RuntimeError):
    pass


_LBL_MESSAGE = 1
_LBL_SNR = 2
_LBL_NOISE = 3


@dataclass
class TrainConfig:
    code: object
    batch_size: int = 500
    snr_range: tuple = (1.0, 8.0)
    T: int = 8
    eta: float = 1e-3
    epochs: int = 2000
    seed: int = 1
    alpha: float = 1e-7
    checkpoint_every: int = 0
    checkpoint_path: str = ""
    multiloss_nbp: bool = False  # NBP default trains on the final posterior only
    lr_decay: bool = True       # x0.1 at 60% and 85% of epochs, floored at 1e-5

    def __post_init__(self):
        if self.snr_range[0] > self.snr_range[1]:
            raise ValueError("snr_range must be ordered")
        if self.batch_size < 1 or self.T < 1:
            raise ValueError("batch_size and T must be >= 1")


@dataclass
class TrainReport:
    losses: list
    wall_time: float
    final_model: object
    seed: int


def learning_rate(cfg, epoch):
    if not cfg.lr_decay:
        return cfg.eta
    frac = epoch / max(cfg.epochs, 1)
    eta = cfg.eta
    if frac >= 0.60:
        eta *= 0.1
    if frac >= 0.85:
        eta *= 0.1
    return max(eta, 1e-5)


def sample_batch(cfg, epoch):
    """One batch of (codeword, LLR) pairs, each frame at its own random SNR."""
    code = cfg.code
    B = cfg.batch_size
    C = np.empty((B, code.n), dtype=np.uint8)
    S = np.empty((B, code.n))
    lo, hi = cfg.snr_range
    for f in range(B):
        msg_rng = derive_stream(cfg.seed, [epoch, f, _LBL_MESSAGE])
        b = (msg_rng.uniform64(code.k) & np.uint64(1)).astype(np.int64)
        c = encode(code, b)
        snr_rng = derive_stream(cfg.seed, [epoch, f, _LBL_SNR])
        gamma = lo + (hi - lo) * snr_rng.uniforms(1)[0]
        params = sigma_from_snr_db(gamma)
        noise_rng = derive_stream(cfg.seed, [epoch, f, _LBL_NOISE])
        x = 1.0 - 2.0 * c
        y = x + params.sigma * noise_rng.gaussians(code.n)
        C[f] = c
        S[f] = llr_from_channel(y, params.sigma2)
    return C, S


def _forward_loss(graph, S, C, params, init, cfg, decoder_cfg):
    if isinstance(init, FnnModel):
        provider = FnnWeight(params, init.elu_beta)
        _, history = ewgnn_unrolled(graph, S, provider, decoder_cfg, want_history=True)
        return multiloss(history, C)
    w_edge, w_out = params
    if cfg.multiloss_nbp:
        history = nbp_unrolled(graph, S, w_edge, w_out, cfg.T, cfg.alpha, want_history=True)
        return multiloss(history, C)
    post = nbp_unrolled(graph, S, w_edge, w_out, cfg.T, cfg.alpha)
    return multiloss([post], C)


def train(cfg, init):
    """Algorithm: per epoch, one fresh batch, one Adam step on the batch loss.

    `init` is either an FnnModel (edge-weight network) or NbpWeights; the
    trained object of the same type is returned inside the TrainReport.
    """
    t0 = time.time()
    graph = build_graph(cfg.code.parity)
    decoder_cfg = EwgnnConfig(alpha=cfg.alpha, T=cfg.T)
    if isinstance(init, FnnModel):
        param_values = [p.copy() for p in init.params()]
    elif isinstance(init, NbpWeights):
        if init.w_edge.shape != (graph.E,):
            raise ValueError(f"NBP weights must be sized {graph.E}")
        param_values = [init.w_edge.copy(), init.w_out.copy()]
    else:
        raise TypeError(f"cannot train a {type(init).__name__}")
    adam = AdamState(eta=cfg.eta)
    losses = []
    for epoch in range(cfg.epochs):
        C, S = sample_batch(cfg, epoch)
        tape = ad.Tape()
        params = [ad.leaf(p, tape) for p in param_values]
        loss = _forward_loss(graph, S, C, params, init, cfg, decoder_cfg)
        loss_val = float(ad.val(loss))
        if not np.isfinite(loss_val):
            raise DivergedLoss(f"non-finite loss {loss_val} at epoch {epoch}")
        losses.append(loss_val)
        ad.backward(loss)
        grads = [p.grad if p.grad is not None else np.zeros_like(p.value) for p in params]
        tape.nodes.clear()  # break Var<->Tape cycles so memory frees immediately
        adam.eta = learning_rate(cfg, epoch)
        param_values = adam_step(adam, param_values, grads)
        if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0 and cfg.checkpoint_path:
            _write_checkpoint(cfg, init, param_values, epoch + 1, loss_val)
    final = _materialize(init, param_values)
    return TrainReport(losses=losses, wall_time=time.time() - t0, final_model=final, seed=cfg.seed)


def _materialize(init, param_values):
    if isinstance(init, FnnModel):
        model = init.copy()
        model.set_params(param_values)
        return model
    return NbpWeights(w_edge=param_values[0].copy(), w_out=param_values[1].copy())


def _write_checkpoint(cfg, init, param_values, step, loss_val):
    model = _materialize(init, param_values)
    path = cfg.checkpoint_path
    if isinstance(model, FnnModel):
        text = model_save(model)
    else:
        text = save_nbp_weights(model, cfg.alpha)
    with open(path, "w") as f:
        f.write(text)
    with open(path + ".meta", "a") as f:
        f.write(f"step {step} loss {loss_val:.17g}\n")


def save_nbp_weights(weights, alpha):
    E = weights.w_edge.size
    lines = [
        "NBPW v1",
        f"alpha {alpha:.17g}",
        f"E {E}",
        "w_edge " + " ".join(format(x, '.17g') for x in weights.w_edge),
        "w_out " + " ".join(format(x, '.17g') for x in weights.w_out),
    ]
    return "\n".join(lines) + "\n"


def load_nbp_weights(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != "NBPW v1":
        raise ValueError("missing 'NBPW v1' header")
    E = int(lines[2].split()[1])
    w_edge = np.array([float(t) for t in lines[3].split()[1:]])
    w_out = np.array([float(t) for t in lines[4].split()[1:]])
    if w_edge.size != E or w_out.size != E:
        raise ValueError(f"weight count mismatch: declared E={E}")
    return NbpWeights(w_edge=w_edge, w_out=w_out)
